"""Monte Carlo pricing of a fixed expansion plan.

Draws Gaussian scenarios with the uncertainty set's mean and covariance,
prices each one with the dispatch model, and reports how often the realized
operating cost stays at or below the planned worst-case quantile.  The
report carries the empirical non-exceedance probability, summary statistics
with a fitted normal, and a histogram (Freedman-Diaconis bin width, at
least 10 bins whenever the costs spread at all).

Reports can be written as CSV (one row per histogram bin plus a summary
block; see :func:`emit_report` for the row layout) or as plain text, and
the CSV round-trips through :func:`read_report_csv`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .ellipsoid import EllipsoidalSet
from .errors import ArotnepError, ParseError, ValidationError
from .network import Network
from .opf import solve_opf

SUMMARY_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class SimulationStudy:
    """What to simulate: sample count, seed, and the planned quantile."""

    n_samples: int
    seed: int
    q_star: float
    radius: float

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError(
                f"n_samples must be at least 1, got {self.n_samples}")
        if math.isnan(self.q_star):
            raise ValidationError("q_star must not be NaN")
        if self.radius < 0.0 or not math.isfinite(self.radius):
            raise ValidationError(
                f"radius must be finite and nonnegative, got {self.radius}")


@dataclass
class SimulationReport:
    """Empirical pricing of a plan against sampled scenarios."""

    n_samples: int
    seed: int
    q_star: float
    radius: float
    non_exceedance: float
    costs: np.ndarray
    mean: float
    std: float
    quantiles: dict[float, float]
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    clipped_samples: int
    failed_samples: int
    built: tuple[str, ...] = field(default_factory=tuple)


def sample_scenarios(es: EllipsoidalSet, n_samples: int, seed: int) -> np.ndarray:
    """``n_samples`` Gaussian draws (one per row) with the set's mean and
    covariance; identical seeds give identical draws."""
    if n_samples < 1:
        raise ValidationError(f"n_samples must be at least 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    return es.sample(rng, n_samples)


def _histogram(costs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Freedman-Diaconis histogram with at least 10 bins; a spread-free
    sample collapses to a single bin holding everything."""
    lo = float(np.min(costs))
    hi = float(np.max(costs))
    span = hi - lo
    if span <= 1e-12 * (1.0 + abs(hi)):
        pad = max(1e-9, 1e-9 * abs(hi))
        edges = np.array([lo - pad, hi + pad])
        return edges, np.array([costs.size])
    q25, q75 = np.percentile(costs, [25.0, 75.0])
    iqr = float(q75 - q25)
    if iqr > 0.0:
        width = 2.0 * iqr / costs.size ** (1.0 / 3.0)
        bins = max(10, int(math.ceil(span / width)))
    else:
        bins = 10
    counts, edges = np.histogram(costs, bins=bins, range=(lo, hi))
    return edges, counts


def run_simulation(net: Network, built, es: EllipsoidalSet,
                   study: SimulationStudy) -> SimulationReport:
    """Price ``built`` against sampled scenarios and compare each cost with
    the planned quantile ``study.q_star``.

    Samples whose dispatch fails are counted and excluded from the cost
    statistics; shedding keeps dispatch feasible, so failures indicate a
    numerical problem rather than an expensive scenario.
    """
    if es.dim != net.n_uncertain:
        raise ValidationError("uncertainty set dimension does not match network")
    built = frozenset(built)
    draws = sample_scenarios(es, study.n_samples, study.seed)

    costs = np.full(study.n_samples, np.nan)
    clipped = 0
    failed = 0
    for i in range(study.n_samples):
        try:
            sol = solve_opf(net, d=draws[i], built=built)
        except ArotnepError:
            failed += 1
            continue
        costs[i] = sol.objective
        if sol.clipped > 0:
            clipped += 1

    ok = costs[np.isfinite(costs)]
    if ok.size == 0:
        raise ValidationError("every sampled scenario failed to price")
    non_exceedance = float(np.sum(ok <= study.q_star)) / study.n_samples
    edges, counts = _histogram(ok)
    quantiles = {q: float(np.quantile(ok, q)) for q in SUMMARY_QUANTILES}
    return SimulationReport(
        n_samples=study.n_samples, seed=study.seed, q_star=study.q_star,
        radius=study.radius, non_exceedance=non_exceedance, costs=costs,
        mean=float(np.mean(ok)), std=float(np.std(ok)), quantiles=quantiles,
        bin_edges=edges, bin_counts=counts, clipped_samples=clipped,
        failed_samples=failed, built=tuple(sorted(built)))


# ---------------------------------------------------------------------------
# report output

_SUMMARY_FLOAT_KEYS = ("q_star", "radius", "non_exceedance", "mean", "std")
_SUMMARY_INT_KEYS = ("n_samples", "seed", "clipped_samples", "failed_samples")


def emit_report(report: SimulationReport, path, fmt: str = "csv") -> None:
    """Write the report as ``csv`` or ``text``.

    CSV rows are ``summary,<key>,<value>`` followed by
    ``bin,<lower>,<upper>,<count>``, one row per histogram bin; floats are
    written with full precision so reparsing reproduces them exactly.
    """
    if fmt == "csv":
        _emit_csv(report, path)
    elif fmt == "text":
        _emit_text(report, path)
    else:
        raise ValidationError(f"unknown report format {fmt!r}")


def _summary_items(report: SimulationReport):
    for key in _SUMMARY_INT_KEYS:
        yield key, str(getattr(report, key))
    for key in _SUMMARY_FLOAT_KEYS:
        yield key, repr(float(getattr(report, key)))
    for q in sorted(report.quantiles):
        yield f"quantile_{q}", repr(float(report.quantiles[q]))
    yield "built", " ".join(report.built)


def _emit_csv(report: SimulationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for key, value in _summary_items(report):
            writer.writerow(["summary", key, value])
        for i in range(report.bin_counts.size):
            writer.writerow(["bin", repr(float(report.bin_edges[i])),
                             repr(float(report.bin_edges[i + 1])),
                             int(report.bin_counts[i])])


def _emit_text(report: SimulationReport, path) -> None:
    lines = ["simulation report", "-----------------"]
    for key, value in _summary_items(report):
        lines.append(f"{key}: {value}")
    lines.append("")
    lines.append("histogram (lower, upper, count):")
    for i in range(report.bin_counts.size):
        lines.append(f"  [{report.bin_edges[i]:.6g}, "
                     f"{report.bin_edges[i + 1]:.6g}]  "
                     f"{int(report.bin_counts[i])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report_csv(path) -> tuple[dict[str, str], np.ndarray, np.ndarray]:
    """Reparse an emitted CSV report: the summary block as a string map plus
    the histogram edges and counts."""
    summary: dict[str, str] = {}
    lowers: list[float] = []
    uppers: list[float] = []
    counts: list[int] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if row[0] == "summary" and len(row) == 3:
                summary[row[1]] = row[2]
            elif row[0] == "bin" and len(row) == 4:
                lowers.append(float(row[1]))
                uppers.append(float(row[2]))
                counts.append(int(row[3]))
            else:
                raise ParseError(f"unrecognized report row: {row!r}")
    if not counts:
        raise ParseError("report holds no histogram rows")
    edges = np.array(lowers + [uppers[-1]])
    if not np.allclose(edges[1:-1], np.array(uppers[:-1])):
        raise ParseError("histogram bins are not contiguous")
    return summary, edges, np.array(counts)
