"""Shared fixtures, and the acceptance-criteria summary printed after runs."""

import re

import numpy as np
import pytest

from arotnep.datasets import load_dataset
from arotnep.ellipsoid import EllipsoidalSet, std_from_interval
from arotnep.network import annualize_costs

# ---------------------------------------------------------------------------
# acceptance-criteria reporting
#
# Tests named ``test_criterion_<nn>_*`` (see test_acceptance.py) are tracked
# here so the run ends with one PASS/FAIL line per criterion, whatever way
# the test finished.

ACCEPTANCE_TITLES = {
    1: "zero-radius plan equals the deterministic optimum",
    2: "interval-to-ellipsoid radius identities",
    3: "simulated non-exceedance matches the planned quantile",
    4: "closed-form boundary step matches a brute-force maximizer",
    5: "interval-limited step is feasible and matches exact enumeration",
    6: "decomposition matches exhaustive plan enumeration",
    7: "LP and mixed-binary solvers match enumeration oracles",
    8: "dispatch-cost gradients match central differences",
    9: "objective is nondecreasing in the set radius",
    10: "negative generator correlation changes the plan and lowers cost",
}
ACCEPTANCE_RESULTS: dict[int, bool] = {}
ACCEPTANCE_DETAILS: dict[int, str] = {}


def record_acceptance_detail(criterion: int, text: str) -> None:
    ACCEPTANCE_DETAILS[criterion] = text


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    match = re.match(r"test_criterion_(\d+)", item.name)
    if match is not None:
        num = int(match.group(1))
        if report.when == "call":
            ACCEPTANCE_RESULTS[num] = bool(report.passed)
        elif report.failed or report.skipped:
            ACCEPTANCE_RESULTS[num] = False
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if ACCEPTANCE_RESULTS[num] else "FAIL"
        line = f"criterion {num:2d} — {ACCEPTANCE_TITLES.get(num, '')}: {verdict}"
        detail = ACCEPTANCE_DETAILS.get(num)
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


def interval_uncertainty(net, beta, *, gen_fraction=0.5, demand_fraction=0.2,
                         z=2.3263, correlation=None, bounded=True,
                         sign_restricted=True):
    """Uncertainty set in the bundled-study style: symmetric intervals of
    ``fraction * nominal`` around each uncertain parameter, with standard
    deviations scaled so the z-sigma point sits at the interval edge."""
    mean = net.nominal_uncertain()
    frac = np.array([gen_fraction] * len(net.generators)
                    + [demand_fraction] * len(net.demands))
    half_width = frac * mean
    std = std_from_interval(half_width, z)
    if correlation is None:
        correlation = np.eye(net.n_uncertain)
    return EllipsoidalSet.from_std_and_correlation(
        mean, std, correlation, beta,
        half_width=half_width if bounded else None,
        signs=net.uncertain_signs() if sign_restricted else None)


@pytest.fixture
def onebus():
    return load_dataset("onebus")


@pytest.fixture
def twobus():
    return load_dataset("twobus")


@pytest.fixture
def twobus_annual():
    return annualize_costs(load_dataset("twobus"), 25, 0.1)


@pytest.fixture
def garver():
    return load_dataset("garver6")


@pytest.fixture
def garver_annual():
    return annualize_costs(load_dataset("garver6"), 25, 0.1)
