"""Power network model and its JSON file interface.

A network bundles buses, existing and candidate transmission lines,
generators and demands, together with the study-wide economic settings
(budget, operating-hours weighting factor, currency). Files are strictly
validated: unknown keys, wrong types and dangling references are rejected
rather than ignored, so a network that loads is a network the solvers can
trust.

Uncertain parameter order
-------------------------
Every consumer of uncertainty data in this package lists parameters as all
generator capacities (file order) followed by all demand loads (file order);
:meth:`Network.uncertain_ids` and :meth:`Network.nominal_uncertain` define
that order once.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ValidationError

SCHEMA_VERSION = 1
LINE_EXISTING = "existing"
LINE_CANDIDATE = "candidate"


@dataclass(frozen=True)
class Bus:
    id: str
    reference: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float
    capacity_mw: float
    status: str
    build_cost: float = 0.0


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    capacity_mw: float
    marginal_cost: float


@dataclass(frozen=True)
class Demand:
    id: str
    bus: str
    load_mw: float
    bid_price: float
    shed_cost: float


@dataclass
class Network:
    name: str
    currency: str
    base_mva: float
    budget: float
    weighting_factor_hours: float
    max_parallel_lines: int
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    demands: tuple[Demand, ...]

    @cached_property
    def bus_index(self) -> dict[str, int]:
        return {bus.id: i for i, bus in enumerate(self.buses)}

    @cached_property
    def reference_bus(self) -> str:
        return next(bus.id for bus in self.buses if bus.reference)

    @property
    def existing_lines(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.status == LINE_EXISTING)

    @property
    def candidate_lines(self) -> tuple[Line, ...]:
        return tuple(ln for ln in self.lines if ln.status == LINE_CANDIDATE)

    @property
    def n_uncertain(self) -> int:
        return len(self.generators) + len(self.demands)

    @cached_property
    def uncertain_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.generators) + tuple(d.id for d in self.demands)

    def nominal_uncertain(self) -> np.ndarray:
        """Nominal values of the uncertain parameters: generator capacities
        followed by demand loads."""
        return np.array([g.capacity_mw for g in self.generators]
                        + [d.load_mw for d in self.demands])

    def uncertain_signs(self) -> np.ndarray:
        """-1 for parameters that only deviate downward (capacities),
        +1 for those that only deviate upward (loads)."""
        return np.array([-1.0] * len(self.generators) + [+1.0] * len(self.demands))


# ---------------------------------------------------------------------------
# parsing


def _require_keys(obj: dict, allowed: set[str], required: set[str], ctx: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"{ctx}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError(f"{ctx}: missing key(s) {sorted(missing)}")


def _get_num(obj: dict, key: str, ctx: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{ctx}: {key} must be a number, got {v!r}")
    return float(v)


def _get_int(obj: dict, key: str, ctx: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{ctx}: {key} must be an integer, got {v!r}")
    return v


def _get_str(obj: dict, key: str, ctx: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise ParseError(f"{ctx}: {key} must be a string, got {v!r}")
    return v


def _get_id(obj: dict, ctx: str) -> str:
    v = obj["id"]
    if isinstance(v, bool):
        raise ParseError(f"{ctx}: id must be a string or integer, got {v!r}")
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str) and v:
        return v
    raise ParseError(f"{ctx}: id must be a non-empty string or integer, got {v!r}")


def network_from_dict(data: dict) -> Network:
    """Build and validate a :class:`Network` from parsed JSON data."""
    if not isinstance(data, dict):
        raise ParseError("network file must contain a JSON object")
    top_allowed = {"schema_version", "name", "currency", "base_mva", "budget",
                   "weighting_factor_hours", "max_parallel_lines", "buses",
                   "lines", "generators", "demands"}
    top_required = top_allowed - {"currency"}
    _require_keys(data, top_allowed, top_required, "network")
    version = _get_int(data, "schema_version", "network")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version}, expected {SCHEMA_VERSION}")

    for key in ("buses", "lines", "generators", "demands"):
        if not isinstance(data[key], list):
            raise ParseError(f"network: {key} must be an array")

    buses = []
    for i, entry in enumerate(data["buses"]):
        ctx = f"buses[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{ctx}: expected an object")
        _require_keys(entry, {"id", "reference"}, {"id"}, ctx)
        ref = entry.get("reference", False)
        if not isinstance(ref, bool):
            raise ParseError(f"{ctx}: reference must be true or false")
        buses.append(Bus(id=_get_id(entry, ctx), reference=ref))

    lines = []
    for i, entry in enumerate(data["lines"]):
        ctx = f"lines[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{ctx}: expected an object")
        allowed = {"id", "from_bus", "to_bus", "susceptance", "capacity_mw",
                   "status", "build_cost"}
        _require_keys(entry, allowed, allowed - {"build_cost"}, ctx)
        status = _get_str(entry, "status", ctx)
        if status not in (LINE_EXISTING, LINE_CANDIDATE):
            raise ParseError(f"{ctx}: status must be "
                             f"'{LINE_EXISTING}' or '{LINE_CANDIDATE}', got {status!r}")
        lines.append(Line(
            id=_get_id(entry, ctx),
            from_bus=str(entry["from_bus"]),
            to_bus=str(entry["to_bus"]),
            susceptance=_get_num(entry, "susceptance", ctx),
            capacity_mw=_get_num(entry, "capacity_mw", ctx),
            status=status,
            build_cost=_get_num(entry, "build_cost", ctx) if "build_cost" in entry else 0.0,
        ))

    generators = []
    for i, entry in enumerate(data["generators"]):
        ctx = f"generators[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{ctx}: expected an object")
        allowed = {"id", "bus", "capacity_mw", "marginal_cost"}
        _require_keys(entry, allowed, allowed, ctx)
        generators.append(Generator(
            id=_get_id(entry, ctx),
            bus=str(entry["bus"]),
            capacity_mw=_get_num(entry, "capacity_mw", ctx),
            marginal_cost=_get_num(entry, "marginal_cost", ctx),
        ))

    demands = []
    for i, entry in enumerate(data["demands"]):
        ctx = f"demands[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{ctx}: expected an object")
        allowed = {"id", "bus", "load_mw", "bid_price", "shed_cost"}
        _require_keys(entry, allowed, allowed, ctx)
        demands.append(Demand(
            id=_get_id(entry, ctx),
            bus=str(entry["bus"]),
            load_mw=_get_num(entry, "load_mw", ctx),
            bid_price=_get_num(entry, "bid_price", ctx),
            shed_cost=_get_num(entry, "shed_cost", ctx),
        ))

    net = Network(
        name=_get_str(data, "name", "network"),
        currency=_get_str(data, "currency", "network") if "currency" in data else "",
        base_mva=_get_num(data, "base_mva", "network"),
        budget=_get_num(data, "budget", "network"),
        weighting_factor_hours=_get_num(data, "weighting_factor_hours", "network"),
        max_parallel_lines=_get_int(data, "max_parallel_lines", "network"),
        buses=tuple(buses),
        lines=tuple(lines),
        generators=tuple(generators),
        demands=tuple(demands),
    )
    validate_network(net)
    return net


def validate_network(net: Network) -> None:
    """Semantic checks beyond file shape; raises :class:`ValidationError`."""
    if not net.buses:
        raise ValidationError("network has no buses")
    bus_ids = [b.id for b in net.buses]
    if len(set(bus_ids)) != len(bus_ids):
        raise ValidationError("duplicate bus id")
    refs = [b.id for b in net.buses if b.reference]
    if len(refs) != 1:
        raise ValidationError(f"exactly one reference bus required, found {len(refs)}")

    known = set(bus_ids)
    line_ids = [ln.id for ln in net.lines]
    if len(set(line_ids)) != len(line_ids):
        raise ValidationError("duplicate line id")
    corridor_candidates: dict[tuple[str, str], int] = {}
    for ln in net.lines:
        if ln.from_bus not in known or ln.to_bus not in known:
            raise ValidationError(f"line {ln.id}: endpoint references unknown bus")
        if ln.from_bus == ln.to_bus:
            raise ValidationError(f"line {ln.id}: connects a bus to itself")
        if ln.susceptance <= 0.0:
            raise ValidationError(f"line {ln.id}: susceptance must be positive")
        if ln.capacity_mw <= 0.0:
            raise ValidationError(f"line {ln.id}: capacity must be positive")
        if ln.build_cost < 0.0:
            raise ValidationError(f"line {ln.id}: build cost must be nonnegative")
        if ln.status == LINE_CANDIDATE:
            if ln.build_cost <= 0.0:
                raise ValidationError(f"line {ln.id}: candidate needs a positive build cost")
            key = tuple(sorted((ln.from_bus, ln.to_bus)))
            corridor_candidates[key] = corridor_candidates.get(key, 0) + 1
    for key, count in corridor_candidates.items():
        if count > net.max_parallel_lines:
            raise ValidationError(
                f"corridor {key[0]}-{key[1]} offers {count} candidates, more than "
                f"max_parallel_lines={net.max_parallel_lines}")

    seen_unit: set[str] = set()
    for gen in net.generators:
        if gen.id in seen_unit:
            raise ValidationError(f"duplicate generator/demand id {gen.id!r}")
        seen_unit.add(gen.id)
        if gen.bus not in known:
            raise ValidationError(f"generator {gen.id}: unknown bus {gen.bus!r}")
        if gen.capacity_mw < 0.0:
            raise ValidationError(f"generator {gen.id}: capacity must be nonnegative")
        if gen.marginal_cost < 0.0:
            raise ValidationError(f"generator {gen.id}: marginal cost must be nonnegative")
    for dem in net.demands:
        if dem.id in seen_unit:
            raise ValidationError(f"duplicate generator/demand id {dem.id!r}")
        seen_unit.add(dem.id)
        if dem.bus not in known:
            raise ValidationError(f"demand {dem.id}: unknown bus {dem.bus!r}")
        if dem.load_mw < 0.0:
            raise ValidationError(f"demand {dem.id}: load must be nonnegative")
        if dem.bid_price < 0.0 or dem.shed_cost < 0.0:
            raise ValidationError(f"demand {dem.id}: prices must be nonnegative")
        if dem.shed_cost < dem.bid_price:
            raise ValidationError(
                f"demand {dem.id}: shed cost must be at least the bid price, "
                "otherwise shedding would undercut serving")

    if net.base_mva <= 0.0:
        raise ValidationError("base_mva must be positive")
    if net.budget < 0.0:
        raise ValidationError("budget must be nonnegative")
    if net.weighting_factor_hours <= 0.0:
        raise ValidationError("weighting_factor_hours must be positive")
    if net.max_parallel_lines < 1:
        raise ValidationError("max_parallel_lines must be at least 1")


def network_to_dict(net: Network) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": net.name,
        "currency": net.currency,
        "base_mva": net.base_mva,
        "budget": net.budget,
        "weighting_factor_hours": net.weighting_factor_hours,
        "max_parallel_lines": net.max_parallel_lines,
        "buses": [{"id": b.id, "reference": b.reference} for b in net.buses],
        "lines": [{"id": ln.id, "from_bus": ln.from_bus, "to_bus": ln.to_bus,
                   "susceptance": ln.susceptance, "capacity_mw": ln.capacity_mw,
                   "status": ln.status, "build_cost": ln.build_cost}
                  for ln in net.lines],
        "generators": [{"id": g.id, "bus": g.bus, "capacity_mw": g.capacity_mw,
                        "marginal_cost": g.marginal_cost} for g in net.generators],
        "demands": [{"id": d.id, "bus": d.bus, "load_mw": d.load_mw,
                     "bid_price": d.bid_price, "shed_cost": d.shed_cost}
                    for d in net.demands],
    }


def load_network(path: str | Path) -> Network:
    """Read, parse and validate a network file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read network file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"network file {path} is not valid JSON: {exc}") from exc
    return network_from_dict(data)


def save_network(net: Network, path: str | Path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


def network_hash(path: str | Path) -> str:
    """SHA-256 of the file bytes; plan files embed it so a plan can refuse to
    run against a network it was not computed for."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def annualize_costs(net: Network, return_period_years: float,
                    discount_rate: float) -> Network:
    """Express all costs on a common per-year basis.

    Build costs are multiplied by ``discount_rate`` (a 10 M investment at a
    10% rate contributes 1 M per year) and operating prices absorb the
    operating-hours weighting factor, which is then reset to one so the
    scaling cannot be applied twice. The budget is interpreted as annual and
    left untouched. ``return_period_years`` documents the planning horizon
    and must be positive.
    """
    if return_period_years <= 0.0:
        raise DomainError("return_period_years must be positive")
    if not 0.0 < discount_rate <= 1.0:
        raise DomainError("discount_rate must lie in (0, 1]")
    hours = net.weighting_factor_hours
    lines = tuple(
        replace(ln, build_cost=ln.build_cost * discount_rate) if ln.status == LINE_CANDIDATE
        else ln
        for ln in net.lines)
    generators = tuple(replace(g, marginal_cost=g.marginal_cost * hours)
                       for g in net.generators)
    demands = tuple(replace(d, bid_price=d.bid_price * hours,
                            shed_cost=d.shed_cost * hours)
                    for d in net.demands)
    return replace(net, lines=lines, generators=generators, demands=demands,
                   weighting_factor_hours=1.0)
