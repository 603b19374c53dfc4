"""Dispatch tests: hand-computed micro-networks, physics invariants on the
six-bus system, and finite-difference checks of the cost gradient."""

import numpy as np
import pytest

from arotnep.datasets import load_dataset
from arotnep.errors import ValidationError
from arotnep.opf import clip_uncertain, solve_opf


@pytest.fixture(scope="module")
def onebus():
    return load_dataset("onebus")


@pytest.fixture(scope="module")
def twobus():
    return load_dataset("twobus")


@pytest.fixture(scope="module")
def garver():
    return load_dataset("garver6")


def kkt_ok(sol):
    return sol.kkt.max_residual <= 1e-7 * (1.0 + abs(sol.objective))


def recompute_balance(net, sol, d):
    """Independent nodal balance: generation minus delivered load plus net
    inflow must vanish at every bus."""
    n_gen = len(net.generators)
    resid = np.zeros(len(net.buses))
    for i, g in enumerate(net.generators):
        resid[net.bus_index[g.bus]] += sol.generation[i]
    for j, dm in enumerate(net.demands):
        resid[net.bus_index[dm.bus]] -= sol.served[j]
    lines = {ln.id: ln for ln in net.lines}
    for lid, f in zip(sol.flow_line_ids, sol.flow):
        ln = lines[lid]
        resid[net.bus_index[ln.to_bus]] += f
        resid[net.bus_index[ln.from_bus]] -= f
    return resid


def test_onebus_nominal(onebus):
    sol = solve_opf(onebus)
    # 8760 h of 50 MW at the generator price.
    assert sol.objective == pytest.approx(8760.0 * 2.0e-5 * 50.0, rel=1e-9)
    np.testing.assert_allclose(sol.generation, [50.0], atol=1e-7)
    np.testing.assert_allclose(sol.shed, [0.0], atol=1e-9)
    np.testing.assert_allclose(sol.served, [50.0], atol=1e-7)
    assert kkt_ok(sol)


def test_onebus_capacity_shortfall_forces_shedding(onebus):
    sol = solve_opf(onebus, d=np.array([30.0, 50.0]))
    want = 8760.0 * (2.0e-5 * 30.0 + 5.0e-4 * 20.0)
    assert sol.objective == pytest.approx(want, rel=1e-9)
    np.testing.assert_allclose(sol.generation, [30.0], atol=1e-7)
    np.testing.assert_allclose(sol.shed, [20.0], atol=1e-7)


def test_onebus_gradient_closed_form(onebus):
    # Slack capacity: one more MW of load costs one hour-weighted price,
    # one more MW of capacity saves nothing.
    sol = solve_opf(onebus)
    np.testing.assert_allclose(sol.eta, [0.0, 8760.0 * 2.0e-5], atol=1e-9)
    # Binding capacity: load increments are shed, capacity increments swap
    # shed energy for cheaper generation.
    tight = solve_opf(onebus, d=np.array([30.0, 50.0]))
    np.testing.assert_allclose(
        tight.eta,
        [-8760.0 * (5.0e-4 - 2.0e-5), 8760.0 * 5.0e-4],
        atol=1e-9)


def test_clip_uncertain_counts(onebus):
    d, n = clip_uncertain(np.array([-5.0, 20.0]))
    assert n == 1
    np.testing.assert_allclose(d, [0.0, 20.0])
    sol = solve_opf(onebus, d=np.array([-5.0, 20.0]))
    assert sol.clipped == 1
    assert sol.objective == pytest.approx(8760.0 * 5.0e-4 * 20.0, rel=1e-9)
    np.testing.assert_allclose(sol.served, [0.0], atol=1e-9)


def test_twobus_congested_without_build(twobus):
    sol = solve_opf(twobus)
    want = 8760.0 * (1.0e-5 * 40.0 + 2.0e-4 * 20.0)
    assert sol.objective == pytest.approx(want, rel=1e-9)
    np.testing.assert_allclose(sol.flow, [40.0], atol=1e-7)
    np.testing.assert_allclose(sol.shed, [20.0], atol=1e-7)
    assert kkt_ok(sol)


def test_twobus_candidate_relieves_congestion(twobus):
    sol = solve_opf(twobus, built={"C1-2a"})
    assert sol.objective == pytest.approx(8760.0 * 1.0e-5 * 60.0, rel=1e-9)
    np.testing.assert_allclose(sol.shed, [0.0], atol=1e-7)
    # Equal susceptances split the 60 MW evenly; angles follow the coupling.
    np.testing.assert_allclose(sol.flow, [30.0, 30.0], atol=1e-7)
    i2 = twobus.bus_index["2"]
    assert sol.angle[i2] == pytest.approx(-30.0 / (100.0 * 5.0), abs=1e-9)


def test_unknown_built_id_rejected(twobus):
    with pytest.raises(ValidationError, match="unknown candidate"):
        solve_opf(twobus, built={"nope"})


def test_wrong_uncertain_size_rejected(twobus):
    with pytest.raises(ValidationError, match="uncertain vector"):
        solve_opf(twobus, d=np.ones(5))


def test_garver_nominal_isolated_bus(garver):
    sol = solve_opf(garver)
    # Bus 6 has no lines yet, so its 600 MW can't serve anything and at
    # least the 250 MW system shortfall must be shed.
    assert sol.generation[2] == pytest.approx(0.0, abs=1e-7)
    assert float(sol.shed.sum()) >= 250.0 - 1e-6
    np.testing.assert_allclose(recompute_balance(garver, sol, None),
                               np.zeros(6), atol=1e-6)
    assert kkt_ok(sol)


def test_garver_build_reduces_cost(garver):
    base = solve_opf(garver)
    built = {"C2-6a", "C2-6b", "C4-6a", "C4-6b"}
    sol = solve_opf(garver, built=built)
    assert sol.objective < base.objective - 1.0
    assert float(sol.generation[2]) > 100.0  # the cheap unit finally runs
    np.testing.assert_allclose(recompute_balance(garver, sol, None),
                               np.zeros(6), atol=1e-6)


def test_flow_angle_coupling(garver):
    built = {"C2-6a", "C4-6a", "C3-5a"}
    sol = solve_opf(garver, built=built)
    lines = {ln.id: ln for ln in garver.lines}
    for lid, f in zip(sol.flow_line_ids, sol.flow):
        ln = lines[lid]
        gamma = garver.base_mva * ln.susceptance
        dtheta = (sol.angle[garver.bus_index[ln.from_bus]]
                  - sol.angle[garver.bus_index[ln.to_bus]])
        assert f == pytest.approx(gamma * dtheta, abs=1e-6)
        assert abs(f) <= ln.capacity_mw + 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_gradient_matches_finite_differences(garver, seed):
    rng = np.random.default_rng(7000 + seed)
    nominal = garver.nominal_uncertain()
    # Generic interior point: capacities a bit below nominal, loads a bit up.
    d = nominal * np.concatenate([rng.uniform(0.85, 0.97, 3),
                                  rng.uniform(1.02, 1.12, 5)])
    built = {"C2-6a", "C4-6a"} if seed % 2 else frozenset()
    sol = solve_opf(garver, d=d, built=built)
    h = 1e-3
    for i in range(d.size):
        dp = d.copy()
        dm = d.copy()
        dp[i] += h
        dm[i] -= h
        fd = (solve_opf(garver, d=dp, built=built).objective
              - solve_opf(garver, d=dm, built=built).objective) / (2.0 * h)
        assert sol.eta[i] == pytest.approx(fd, abs=5e-5 * (1.0 + abs(fd)))
    assert kkt_ok(sol)
