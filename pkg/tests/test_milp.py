"""Branch-and-bound tests against exhaustive binary enumeration."""

import numpy as np
import pytest

from arotnep.errors import NodeLimitExceeded, ValidationError
from arotnep.milp import MILPProblem, solve_milp
from arotnep.simplex import LinearProgram, solve_lp
from oracles import milp_enumerate_optimum


def test_small_knapsack_by_hand():
    # max 3a + 4b + 5c with 2a + 3b + 4c <= 6: best picks a and c for 8.
    lp = LinearProgram([3.0, 4.0, 5.0], a_ub=[[2.0, 3.0, 4.0]], b_ub=[6.0],
                       lower=[0.0] * 3, upper=[1.0] * 3, sense="max")
    sol = solve_milp(MILPProblem(lp, [0, 1, 2]))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(8.0, abs=1e-9)
    assert np.allclose(sol.x, [1.0, 0.0, 1.0], atol=1e-9)


def test_infeasible_binary_system():
    # x0 + x1 >= 3 can never hold for two binaries.
    lp = LinearProgram([1.0, 1.0], a_ub=[[-1.0, -1.0]], b_ub=[-3.0],
                       lower=[0.0, 0.0], upper=[1.0, 1.0])
    sol = solve_milp(MILPProblem(lp, [0, 1]))
    assert sol.status == "infeasible"


def test_node_limit_raises():
    rng = np.random.default_rng(5)
    n = 8
    c = -rng.uniform(1.0, 2.0, n)
    a = rng.uniform(0.5, 1.5, (1, n))
    lp = LinearProgram(c, a_ub=a, b_ub=[float(a.sum()) / 2.0],
                       lower=np.zeros(n), upper=np.ones(n))
    with pytest.raises(NodeLimitExceeded):
        solve_milp(MILPProblem(lp, np.arange(n)), node_limit=2)


def test_no_binaries_reduces_to_lp():
    lp = LinearProgram([1.0, -2.0], a_ub=[[1.0, 1.0]], b_ub=[1.5],
                       lower=[0.0, 0.0], upper=[1.0, 1.0])
    sol = solve_milp(MILPProblem(lp, np.zeros(0, dtype=int)))
    ref = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(ref.objective, abs=1e-9)


def test_loose_binary_bounds_are_clamped():
    lp = LinearProgram([-1.0, -1.0], a_ub=[[1.0, 1.0]], b_ub=[1.2],
                       lower=[-5.0, -5.0], upper=[5.0, 5.0])
    sol = solve_milp(MILPProblem(lp, [0, 1]))
    assert sol.status == "optimal"
    assert set(np.round(sol.x).tolist()) <= {0.0, 1.0}
    assert sol.objective == pytest.approx(-1.0, abs=1e-9)


def test_validate_rejects_bad_binary_indices():
    lp = LinearProgram([1.0, 1.0])
    with pytest.raises(ValidationError):
        solve_milp(MILPProblem(lp, [0, 0]))
    with pytest.raises(ValidationError):
        solve_milp(MILPProblem(lp, [5]))


@pytest.mark.parametrize("seed", range(14))
def test_matches_enumeration_on_random_mixed_instances(seed):
    rng = np.random.default_rng(4000 + seed)
    k = int(rng.integers(2, 7))       # binaries
    nc = int(rng.integers(0, 4))      # continuous
    n = k + nc
    m_ub = int(rng.integers(1, 5))
    sense = "min" if seed % 2 == 0 else "max"
    c = rng.normal(size=n) * 3.0
    a_ub = rng.normal(size=(m_ub, n))
    b_ub = rng.normal(size=m_ub) * 2.0
    lower = np.concatenate([np.zeros(k), rng.uniform(-2.0, 0.0, nc)])
    upper = np.concatenate([np.ones(k), rng.uniform(0.5, 2.5, nc)])
    lp = LinearProgram(c, a_ub=a_ub, b_ub=b_ub, lower=lower, upper=upper,
                       sense=sense)
    problem = MILPProblem(lp, np.arange(k))
    ref_status, ref_obj, _ = milp_enumerate_optimum(problem)
    try:
        sol = solve_milp(problem)
    except NodeLimitExceeded:  # pragma: no cover - instances are tiny
        pytest.fail("node limit on a tiny instance")
    assert sol.status == ref_status
    if ref_status == "optimal":
        assert sol.objective == pytest.approx(ref_obj, abs=1e-6)
        assert sol.gap <= 1e-6 + 1e-12
        binaries = sol.x[:k]
        assert np.max(np.abs(binaries - np.round(binaries))) <= 1e-9
        sgn = 1.0 if sense == "min" else -1.0
        assert sgn * sol.best_bound <= sgn * sol.objective + 1e-6


def test_bound_and_gap_reporting():
    lp = LinearProgram([-5.0, -4.0, -3.0],
                       a_ub=[[2.0, 3.0, 1.0], [4.0, 1.0, 2.0]],
                       b_ub=[5.0, 11.0], lower=np.zeros(3), upper=np.ones(3))
    sol = solve_milp(MILPProblem(lp, [0, 1, 2]))
    ref_status, ref_obj, _ = milp_enumerate_optimum(MILPProblem(lp, [0, 1, 2]))
    assert sol.status == ref_status == "optimal"
    assert sol.objective == pytest.approx(ref_obj, abs=1e-9)
    assert sol.best_bound <= sol.objective + 1e-9
    assert sol.nodes >= 1
