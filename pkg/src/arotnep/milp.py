"""Mixed-binary linear programming by LP-based branch and bound.

Node selection is best-bound (ties broken by creation order), branching picks
the most fractional binary (ties broken by lowest variable index), and child
LPs are warm-started from the parent basis through the dual simplex. The
search terminates when the absolute gap between incumbent and best bound
falls to ``gap_tol``; nodes are pruned only when they provably cannot improve
the incumbent by more than a much smaller margin, so optimality never hinges
on the looser reporting gap.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import NodeLimitExceeded, NumericalError, ValidationError
from .simplex import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    BasisState,
    LinearProgram,
    LPSolution,
    solve_lp_warm,
    solve_lp_with_state,
)

_PRUNE_SLACK = 1e-9
_INT_TOL = 1e-6


@dataclass
class MILPProblem:
    """LP relaxation plus the indices of variables restricted to {0, 1}."""

    lp: LinearProgram
    binary: np.ndarray

    def __post_init__(self):
        self.binary = np.atleast_1d(np.asarray(self.binary, dtype=np.int64))

    def validate(self) -> None:
        self.lp.validate()
        n = self.lp.n_vars
        if self.binary.size and (self.binary.min() < 0 or self.binary.max() >= n):
            raise ValidationError("binary index out of range")
        if np.unique(self.binary).size != self.binary.size:
            raise ValidationError("duplicate binary index")


@dataclass
class MILPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    best_bound: float = np.nan
    gap: float = np.nan
    nodes: int = 0
    lp_solution: LPSolution | None = None


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    sol: LPSolution = field(compare=False)
    state: BasisState | None = field(compare=False)


def _fractional(x: np.ndarray, binary: np.ndarray) -> tuple[int | None, float]:
    xb = x[binary]
    frac = np.abs(xb - np.round(xb))
    if frac.size == 0 or float(frac.max()) <= _INT_TOL:
        return None, 0.0
    top = float(frac.max())
    ties = np.flatnonzero(frac >= top - 1e-9)
    return int(binary[ties[0]]), top


def _with_bounds(lp: LinearProgram, lower: np.ndarray, upper: np.ndarray) -> LinearProgram:
    return LinearProgram(lp.objective, a_eq=lp.a_eq, b_eq=lp.b_eq,
                         a_ub=lp.a_ub, b_ub=lp.b_ub,
                         lower=lower, upper=upper, sense=lp.sense)


def solve_milp(problem: MILPProblem, gap_tol: float = 1e-6,
               node_limit: int = 100_000) -> MILPSolution:
    """Branch and bound over the binary variables of ``problem``.

    Raises :class:`NodeLimitExceeded` when ``node_limit`` LP nodes were
    solved without proving optimality.
    """
    problem.validate()
    lp = problem.lp
    binary = problem.binary
    sign = 1.0 if lp.sense == "min" else -1.0

    lower = lp.lower.copy()
    upper = lp.upper.copy()
    if binary.size:
        lower[binary] = np.maximum(lower[binary], 0.0)
        upper[binary] = np.minimum(upper[binary], 1.0)

    root_lp = _with_bounds(lp, lower, upper)
    root_sol, root_state = solve_lp_with_state(root_lp)
    nodes = 1
    if root_sol.status == STATUS_INFEASIBLE:
        return MILPSolution(status=STATUS_INFEASIBLE, nodes=nodes)
    if root_sol.status == STATUS_UNBOUNDED:
        raise NumericalError("LP relaxation is unbounded; the model is missing "
                             "a restraining constraint")

    incumbent: LPSolution | None = None
    incumbent_val = np.inf  # internal min orientation
    heap: list[_Node] = []
    seq = 0

    def push(sol: LPSolution, state, lo, up):
        nonlocal seq
        heapq.heappush(heap, _Node(sign * sol.objective, seq, lo, up, sol, state))
        seq += 1

    push(root_sol, root_state, lower, upper)

    final_bound: float | None = None
    while heap:
        node = heapq.heappop(heap)
        # The heap is keyed on LP bounds, so the popped node carries the
        # global best bound: the gap test here is the termination criterion.
        if incumbent is not None and incumbent_val - node.bound <= gap_tol:
            final_bound = min(node.bound, incumbent_val)
            break
        j, _ = _fractional(node.sol.x, binary)
        if j is None:
            val = node.bound
            if val < incumbent_val:
                incumbent_val = val
                incumbent = node.sol
            continue
        for fix in (0.0, 1.0):
            if nodes >= node_limit:
                raise NodeLimitExceeded(
                    f"branch and bound stopped after {nodes} LP nodes")
            lo = node.lower.copy()
            up = node.upper.copy()
            lo[j] = up[j] = fix
            child_lp = _with_bounds(lp, lo, up)
            if node.state is not None:
                child_sol, child_state = solve_lp_warm(child_lp, node.state)
            else:
                child_sol, child_state = solve_lp_with_state(child_lp)
            nodes += 1
            if child_sol.status != STATUS_OPTIMAL:
                continue
            child_bound = sign * child_sol.objective
            if incumbent is not None and child_bound >= incumbent_val - _PRUNE_SLACK:
                continue
            push(child_sol, child_state, lo, up)

    if incumbent is None:
        return MILPSolution(status=STATUS_INFEASIBLE, nodes=nodes)
    if final_bound is None:
        final_bound = incumbent_val

    polished = _polish_incumbent(lp, binary, incumbent)
    if polished is not None:
        incumbent = polished
    gap = max(0.0, incumbent_val - final_bound)
    return MILPSolution(status=STATUS_OPTIMAL, x=incumbent.x.copy(),
                        objective=incumbent.objective,
                        best_bound=sign * final_bound, gap=gap, nodes=nodes,
                        lp_solution=incumbent)


def _polish_incumbent(lp: LinearProgram, binary: np.ndarray,
                      incumbent: LPSolution) -> LPSolution | None:
    """Re-solve with binaries pinned to their rounded values so the returned
    point is an exact vertex with exact duals."""
    if binary.size == 0:
        return incumbent
    lo = lp.lower.copy()
    up = lp.upper.copy()
    fixed = np.round(incumbent.x[binary])
    lo[binary] = up[binary] = fixed
    sol = solve_lp_with_state(_with_bounds(lp, lo, up))[0]
    if sol.status != STATUS_OPTIMAL:
        return None
    sign = 1.0 if lp.sense == "min" else -1.0
    if sign * sol.objective > sign * incumbent.objective + 1e-6:
        return None
    return sol
