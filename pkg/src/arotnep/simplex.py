"""Dense linear programming with a bounded-variable revised simplex method.

The solver is deliberately self-contained: two-phase primal simplex over
general bounds, an explicit basis inverse with periodic refactorization,
Dantzig pricing with a switch to Bland's rule once a degeneracy counter
trips, and a bounded dual simplex used to warm-start from a dual-feasible
basis after bound changes (the branch-and-bound layer relies on this).

Dual sign convention
--------------------
For ``sense="min"``:

* ``duals_eq[i]``  is the gradient of the optimal objective with respect to
  ``b_eq[i]``.
* ``duals_ub[i]`` is nonnegative and the gradient with respect to
  ``b_ub[i]`` equals ``-duals_ub[i]``.

For ``sense="max"`` the problem is solved as the minimization of the negated
objective; ``duals_eq`` is still the gradient of the *reported* objective and
``duals_ub`` stays nonnegative with gradient ``+duals_ub[i]``.
``reduced_costs[j]`` is the rate of change of the reported objective when
variable ``j`` moves off its bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NumericalError, ValidationError

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"

# Nonbasic/basic markers.
_BASIC = 0
_AT_LOWER = 1
_AT_UPPER = 2
_FREE = 3

_REFACTOR_PERIOD = 100
_BLAND_TRIP = 40


def _as_matrix(a, n_cols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, n_cols))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


def _as_vector(v, length: int | None = None) -> np.ndarray:
    if v is None:
        return np.zeros(0 if length is None else length)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return v


@dataclass
class LinearProgram:
    """Standard-form LP: optimize ``c @ x`` over equality rows, ``<=`` rows
    and variable bounds (``-inf``/``+inf`` allowed in bounds only)."""

    objective: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.objective = _as_vector(self.objective)
        n = self.objective.size
        self.a_eq = _as_matrix(self.a_eq, n)
        self.b_eq = _as_vector(self.b_eq, 0)
        self.a_ub = _as_matrix(self.a_ub, n)
        self.b_ub = _as_vector(self.b_ub, 0)
        self.lower = np.full(n, 0.0) if self.lower is None else _as_vector(self.lower)
        self.upper = np.full(n, np.inf) if self.upper is None else _as_vector(self.upper)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    def validate(self) -> None:
        n = self.n_vars
        if self.sense not in ("min", "max"):
            raise ValidationError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name, mat, rhs in (("a_eq", self.a_eq, self.b_eq), ("a_ub", self.a_ub, self.b_ub)):
            if mat.shape[1] != n:
                raise DimensionMismatch(f"{name} has {mat.shape[1]} columns, expected {n}")
            if mat.shape[0] != rhs.size:
                raise DimensionMismatch(f"{name} has {mat.shape[0]} rows but rhs has {rhs.size}")
            if not np.all(np.isfinite(mat)) or not np.all(np.isfinite(rhs)):
                raise ValidationError(f"nonfinite coefficient in {name} block")
        if self.lower.size != n or self.upper.size != n:
            raise DimensionMismatch("bound vectors must match the variable count")
        if not np.all(np.isfinite(self.objective)):
            raise ValidationError("nonfinite objective coefficient")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise ValidationError(f"lower bound exceeds upper bound for variable {j}")


@dataclass
class LPSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    duals_eq: np.ndarray | None = None
    duals_ub: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0


@dataclass
class BasisState:
    """Snapshot of a simplex basis, reusable to warm-start a related LP."""

    basis: np.ndarray
    status: np.ndarray


@dataclass
class KKTReport:
    primal_equality: float
    primal_inequality: float
    primal_bounds: float
    dual_sign: float
    complementarity: float
    duality_gap: float

    @property
    def max_residual(self) -> float:
        return max(self.primal_equality, self.primal_inequality, self.primal_bounds,
                   self.dual_sign, self.complementarity, self.duality_gap)


class _Simplex:
    """Working state for one LP: columns are [structural | slacks | artificials]."""

    def __init__(self, lp: LinearProgram):
        lp.validate()
        self.lp = lp
        self.n = lp.n_vars
        self.m_eq = lp.b_eq.size
        self.m_ub = lp.b_ub.size
        self.m = self.m_eq + self.m_ub
        m, n = self.m, self.n
        self.n_slack = self.m_ub
        self.n_total = n + self.n_slack + m  # artificials: one per row

        A = np.zeros((m, self.n_total))
        A[: self.m_eq, :n] = lp.a_eq
        A[self.m_eq:, :n] = lp.a_ub
        for i in range(self.m_ub):
            A[self.m_eq + i, n + i] = 1.0
        self.A = A
        self.b = np.concatenate([lp.b_eq, lp.b_ub])

        self.sign = 1.0 if lp.sense == "min" else -1.0
        self.c = np.zeros(self.n_total)
        self.c[:n] = self.sign * lp.objective

        self.lower = np.concatenate([lp.lower, np.zeros(self.n_slack + m)])
        self.upper = np.concatenate([lp.upper, np.full(self.n_slack, np.inf), np.full(m, np.inf)])

        self.art = np.arange(n + self.n_slack, self.n_total)
        self.basis = np.zeros(m, dtype=np.int64)
        self.stat = np.full(self.n_total, _AT_LOWER, dtype=np.int8)
        self.x = np.zeros(self.n_total)
        self.binv = np.eye(m)
        self.iterations = 0
        bscale = float(np.max(np.abs(self.b))) if m else 0.0
        self.tol_p = 1e-9 * (1.0 + bscale)

    # -- linear algebra helpers -------------------------------------------------

    def _refactor(self) -> None:
        B = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorization") from exc
        self._recompute_basic_values()

    def _recompute_basic_values(self) -> None:
        xfull = self.x.copy()
        xfull[self.basis] = 0.0
        resid = self.b - self.A @ xfull
        self.x[self.basis] = self.binv @ resid

    def _update_binv(self, w: np.ndarray, k: int) -> None:
        piv = w[k]
        self.binv[k, :] /= piv
        other = np.delete(np.arange(self.m), k)
        self.binv[other, :] -= np.outer(w[other], self.binv[k, :])

    def _duals(self, c: np.ndarray) -> np.ndarray:
        return self.binv.T @ c[self.basis]

    # -- primal simplex ---------------------------------------------------------

    def _nonbasic_value(self, j: int) -> float:
        if self.stat[j] == _AT_LOWER:
            return self.lower[j]
        if self.stat[j] == _AT_UPPER:
            return self.upper[j]
        return 0.0

    def _choose_entering(self, r: np.ndarray, tol_d: float, bland: bool):
        span_ok = self.upper - self.lower > 0.0
        cand_low = (self.stat == _AT_LOWER) & span_ok & (r < -tol_d)
        cand_up = (self.stat == _AT_UPPER) & span_ok & (r > tol_d)
        cand_free = (self.stat == _FREE) & (np.abs(r) > tol_d)
        eligible = cand_low | cand_up | cand_free
        if not np.any(eligible):
            return None, 0
        idx = np.flatnonzero(eligible)
        if bland:
            q = int(idx[0])
        else:
            q = int(idx[np.argmax(np.abs(r[idx]))])
        direction = 1 if (self.stat[q] == _AT_LOWER or (self.stat[q] == _FREE and r[q] < 0)) else -1
        return q, direction

    def _primal_step(self, q: int, direction: int):
        w = self.binv @ self.A[:, q]
        weff = direction * w
        xb = self.x[self.basis]
        lb = self.lower[self.basis]
        ub = self.upper[self.basis]

        t_best = np.inf
        k_best = -1
        hit_upper = False
        pos = weff > 1e-9
        neg = weff < -1e-9
        with np.errstate(invalid="ignore"):
            t_pos = np.where(pos, (xb - lb) / np.where(pos, weff, 1.0), np.inf)
            t_neg = np.where(neg, (ub - xb) / np.where(neg, -weff, 1.0), np.inf)
        t_rows = np.minimum(t_pos, t_neg)
        t_rows = np.maximum(t_rows, 0.0)  # drift guard
        if t_rows.size:
            t_min = float(np.min(t_rows))
            if np.isfinite(t_min):
                ties = np.flatnonzero(t_rows <= t_min + 1e-12)
                k_best = int(ties[np.argmax(np.abs(weff[ties]))])
                t_best = t_min
                hit_upper = bool(t_neg[k_best] <= t_pos[k_best])

        span = self.upper[q] - self.lower[q]
        if span < t_best:
            # Bound flip: the entering variable crosses to its opposite bound.
            self.x[self.basis] = xb - weff * span
            self.stat[q] = _AT_UPPER if direction == 1 else _AT_LOWER
            self.x[q] = self.upper[q] if direction == 1 else self.lower[q]
            return "flip", span

        if not np.isfinite(t_best):
            return "unbounded", np.inf

        val0 = self._nonbasic_value(q)
        self.x[self.basis] = xb - weff * t_best
        p = int(self.basis[k_best])
        self.x[p] = self.upper[p] if hit_upper else self.lower[p]
        self.stat[p] = _AT_UPPER if hit_upper else _AT_LOWER
        self.x[q] = val0 + direction * t_best
        self.stat[q] = _BASIC
        self.basis[k_best] = q
        self._update_binv(w, k_best)
        return "pivot", t_best

    def optimize(self, c: np.ndarray, max_iter: int) -> str:
        tol_d = 1e-9 * (1.0 + float(np.max(np.abs(c))))
        bland = False
        degenerate = 0
        since_refactor = 0
        while True:
            if self.iterations >= max_iter:
                raise NumericalError(f"simplex iteration cap ({max_iter}) exceeded")
            y = self._duals(c)
            r = c - self.A.T @ y
            q, direction = self._choose_entering(r, tol_d, bland)
            if q is None:
                return STATUS_OPTIMAL
            outcome, step = self._primal_step(q, direction)
            if outcome == "unbounded":
                return STATUS_UNBOUNDED
            self.iterations += 1
            since_refactor += 1
            if step <= 1e-11:
                degenerate += 1
                if degenerate > _BLAND_TRIP:
                    bland = True
            else:
                degenerate = 0
                bland = False
            if outcome == "pivot" and since_refactor >= _REFACTOR_PERIOD:
                self._refactor()
                since_refactor = 0

    # -- phase 1 ----------------------------------------------------------------

    def phase1(self, max_iter: int) -> bool:
        """Install a primal-feasible basis; returns False when infeasible."""
        n, m = self.n, self.m
        finite_low = np.isfinite(self.lower[:n])
        finite_up = np.isfinite(self.upper[:n])
        start = np.zeros(n)
        start[finite_low] = self.lower[:n][finite_low]
        only_up = ~finite_low & finite_up
        start[only_up] = np.minimum(self.upper[:n][only_up], 0.0)
        self.x[:n] = start
        self.stat[:n] = np.where(finite_low, _AT_LOWER, np.where(finite_up, _AT_UPPER, _FREE))
        self.stat[:n][only_up & (start < self.upper[:n])] = _FREE
        # Fixed-at-zero free vars start FREE; vars started at upper:
        at_up = np.isfinite(self.upper[:n]) & (start == self.upper[:n]) & ~finite_low
        self.stat[:n][at_up] = _AT_UPPER
        self.x[n:] = 0.0
        self.stat[n:] = _AT_LOWER

        resid = self.b - self.A[:, :n] @ start
        basis = np.empty(m, dtype=np.int64)
        c1 = np.zeros(self.n_total)
        for i in range(m):
            is_ub_row = i >= self.m_eq
            if is_ub_row and resid[i] >= 0.0:
                j = n + (i - self.m_eq)  # slack carries the surplus
            else:
                j = int(self.art[i])
                self.A[i, j] = 1.0 if resid[i] >= 0.0 else -1.0
                c1[j] = 1.0
            basis[i] = j
        self.basis = basis
        self.stat[basis] = _BASIC
        self._refactor()

        status = self.optimize(c1, max_iter)
        if status != STATUS_OPTIMAL:  # pragma: no cover - phase 1 is bounded below
            raise NumericalError("phase 1 terminated abnormally")
        self._refactor()
        infeas = float(np.sum(self.x[self.art]))
        if infeas > 100.0 * self.tol_p:
            return False
        self._pivot_out_artificials()
        self.upper[self.art] = 0.0
        self.x[self.art] = 0.0
        self._recompute_basic_values()
        return True

    def _pivot_out_artificials(self) -> None:
        art_set = set(int(a) for a in self.art)
        for k in range(self.m):
            p = int(self.basis[k])
            if p not in art_set:
                continue
            row = self.binv[k, :] @ self.A[:, : self.n + self.n_slack]
            row[self.stat[: self.n + self.n_slack] == _BASIC] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:
                continue  # redundant row; artificial stays basic at zero
            w = self.binv @ self.A[:, j]
            self.stat[p] = _AT_LOWER
            self.x[p] = 0.0
            self.stat[j] = _BASIC
            self.basis[k] = j
            self._update_binv(w, k)
        self._recompute_basic_values()

    # -- dual simplex (warm starts) --------------------------------------------

    def dual_optimize(self, c: np.ndarray, max_iter: int) -> str:
        """Reoptimize from a dual-feasible basis after bound changes."""
        tol_d = 1e-9 * (1.0 + float(np.max(np.abs(c))))
        since_refactor = 0
        bland = False
        stalls = 0
        while True:
            if self.iterations >= max_iter:
                raise NumericalError(f"dual simplex iteration cap ({max_iter}) exceeded")
            xb = self.x[self.basis]
            lb = self.lower[self.basis]
            ub = self.upper[self.basis]
            low_viol = lb - xb
            up_viol = xb - ub
            viol = np.maximum(low_viol, up_viol)
            k = int(np.argmax(viol))
            if viol[k] <= self.tol_p:
                return STATUS_OPTIMAL
            below = low_viol[k] >= up_viol[k]

            y = self._duals(c)
            r = c - self.A.T @ y
            alpha = self.binv[k, :] @ self.A
            span_ok = self.upper - self.lower > 0.0
            if below:
                ok_low = (self.stat == _AT_LOWER) & span_ok & (alpha < -1e-9)
                ok_up = (self.stat == _AT_UPPER) & span_ok & (alpha > 1e-9)
            else:
                ok_low = (self.stat == _AT_LOWER) & span_ok & (alpha > 1e-9)
                ok_up = (self.stat == _AT_UPPER) & span_ok & (alpha < -1e-9)
            ok_free = (self.stat == _FREE) & (np.abs(alpha) > 1e-9)
            eligible = np.flatnonzero(ok_low | ok_up | ok_free)
            if eligible.size == 0:
                return STATUS_INFEASIBLE
            ratios = np.abs(r[eligible]) / np.abs(alpha[eligible])
            if bland:
                q = int(eligible[0])
            else:
                best = np.flatnonzero(ratios <= ratios.min() + tol_d)
                sub = eligible[best]
                q = int(sub[np.argmax(np.abs(alpha[sub]))])

            w = self.binv @ self.A[:, q]
            p = int(self.basis[k])
            self.x[p] = self.lower[p] if below else self.upper[p]
            self.stat[p] = _AT_LOWER if below else _AT_UPPER
            self.stat[q] = _BASIC
            self.basis[k] = q
            self._update_binv(w, k)
            self._recompute_basic_values()
            self.iterations += 1
            since_refactor += 1
            if abs(r[q]) <= tol_d:
                stalls += 1
                if stalls > _BLAND_TRIP:
                    bland = True
            else:
                stalls = 0
                bland = False
            if since_refactor >= _REFACTOR_PERIOD:
                self._refactor()
                since_refactor = 0

    # -- extraction -------------------------------------------------------------

    def extract(self, status: str) -> LPSolution:
        if status != STATUS_OPTIMAL:
            return LPSolution(status=status, iterations=self.iterations)
        self._refactor()
        y = self._duals(self.c)
        r_all = self.c - self.A.T @ y
        n = self.n
        x = self.x[:n].copy()
        obj = float(self.c[:n] @ x) * self.sign
        y_eq = y[: self.m_eq]
        y_ub = y[self.m_eq:]
        mu = np.maximum(-y_ub, 0.0)
        if self.sign > 0:
            duals_eq = y_eq.copy()
            reduced = r_all[:n].copy()
        else:
            duals_eq = -y_eq
            reduced = -r_all[:n]
        return LPSolution(status=STATUS_OPTIMAL, x=x, objective=obj,
                          duals_eq=duals_eq, duals_ub=mu, reduced_costs=reduced,
                          iterations=self.iterations)

    def basis_state(self) -> BasisState:
        return BasisState(self.basis.copy(), self.stat.copy())


def _polish(sx: _Simplex, max_iter: int) -> str:
    """Optimize, then refactor and re-price until the optimum is clean."""
    for _ in range(3):
        status = sx.optimize(sx.c, max_iter)
        if status != STATUS_OPTIMAL:
            return status
        sx._refactor()
        y = sx._duals(sx.c)
        r = sx.c - sx.A.T @ y
        q, _ = sx._choose_entering(r, 1e-9 * (1.0 + float(np.max(np.abs(sx.c)))), False)
        if q is None:
            break
    return STATUS_OPTIMAL


def solve_lp_with_state(lp: LinearProgram,
                        max_iter: int | None = None) -> tuple[LPSolution, BasisState | None]:
    """Like :func:`solve_lp` but also returns the optimal basis for warm starts."""
    sx = _Simplex(lp)
    if max_iter is None:
        max_iter = 200 * (sx.m + sx.n) + 2000
    if not sx.phase1(max_iter):
        return LPSolution(status=STATUS_INFEASIBLE, iterations=sx.iterations), None
    status = _polish(sx, max_iter)
    sol = sx.extract(status)
    return sol, (sx.basis_state() if status == STATUS_OPTIMAL else None)


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LPSolution:
    """Solve an LP to optimality, infeasibility or unboundedness.

    Raises :class:`NumericalError` if the pivot cap is exhausted.
    """
    return solve_lp_with_state(lp, max_iter)[0]


def solve_lp_warm(lp: LinearProgram, state: BasisState,
                  max_iter: int | None = None) -> tuple[LPSolution, BasisState | None]:
    """Resolve ``lp`` starting from a basis of a bound-modified relative.

    The basis must come from an LP with identical rows and objective; only
    variable bounds may differ. Falls back to a cold solve on any trouble.
    """
    sx = _Simplex(lp)
    if max_iter is None:
        max_iter = 200 * (sx.m + sx.n) + 2000
    try:
        if state.basis.size != sx.m or state.status.size != sx.n_total:
            raise NumericalError("basis state has mismatched dimensions")
        sx.basis = state.basis.copy()
        sx.stat = state.status.copy()
        sx.upper[sx.art] = 0.0
        nonbasic = sx.stat != _BASIC
        vals = np.where(sx.stat == _AT_UPPER, sx.upper, sx.lower)
        vals[sx.stat == _FREE] = 0.0
        bad = nonbasic & ~np.isfinite(vals)
        if np.any(bad):
            raise NumericalError("nonbasic variable lost its finite bound")
        sx.x[nonbasic] = vals[nonbasic]
        sx._refactor()
        status = sx.dual_optimize(sx.c, max_iter)
        if status == STATUS_OPTIMAL:
            # The dual method restores primal feasibility; polish primally in
            # case bound changes also disturbed reduced-cost signs.
            status = sx.optimize(sx.c, max_iter)
        if status == STATUS_INFEASIBLE:
            return LPSolution(status=STATUS_INFEASIBLE, iterations=sx.iterations), None
        if status != STATUS_OPTIMAL:
            return sx.extract(status), None
        return sx.extract(STATUS_OPTIMAL), sx.basis_state()
    except NumericalError:
        sol = solve_lp(lp, max_iter)
        return sol, None


def check_kkt(lp: LinearProgram, sol: LPSolution) -> KKTReport:
    """Report KKT residuals for an optimal solution (no judgement, no raise)."""
    if sol.status != STATUS_OPTIMAL:
        raise ValidationError("check_kkt expects an optimal solution")
    x = np.asarray(sol.x, dtype=float)
    sign = 1.0 if lp.sense == "min" else -1.0
    c = sign * lp.objective
    g_eq = sign * sol.duals_eq if sol.duals_eq is not None else np.zeros(0)
    mu = sol.duals_ub if sol.duals_ub is not None else np.zeros(0)

    pe = float(np.max(np.abs(lp.a_eq @ x - lp.b_eq))) if lp.b_eq.size else 0.0
    slack = lp.b_ub - lp.a_ub @ x if lp.b_ub.size else np.zeros(0)
    pu = float(max(0.0, np.max(-slack))) if slack.size else 0.0
    pb = 0.0
    low_gap = x - lp.lower
    up_gap = lp.upper - x
    pb = max(pb, float(max(0.0, np.max(-low_gap[np.isfinite(lp.lower)], initial=0.0))))
    pb = max(pb, float(max(0.0, np.max(-up_gap[np.isfinite(lp.upper)], initial=0.0))))

    r = c - lp.a_eq.T @ g_eq + lp.a_ub.T @ mu if lp.b_ub.size else c - lp.a_eq.T @ g_eq
    ds = float(max(0.0, np.max(-mu, initial=0.0)))
    # A positive reduced cost needs a finite lower bound to lean on (and
    # symmetrically for negative ones); otherwise it is a dual violation.
    ds = max(ds, float(np.max(np.where(np.isfinite(lp.lower), 0.0, np.maximum(r, 0.0)), initial=0.0)))
    ds = max(ds, float(np.max(np.where(np.isfinite(lp.upper), 0.0, np.maximum(-r, 0.0)), initial=0.0)))

    comp = 0.0
    if slack.size:
        comp = float(np.max(np.abs(mu * slack), initial=0.0))
    r_pos = np.maximum(r, 0.0)
    r_neg = np.maximum(-r, 0.0)
    finite_low = np.isfinite(lp.lower)
    finite_up = np.isfinite(lp.upper)
    comp = max(comp, float(np.max(r_pos[finite_low] * low_gap[finite_low], initial=0.0)))
    comp = max(comp, float(np.max(r_neg[finite_up] * up_gap[finite_up], initial=0.0)))

    dual_obj = float(lp.b_eq @ g_eq) if lp.b_eq.size else 0.0
    if lp.b_ub.size:
        dual_obj -= float(lp.b_ub @ mu)
    bound_term = np.zeros_like(r)
    bound_term[finite_low] += lp.lower[finite_low] * r_pos[finite_low]
    bound_term[finite_up] -= lp.upper[finite_up] * r_neg[finite_up]
    dual_obj += float(np.sum(bound_term))
    gap = abs(float(c @ x) - dual_obj)

    return KKTReport(primal_equality=pe, primal_inequality=pu, primal_bounds=pb,
                     dual_sign=ds, complementarity=comp, duality_gap=gap)
