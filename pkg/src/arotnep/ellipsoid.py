"""Ellipsoidal uncertainty sets with optional box and direction limits.

The uncertain vector lives in
``{d : (d - mean)' inv(Sigma) (d - mean) <= radius**2}`` intersected with a
per-coordinate interval derived from half-widths and deviation signs:
coordinates marked ``-1`` may only fall below their mean (generator
capacities), ``+1`` only rise above it (demand loads), ``0`` move both ways.
The maximization helpers answer the question the worst-case subproblem asks
each sweep: given a cost gradient, which point of the set maximizes the
linearized cost?

The probability helpers convert between the set radius and Gaussian
quantiles: a radius ``beta`` covers the cost distribution to level
``phi(beta)`` under the first-order approximation, so
``prob_exceedance(beta)`` is the tail mass above the planned quantile and
``soyster_beta(n, z)`` is the radius at which the ellipsoid reaches the
corner of the ``z``-sigma box in ``n`` dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    NumericalError,
    ValidationError,
)

# ---------------------------------------------------------------------------
# scalar probability helpers


def phi(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-float(x) / math.sqrt(2.0))


def phi_inv(p: float) -> float:
    """Standard normal quantile; requires ``0 < p < 1``."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie strictly in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) < p:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(4):  # Newton polish
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf <= 0.0:
            break
        x -= (phi(x) - p) / pdf
    return x


def prob_exceedance(beta: float) -> float:
    """First-order probability that the realized cost exceeds the radius-beta
    worst case: the upper Gaussian tail beyond ``beta``."""
    return phi(-float(beta))


def beta_for_quantile(p: float) -> float:
    """Radius whose worst case is the ``p``-quantile of the cost."""
    return phi_inv(p)


def soyster_beta(n: int, z: float) -> float:
    """Radius at which the ellipsoid contains the full ``z``-sigma box corner
    in ``n`` dimensions; beyond it the set degenerates to interval robustness."""
    if n < 1:
        raise DomainError(f"dimension must be at least 1, got {n}")
    if z <= 0.0:
        raise DomainError(f"z must be positive, got {z}")
    return float(z) * math.sqrt(float(n))


def std_from_interval(half_width: np.ndarray, z: float) -> np.ndarray:
    """Standard deviations implied by symmetric ``z``-sigma intervals."""
    half_width = np.asarray(half_width, dtype=float)
    if z <= 0.0:
        raise DomainError(f"z must be positive, got {z}")
    if np.any(half_width < 0.0):
        raise ValidationError("interval half-widths must be nonnegative")
    return half_width / float(z)


# ---------------------------------------------------------------------------
# linear algebra


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor of a symmetric positive definite
    matrix; :class:`NotPositiveDefinite` carries the index of the first
    failing leading minor."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        s = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if s <= 0.0 or not np.isfinite(s):
            raise NotPositiveDefinite(index=j)
        L[j, j] = math.sqrt(s)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


# ---------------------------------------------------------------------------
# the set


@dataclass
class MaxLikelihoodPoint:
    """Result of a worst-case linearized step over the set."""

    point: np.ndarray
    zero_gradient: bool = False
    stage: str = "ellipsoid"


class EllipsoidalSet:
    """Frozen description of the uncertainty region; all operations are
    side-effect free."""

    def __init__(self, mean, covariance, radius, half_width=None, signs=None):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float)).copy()
        n = self.mean.size
        cov = np.asarray(covariance, dtype=float)
        if cov.shape != (n, n):
            raise DimensionMismatch(
                f"covariance shape {cov.shape} does not match mean size {n}")
        if not np.all(np.isfinite(cov)):
            raise ValidationError("covariance has nonfinite entries")
        if np.max(np.abs(cov - cov.T)) > 1e-8 * (1.0 + np.max(np.abs(cov))):
            raise ValidationError("covariance must be symmetric")
        self.covariance = 0.5 * (cov + cov.T)
        self.chol = cholesky_lower(self.covariance)
        self._precision = np.linalg.inv(self.covariance)

        radius = float(radius)
        if radius < 0.0 or not np.isfinite(radius):
            raise DomainError(f"radius must be finite and nonnegative, got {radius}")
        self.radius = radius

        if half_width is None:
            hw = np.full(n, np.inf)
        else:
            hw = np.atleast_1d(np.asarray(half_width, dtype=float)).copy()
            if hw.size != n:
                raise DimensionMismatch("half_width size does not match mean")
            if np.any(hw < 0.0) or np.any(np.isnan(hw)):
                raise ValidationError("half-widths must be nonnegative")
        self.half_width = hw

        if signs is None:
            sg = np.zeros(n)
        else:
            sg = np.atleast_1d(np.asarray(signs, dtype=float)).copy()
            if sg.size != n:
                raise DimensionMismatch("signs size does not match mean")
            if not set(np.unique(sg)).issubset({-1.0, 0.0, 1.0}):
                raise ValidationError("signs must be -1, 0 or +1")
        self.signs = sg

        self.lower = np.where(sg > 0, self.mean, self.mean - hw)
        self.upper = np.where(sg < 0, self.mean, self.mean + hw)

    @classmethod
    def from_std_and_correlation(cls, mean, std, correlation, radius,
                                 half_width=None, signs=None) -> "EllipsoidalSet":
        std = np.atleast_1d(np.asarray(std, dtype=float))
        if np.any(std <= 0.0):
            raise ValidationError("standard deviations must be positive")
        corr = np.asarray(correlation, dtype=float)
        cov = corr * np.outer(std, std)
        return cls(mean, cov, radius, half_width=half_width, signs=signs)

    @property
    def dim(self) -> int:
        return self.mean.size

    # -- geometry ---------------------------------------------------------------

    def mahalanobis_sq(self, d: np.ndarray) -> float:
        delta = np.asarray(d, dtype=float) - self.mean
        w = np.linalg.solve(self.chol, delta)
        return float(w @ w)

    def contains(self, d: np.ndarray, tol: float = 1e-9) -> bool:
        d = np.asarray(d, dtype=float)
        scale = 1.0 + float(np.max(np.abs(self.mean)))
        if np.any(d < self.lower - tol * scale) or np.any(d > self.upper + tol * scale):
            return False
        return self.mahalanobis_sq(d) <= self.radius**2 + tol * (1.0 + self.radius**2)

    def map_z(self, z: np.ndarray) -> np.ndarray:
        """Affine image ``mean + L z`` of unit-sphere coordinates."""
        z = np.asarray(z, dtype=float)
        return self.mean + z @ self.chol.T if z.ndim == 2 else self.mean + self.chol @ z

    def sample(self, rng: np.random.Generator, n_samples: int) -> np.ndarray:
        """Gaussian draws with the set's mean and covariance, one per row."""
        if n_samples < 1:
            raise DomainError("n_samples must be at least 1")
        z = rng.standard_normal((n_samples, self.dim))
        return self.map_z(z)

    def pull_inside(self, d: np.ndarray) -> np.ndarray:
        """Clip to the interval limits, then shrink toward the mean until the
        ellipsoid holds; intervals contain the mean so shrinking never breaks
        them. Used to build feasible initial points."""
        d = np.asarray(d, dtype=float)
        clipped = np.clip(d, self.lower, self.upper)
        m2 = self.mahalanobis_sq(clipped)
        if m2 <= self.radius**2 or m2 <= 0.0:
            return clipped
        scale = self.radius / math.sqrt(m2)
        return self.mean + (clipped - self.mean) * scale

    # -- worst-case steps -------------------------------------------------------

    def analytical_step(self, eta: np.ndarray) -> MaxLikelihoodPoint:
        """Maximizer of ``eta @ d`` over the bare ellipsoid (no interval
        limits): ``mean + radius * Sigma eta / sqrt(eta' Sigma eta)``."""
        eta = np.asarray(eta, dtype=float)
        if eta.size != self.dim:
            raise DimensionMismatch("gradient size does not match the set")
        sig_eta = self.covariance @ eta
        denom_sq = float(eta @ sig_eta)
        if denom_sq <= 0.0 or float(np.max(np.abs(eta))) <= 1e-12:
            return MaxLikelihoodPoint(self.mean.copy(), zero_gradient=True)
        d = self.mean + self.radius * sig_eta / math.sqrt(denom_sq)
        return MaxLikelihoodPoint(d, zero_gradient=False)

    def bounded_step(self, eta: np.ndarray, kkt_tol: float = 1e-8) -> MaxLikelihoodPoint:
        """Maximizer of ``eta @ d`` over the ellipsoid intersected with the
        interval limits.

        Tries, in order: the bare-ellipsoid maximizer (kept when it respects
        the intervals), the interval maximizer (kept when it respects the
        ellipsoid), and otherwise an exact boundary solve — bisection on the
        ellipsoid multiplier with cyclic coordinate ascent under clipping,
        verified to a KKT residual of ``kkt_tol``.
        """
        step = self.analytical_step(eta)
        if step.zero_gradient:
            return step
        scale = 1.0 + float(np.max(np.abs(self.mean)))
        if np.all(step.point >= self.lower - 1e-9 * scale) and \
                np.all(step.point <= self.upper + 1e-9 * scale):
            step.point = np.clip(step.point, self.lower, self.upper)
            return step

        eta = np.asarray(eta, dtype=float)
        box_pt = np.where(eta > 0, self.upper, np.where(eta < 0, self.lower, self.mean))
        # The interval maximizer only exists when every active coordinate has
        # a finite limit in its improving direction.
        if np.all(np.isfinite(box_pt)) and \
                self.mahalanobis_sq(box_pt) <= self.radius**2 * (1.0 + 1e-12) + 1e-12:
            return MaxLikelihoodPoint(box_pt, stage="box")

        d = self._boundary_solve(eta, kkt_tol)
        return MaxLikelihoodPoint(d, stage="boundary")

    def _lagrangian_argmax(self, eta: np.ndarray, omega: float) -> np.ndarray:
        """Coordinate-wise maximizer of
        ``eta @ d - (omega/2) (d-mean)' inv(Sigma) (d-mean)`` over the box."""
        Q = self._precision
        lo = self.lower - self.mean
        hi = self.upper - self.mean
        delta = np.clip(np.zeros(self.dim), lo, hi)
        diag = np.diag(Q)
        for _ in range(500):
            biggest = 0.0
            for i in range(self.dim):
                rest = Q[i] @ delta - diag[i] * delta[i]
                target = (eta[i] / omega - rest) / diag[i]
                new = min(max(target, lo[i]), hi[i])
                biggest = max(biggest, abs(new - delta[i]))
                delta[i] = new
            if biggest <= 1e-13 * (1.0 + float(np.max(np.abs(delta)))):
                break
        return self.mean + delta

    def _boundary_solve(self, eta: np.ndarray, kkt_tol: float) -> np.ndarray:
        if self.radius <= 0.0:
            return self.mean.copy()
        target = self.radius**2

        def excess(omega: float) -> tuple[float, np.ndarray]:
            d = self._lagrangian_argmax(eta, omega)
            return self.mahalanobis_sq(d) - target, d

        omega_lo = 1e-10
        ex_lo, _ = excess(omega_lo)
        if ex_lo <= 0.0:
            # Even a nearly unconstrained multiplier keeps us inside: the box
            # point should have been accepted earlier; fall back to it.
            return self._lagrangian_argmax(eta, omega_lo)
        omega_hi = 1.0
        for _ in range(200):
            ex_hi, _ = excess(omega_hi)
            if ex_hi < 0.0:
                break
            omega_lo = omega_hi
            omega_hi *= 10.0
        else:  # pragma: no cover - defensive
            raise NumericalError("could not bracket the ellipsoid multiplier")

        d = self.mean.copy()
        for _ in range(200):
            omega = 0.5 * (omega_lo + omega_hi)
            ex, d = excess(omega)
            if abs(ex) <= 1e-12 * (1.0 + target):
                break
            if ex > 0.0:
                omega_lo = omega
            else:
                omega_hi = omega
        omega = 0.5 * (omega_lo + omega_hi)
        ex, d = excess(omega)

        resid = self._kkt_residual(eta, d, omega)
        if resid > kkt_tol:
            raise NumericalError(
                f"worst-case boundary solve left a KKT residual of {resid:.2e}")
        return d

    def _kkt_residual(self, eta: np.ndarray, d: np.ndarray, omega: float) -> float:
        """Stationarity and feasibility residual of the boundary solve,
        normalized by the gradient magnitude."""
        gnorm = float(np.max(np.abs(eta))) + 1e-30
        delta = d - self.mean
        grad = eta - omega * (self._precision @ delta)
        scale = 1.0 + float(np.max(np.abs(self.mean)))
        res = 0.0
        for i in range(self.dim):
            at_hi = d[i] >= self.upper[i] - 1e-9 * scale
            at_lo = d[i] <= self.lower[i] + 1e-9 * scale
            g = grad[i]
            if at_hi and not at_lo:
                res = max(res, -g / gnorm if -g > 0 else 0.0)
            elif at_lo and not at_hi:
                res = max(res, g / gnorm if g > 0 else 0.0)
            elif not at_lo and not at_hi:
                res = max(res, abs(g) / gnorm)
        m2 = self.mahalanobis_sq(d)
        res = max(res, abs(m2 - self.radius**2) / (1.0 + self.radius**2))
        box_viol = max(float(np.max(d - self.upper, initial=0.0)),
                       float(np.max(self.lower - d, initial=0.0)))
        res = max(res, box_viol / scale)
        return res
