"""Uncertainty-set tests: probability helpers against tabulated normal
values, hand-rolled Cholesky against numpy, worst-case steps against a
sampling oracle and direct optimality conditions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from arotnep.ellipsoid import (
    EllipsoidalSet,
    beta_for_quantile,
    cholesky_lower,
    phi,
    phi_inv,
    prob_exceedance,
    soyster_beta,
    std_from_interval,
)
from arotnep.errors import (
    DimensionMismatch,
    DomainError,
    NotPositiveDefinite,
    ValidationError,
)
from oracles import ellipsoid_box_argmax


def random_spd(rng, n, jitter=0.3):
    m = rng.normal(size=(n, n))
    return m @ m.T + jitter * np.eye(n)


# ---------------------------------------------------------------------------
# probability helpers


@pytest.mark.parametrize("x,p,tol", [
    (1.28155, 0.9, 1e-5),
    (2.3263, 0.99, 1e-5),
    (4.3, 0.99999146, 1e-8),
    (0.0, 0.5, 1e-15),
])
def test_normal_cdf_table_values(x, p, tol):
    assert phi(x) == pytest.approx(p, abs=tol)


def test_quantile_matches_table():
    assert phi_inv(0.9) == pytest.approx(1.28155, abs=1e-5)
    assert phi_inv(0.99) == pytest.approx(2.3263, abs=1e-4)
    assert beta_for_quantile(0.99999146) == pytest.approx(4.3, abs=1e-3)


@given(st.floats(1e-6, 1.0 - 1e-6))
@settings(max_examples=60, deadline=None)
def test_quantile_round_trip(p):
    assert phi(phi_inv(p)) == pytest.approx(p, abs=1e-12)


def test_exceedance_is_upper_tail():
    for beta in (0.0, 1.28155, 2.3263, 4.3):
        assert prob_exceedance(beta) == pytest.approx(1.0 - phi(beta), abs=1e-15)


def test_interval_radius_corner_rule():
    # With every parameter limited to z-sigma intervals, the corner of the
    # box sits at Euclidean z-distance z * sqrt(n).
    assert soyster_beta(8, 2.3263) == pytest.approx(2.3263 * math.sqrt(8.0), abs=1e-12)
    assert soyster_beta(8, 2.3263) == pytest.approx(6.58, abs=5e-3)
    assert soyster_beta(27, 2.3263) == pytest.approx(12.09, abs=5e-3)
    assert soyster_beta(145, 2.3263) == pytest.approx(28.0124, abs=5e-3)


def test_std_from_interval():
    hw = np.array([75.0, 180.0, 300.0])
    np.testing.assert_allclose(std_from_interval(hw, 2.3263), hw / 2.3263)
    with pytest.raises(DomainError):
        std_from_interval(hw, 0.0)
    with pytest.raises(ValidationError):
        std_from_interval([-1.0], 2.0)


def test_probability_domain_errors():
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(DomainError):
            phi_inv(bad)
    with pytest.raises(DomainError):
        soyster_beta(0, 2.0)
    with pytest.raises(DomainError):
        soyster_beta(8, -1.0)


# ---------------------------------------------------------------------------
# Cholesky


@pytest.mark.parametrize("seed", range(8))
def test_cholesky_matches_numpy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    a = random_spd(rng, n)
    L = cholesky_lower(a)
    np.testing.assert_allclose(L, np.linalg.cholesky(a), atol=1e-10)
    np.testing.assert_allclose(L @ L.T, a, atol=1e-10)


def test_cholesky_failure_reports_minor_index():
    with pytest.raises(NotPositiveDefinite) as exc:
        cholesky_lower([[1.0, 2.0], [2.0, 1.0]])
    assert exc.value.index == 1
    with pytest.raises(NotPositiveDefinite) as exc:
        cholesky_lower([[0.0]])
    assert exc.value.index == 0


def test_cholesky_rejects_nonsquare():
    with pytest.raises(DimensionMismatch):
        cholesky_lower(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# set construction and geometry


def test_constructor_validation():
    with pytest.raises(ValidationError):
        EllipsoidalSet([0.0, 0.0], [[1.0, 0.5], [0.2, 1.0]], 1.0)
    with pytest.raises(DomainError):
        EllipsoidalSet([0.0], [[1.0]], -1.0)
    with pytest.raises(DimensionMismatch):
        EllipsoidalSet([0.0, 0.0], [[1.0]], 1.0)
    with pytest.raises(ValidationError):
        EllipsoidalSet([0.0], [[1.0]], 1.0, signs=[2.0])
    with pytest.raises(NotPositiveDefinite):
        EllipsoidalSet([0.0, 0.0], [[1.0, 1.0], [1.0, 1.0]], 1.0)


def test_contains_and_signs():
    es = EllipsoidalSet([10.0, 5.0], np.eye(2), 2.0,
                        half_width=[3.0, 3.0], signs=[-1.0, 1.0])
    assert es.contains([10.0, 5.0])
    assert es.contains([9.0, 6.0])
    assert not es.contains([10.5, 5.0])   # capacity above its mean
    assert not es.contains([10.0, 4.5])   # load below its mean
    assert not es.contains([10.0, 5.0 + 2.5])  # outside radius
    np.testing.assert_allclose(es.lower, [7.0, 5.0])
    np.testing.assert_allclose(es.upper, [10.0, 8.0])


def test_mahalanobis_equals_z_norm():
    rng = np.random.default_rng(3)
    cov = random_spd(rng, 4)
    es = EllipsoidalSet(rng.normal(size=4), cov, 1.5)
    for _ in range(20):
        z = rng.normal(size=4)
        d = es.map_z(z)
        assert es.mahalanobis_sq(d) == pytest.approx(float(z @ z), rel=1e-9, abs=1e-9)


def test_sample_moments():
    rng = np.random.default_rng(11)
    mean = np.array([4.0, -2.0, 7.0])
    cov = random_spd(rng, 3, jitter=0.5)
    es = EllipsoidalSet(mean, cov, 1.0)
    draws = es.sample(rng, 40_000)
    np.testing.assert_allclose(draws.mean(axis=0), mean, atol=0.05)
    np.testing.assert_allclose(np.cov(draws.T), cov, atol=0.12)


def test_pull_inside():
    rng = np.random.default_rng(9)
    cov = random_spd(rng, 3)
    es = EllipsoidalSet([5.0, 5.0, 5.0], cov, 1.0,
                        half_width=[1.0, 1.0, 1.0], signs=[-1.0, 1.0, 0.0])
    for _ in range(50):
        wild = rng.normal(scale=10.0, size=3)
        assert es.contains(es.pull_inside(wild), tol=1e-9)


# ---------------------------------------------------------------------------
# worst-case steps


def test_analytical_step_identity_covariance():
    es = EllipsoidalSet(np.zeros(3), np.eye(3), 2.0)
    eta = np.array([3.0, 0.0, 4.0])
    step = es.analytical_step(eta)
    assert not step.zero_gradient
    np.testing.assert_allclose(step.point, 2.0 * eta / 5.0, atol=1e-12)


def test_analytical_step_objective_value():
    rng = np.random.default_rng(21)
    cov = random_spd(rng, 5)
    mean = rng.normal(size=5)
    es = EllipsoidalSet(mean, cov, 1.7)
    eta = rng.normal(size=5)
    step = es.analytical_step(eta)
    want = float(eta @ mean) + 1.7 * math.sqrt(float(eta @ cov @ eta))
    assert float(eta @ step.point) == pytest.approx(want, rel=1e-12)
    assert es.mahalanobis_sq(step.point) == pytest.approx(1.7**2, rel=1e-9)


def test_analytical_step_zero_gradient_flag():
    es = EllipsoidalSet([1.0, 2.0], np.eye(2), 1.0)
    step = es.analytical_step([0.0, 0.0])
    assert step.zero_gradient
    np.testing.assert_allclose(step.point, [1.0, 2.0])


def test_bounded_step_equals_analytical_when_box_loose():
    rng = np.random.default_rng(31)
    cov = random_spd(rng, 4)
    es_free = EllipsoidalSet(np.zeros(4), cov, 1.2)
    es_box = EllipsoidalSet(np.zeros(4), cov, 1.2, half_width=np.full(4, 1e6))
    eta = rng.normal(size=4)
    np.testing.assert_allclose(es_box.bounded_step(eta).point,
                               es_free.analytical_step(eta).point, atol=1e-9)


def test_bounded_step_box_corner():
    # Huge radius: the intervals bind and the corner wins.
    es = EllipsoidalSet([0.0, 0.0], np.eye(2), 50.0, half_width=[1.0, 2.0])
    step = es.bounded_step(np.array([1.0, -1.0]))
    assert step.stage == "box"
    np.testing.assert_allclose(step.point, [1.0, -2.0], atol=1e-12)


def test_bounded_step_respects_signs():
    # The gradient rewards raising the first coordinate, but it is a
    # capacity-like parameter that may only fall.
    es = EllipsoidalSet([10.0, 10.0], np.eye(2), 1.0,
                        half_width=[5.0, 5.0], signs=[-1.0, 1.0])
    step = es.bounded_step(np.array([1.0, 1.0]))
    assert step.point[0] <= 10.0 + 1e-9
    assert step.point[1] >= 10.0 - 1e-9
    assert es.contains(step.point, tol=1e-7)


def test_bounded_step_boundary_case_2d():
    # Tight interval on one coordinate forces the curved-boundary solve.
    es = EllipsoidalSet([0.0, 0.0], np.eye(2), 2.0, half_width=[0.5, 10.0])
    eta = np.array([1.0, 1.0])
    step = es.bounded_step(eta)
    assert step.stage == "boundary"
    # Clamp the first coordinate, spend the rest of the radius on the second.
    want = np.array([0.5, math.sqrt(4.0 - 0.25)])
    np.testing.assert_allclose(step.point, want, atol=1e-7)


def test_bounded_step_zero_radius():
    es = EllipsoidalSet([3.0, 4.0], np.eye(2), 0.0, half_width=[1.0, 1.0])
    step = es.bounded_step(np.array([5.0, -2.0]))
    np.testing.assert_allclose(step.point, [3.0, 4.0], atol=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_bounded_step_beats_sampling_oracle(seed):
    rng = np.random.default_rng(6000 + seed)
    n = int(rng.integers(2, 7))
    cov = random_spd(rng, n)
    mean = rng.normal(scale=3.0, size=n)
    radius = float(rng.uniform(0.5, 3.0))
    half = rng.uniform(0.3, 3.0, size=n)
    signs = rng.choice([-1.0, 0.0, 1.0], size=n)
    es = EllipsoidalSet(mean, cov, radius, half_width=half, signs=signs)
    eta = rng.normal(size=n)
    step = es.bounded_step(eta)
    assert es.contains(step.point, tol=1e-7)
    _, oracle_val = ellipsoid_box_argmax(rng, eta, mean, cov, radius,
                                         es.lower, es.upper)
    ours = float(eta @ step.point)
    slack = 1e-6 * (1.0 + abs(oracle_val))
    assert ours >= oracle_val - slack
