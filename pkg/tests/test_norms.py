import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nspolar.core import CoeffTensor, Direction, HomPolynomial, eval_mform, eval_polynomial
from nspolar.norms import (
    BallSpec,
    TorusSampler,
    alternating_ascent,
    mu_lower_bound,
    mu_upper_bound_T,
    sup_mform_ball,
    sup_poly_ball,
    torus_expectation,
)
from nspolar.shuffle import mask_D


def phase_grid(points):
    return np.exp(2j * np.pi * np.arange(points) / points)


def test_ball_best_response_attains_dual_norm():
    rng = np.random.default_rng(0)
    g = rng.normal(size=5) + 1j * rng.normal(size=5)
    for p in [1, 1.5, 2, 3, math.inf]:
        ball = BallSpec(p)
        x = ball.best_response(g)
        assert ball.contains(x)
        value = np.dot(g, x)
        assert value.real == pytest.approx(np.linalg.norm(g, ball.dual), rel=1e-10)
        assert abs(value.imag) < 1e-10
    assert BallSpec(2).best_response(np.zeros(3)) is None


def test_ball_rejects_small_p():
    with pytest.raises(ValueError):
        BallSpec(0.5)


def test_sum_of_squares_on_torus():
    P = HomPolynomial(2, 2, {(1, 1): 1.0, (2, 2): 1.0})
    est = sup_poly_ball(P, BallSpec(math.inf), restarts=8, seed=1)
    assert est.direction is Direction.LOWER
    assert est.value == pytest.approx(2.0, abs=1e-8)
    assert abs(eval_polynomial(P, est.witness)) == pytest.approx(est.value)


def test_triangular_form_against_phase_grid():
    # L(x, y) = x1 y1 + x1 y2 + x2 y2; fix x1 = y1 = 1 by rotation invariance
    L = CoeffTensor(2, 2, {(1, 1): 1.0, (1, 2): 1.0, (2, 2): 1.0})
    grid = phase_grid(64)
    oracle = max(abs(1 + b + a * b) for a, b in itertools.product(grid, grid))
    est = sup_mform_ball(L, BallSpec(math.inf), restarts=16, seed=0)
    assert est.value >= oracle - 1e-3
    assert est.value <= 3 + 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([1, 2, 3, math.inf]))
def test_ascent_is_monotone_and_stays_in_ball(seed, p):
    rng = np.random.default_rng(seed)
    L = CoeffTensor.random(3, 3, rng)
    ball = BallSpec(p)
    start = np.stack([ball.random_point(3, rng) for _ in range(3)])
    trace = []
    value, X, _ = alternating_ascent(L, ball, start, iters=50, trace=trace)
    assert all(b >= a for a, b in zip(trace, trace[1:]))
    assert all(ball.contains(x) for x in X)
    assert value == pytest.approx(abs(eval_mform(L, list(X))))


def test_scaling_and_determinism():
    L = CoeffTensor.random(2, 4, np.random.default_rng(3))
    ball = BallSpec(2)
    a = sup_mform_ball(L, ball, restarts=6, seed=5)
    b = sup_mform_ball(2 * L, ball, restarts=6, seed=5)
    assert b.value == pytest.approx(2 * a.value, rel=1e-10)
    assert sup_mform_ball(L, ball, restarts=6, seed=5).value == a.value
    assert sup_mform_ball(L, ball, restarts=6, seed=5, threads=3).value == a.value


def test_bilinear_l2_norm_is_largest_singular_value():
    L = CoeffTensor.random(2, 4, np.random.default_rng(8))
    est = sup_mform_ball(L, BallSpec(2), restarts=8, seed=0)
    assert est.value == pytest.approx(np.linalg.svd(L.to_dense(), compute_uv=False)[0], rel=1e-8)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_product_polynomial_maximum(m, p):
    est = sup_poly_ball(HomPolynomial.product(m), BallSpec(p), restarts=8, seed=0)
    assert est.value == pytest.approx(m ** (-m / p), rel=1e-8)
    assert BallSpec(p).contains(est.witness)


def test_torus_mean_of_linear_modulus():
    oracle, _ = integrate.quad(lambda t: abs(1 + np.exp(1j * t)), 0, 2 * np.pi)
    oracle /= 2 * np.pi
    assert oracle == pytest.approx(4 / np.pi)
    est = torus_expectation(lambda z: np.abs(z.sum(axis=1)), TorusSampler(2, seed=4), samples=40_000)
    assert abs(est.value - oracle) <= est.ci_halfwidth
    assert est.direction is Direction.STATISTICAL


def test_torus_expectation_invariant_under_phase_rotation_and_threads():
    def f(z):
        return np.abs(z[:, 0] + 2 * z[:, 1] * z[:, 2])

    def rotated(z):
        return f(z * np.exp(1j * np.array([0.3, 1.1, -2.0])))

    base = torus_expectation(f, TorusSampler(3, seed=2), samples=30_000)
    rot = torus_expectation(rotated, TorusSampler(3, seed=9), samples=30_000)
    assert abs(base.value - rot.value) <= base.ci_halfwidth + rot.ci_halfwidth
    threaded = torus_expectation(f, TorusSampler(3, seed=2), samples=30_000, threads=3)
    assert threaded.value == base.value


def test_torus_expectation_reports_nonfinite():
    with pytest.raises(FloatingPointError, match="chunk 0"):
        torus_expectation(lambda z: np.full(len(z), np.nan), TorusSampler(2), samples=10)


def test_mu_of_all_ones_and_diagonal_masks():
    ball = BallSpec(math.inf)
    ones = CoeffTensor(2, 3, {i: 1.0 for i in itertools.product(range(1, 4), repeat=2)})
    est = mu_lower_bound(ones, ball, trials=3, restarts=6)
    assert est.value == pytest.approx(1.0, rel=1e-8)
    diag = mu_lower_bound(mask_D(2, 4, 1, 2).materialize(), ball, trials=4, restarts=8)
    assert diag.value <= 1 + 1e-8


def test_mu_upper_bound():
    assert mu_upper_bound_T(1) == 1
    assert mu_upper_bound_T(32) == pytest.approx(6)
    with pytest.raises(ValueError):
        mu_upper_bound_T(0)
