import math

import numpy as np
import pytest

from nspolar.bounds import (
    BourgainFamily,
    bourgain_integrals,
    bourgain_lower_bound,
    chain_check,
    product_poly_ratio,
    upper_bound_certificate,
)
from nspolar.core import Direction, HomPolynomial, spectral_norm
from nspolar.norms import BallSpec
from nspolar.shuffle import BudgetExceeded


def test_upper_certificate_examples():
    # m = 2, n = 8: 2 e^2 2! log2(16) = 16 e^2
    assert upper_bound_certificate(2, 8).value == pytest.approx(16 * math.e**2)
    assert upper_bound_certificate(1, 5).value == pytest.approx(math.e)
    big = upper_bound_certificate(200, 10**6)
    assert big.value == math.inf and math.isfinite(big.log_value)


def test_upper_certificate_grows_with_n():
    values = [upper_bound_certificate(3, n).value for n in (2, 8, 64, 1024)]
    assert values == sorted(values)


@pytest.mark.parametrize("m,p,expected", [(2, 1, 4), (3, 1, 27), (2, 2, 2), (3, 3, 3)])
def test_product_ratio(m, p, expected):
    rep = product_poly_ratio(m, p, restarts=8)
    assert rep.direction is Direction.EXACT
    assert rep.value == pytest.approx(expected, rel=1e-12)
    assert rep.details["estimated_ratio"] == pytest.approx(expected, rel=1e-6)


def test_product_ratio_rejects_torus():
    with pytest.raises(ValueError):
        product_poly_ratio(2, math.inf)


def test_chaos_matches_explicit_sum():
    fam = BourgainFamily(5)
    rng = np.random.default_rng(0)
    x = np.exp(2j * np.pi * rng.random((3, 5)))
    y = np.exp(2j * np.pi * rng.random((3, 5)))
    got = fam.chaos(x, y)
    for s in range(3):
        oracle = sum(fam.v(i, j) * x[s, i - 1] * y[s, j - 1] for i in range(1, 6) for j in range(i + 1, 6))
        assert np.allclose(got[s], oracle)


def test_one_variable_chaos_is_diagonal_conjugate_of_hilbert_matrix():
    fam = BourgainFamily(6)
    x = np.exp(2j * np.pi * np.random.default_rng(1).random((1, 6)))
    M = fam.chaos(x)[0]
    H = fam.chaos(np.ones((1, 6)))[0]
    assert spectral_norm(M) == pytest.approx(spectral_norm(H), rel=1e-9)
    assert spectral_norm(H) < math.pi


def test_blocks_are_disjoint():
    fam = BourgainFamily(11, block_size=3)
    blocks = [set(b) for b in fam.blocks]
    assert len(blocks) == 3
    assert all(a.isdisjoint(b) for i, a in enumerate(blocks) for b in blocks[i + 1:])
    assert set().union(*blocks) <= set(range(1, 12))
    with pytest.raises(ValueError):
        BourgainFamily(4, block_size=1)


def test_two_points_are_exact():
    # For n = 2 the chaos is x1 y2 v12, a unit-norm operator for every sample.
    res = bourgain_integrals(2, samples=200)
    assert res.i1.value == pytest.approx(1.0) and res.i2.value == pytest.approx(1.0)
    assert res.i1.ci_halfwidth < 1e-12


def test_bourgain_small_n_inequalities_and_determinism():
    a = bourgain_integrals(16, samples=400, seed=3)
    b = bourgain_integrals(16, samples=400, seed=3, threads=2)
    assert a.i1.value == b.i1.value and a.i2.value == b.i2.value
    assert a.i1_ok and a.i2_ok
    assert a.i2.value > a.i1.value


def test_m2_lower_bound_equals_integral_ratio():
    direct = bourgain_integrals(12, samples=300, seed=4).ratio
    via = bourgain_lower_bound(2, 12, samples=300, seed=4)
    assert via.value == direct.value
    assert via.ci_halfwidth == pytest.approx(direct.ci_halfwidth)


def test_lower_bound_validation():
    with pytest.raises(ValueError):
        bourgain_lower_bound(3, 10)
    with pytest.raises(ValueError):
        bourgain_lower_bound(4, 3)


@pytest.mark.slow
def test_m4_blocks_at_hypothesis_scale():
    rep = bourgain_lower_bound(4, 807, samples=60, seed=0)
    assert rep.details["block_size"] == 403
    assert rep.details["hypothesis_log_2n_over_m_ge_pi"]
    assert rep.details["target"] > 0
    assert rep.value > 1


def test_chain_check_random_cubic():
    P = HomPolynomial.random(3, 3, np.random.default_rng(2))
    rep = chain_check(P, BallSpec(math.inf), restarts=16)
    assert rep.passed
    assert len(rep.chain) == 3
    assert 1 - 1e-9 <= rep.lower.value <= rep.upper


def test_chain_check_budget():
    with pytest.raises(BudgetExceeded):
        chain_check(HomPolynomial.random(6, 2, np.random.default_rng(0)), BallSpec(2))
