import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lpwfcm import rrc as R

# Monte Carlo estimate with 10**7 sample pairs (seed 12345) at supports
# (0.7, 0.3), c = 2; frozen so the unit suite stays fast.
MC_07_C2 = (0.8487304, 1.1338e-4)


def test_beta_params_examples():
    assert R.beta_params(0.5, 2) == R.BetaParams(1.0, 1.0)
    p = R.beta_params(0.7, 2)
    assert (p.lam, p.mu) == pytest.approx((1.4, 0.6), abs=1e-15)
    p = R.beta_params(1.0, 2)
    assert (p.lam, p.mu) == pytest.approx((2 * (1 - 1e-6), 2e-6), rel=1e-9)
    assert p.mean == pytest.approx(1 - 1e-6)
    with pytest.raises(ValueError):
        R.beta_params(0.5, 0)


def test_beta_functions_examples():
    u = R.BetaParams(1.0, 1.0)
    assert R.beta_pdf(0.5, u) == pytest.approx(1.0, abs=1e-15)
    assert R.beta_cdf(0.5, u) == pytest.approx(0.5, abs=1e-15)
    q = R.BetaParams(2.0, 5.0)
    assert R.beta_cdf(0.0, q) == 0.0 and R.beta_cdf(1.0, q) == 1.0
    assert R.beta_cdf(0.3, q) == pytest.approx(oracles.betainc_cf(2.0, 5.0, 0.3), abs=1e-12)
    with pytest.raises(ValueError):
        R.beta_cdf(0.3, R.BetaParams(0.0, 1.0))


@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0, 1))
def test_beta_cdf_against_continued_fraction(a, b, x):
    assert R.beta_cdf(x, R.BetaParams(a, b)) == pytest.approx(oracles.betainc_cf(a, b, x),
                                                              abs=1e-12)


def test_tie_is_exactly_half():
    assert R.rrc_probability((0.5, 0.5), 2.0) == (0.5, 0.5)
    assert R.rrc_probability((3.0, 3.0), 1.0) == (0.5, 0.5)


def test_limiting_support():
    p1, _ = R.rrc_probability((1 - 1e-6, 1e-6), 2.0)
    assert p1 >= 0.999


def test_monte_carlo_value():
    est, se = MC_07_C2
    p1, p2 = R.rrc_probability((0.7, 0.3), 2.0)
    assert abs(p1 - est) <= 3 * se
    assert p1 + p2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 2.0, 8.0, 50.0])
@pytest.mark.parametrize("d", [1e-6, 0.05, 0.3, 0.61, 0.95, 1 - 1e-6])
def test_against_high_precision_integral(c, d):
    p1, _ = R.rrc_probability((d, 1 - d), c)
    assert p1 == pytest.approx(oracles.rrc_mpmath(d, 1 - d, c), abs=1e-9)


@pytest.mark.parametrize("c", [1.0, 2.0, 8.0])
def test_refinement_error(c):
    grid = np.linspace(0.01, 0.99, 25)
    sp = np.column_stack([grid, 1 - grid])
    base = R.rrc_probabilities(sp, R.RRCConfig(c, 1025))
    fine = R.rrc_probabilities(sp, R.RRCConfig(c, 4097))
    assert np.max(np.abs(base - fine)) <= 1e-6


def test_sum_to_one_method_closed_form():
    p1, p2 = R.rrc_probability((0.7, 0.3), 2.0, method="sum-to-one")
    assert p1 == pytest.approx(1 - oracles.betainc_cf(1.4, 0.6, 0.5), abs=1e-12)
    assert p1 + p2 == pytest.approx(1.0, abs=1e-12)


def test_errors():
    with pytest.raises(R.RRCNumericError):
        R.rrc_probabilities([np.nan, 0.5])
    with pytest.raises(R.RRCNumericError):
        R.rrc_probabilities([0.0, 0.0])
    with pytest.raises(ValueError):
        R.RRCConfig(quad_points=8)


def test_batch_matches_single():
    sp = np.array([[0.2, 0.8], [0.9, 0.1], [0.5, 0.5]])
    batch = R.rrc_probabilities(sp)
    for row, out in zip(sp, batch):
        assert tuple(out) == R.rrc_probability(row)


@given(st.floats(0, 1), st.sampled_from([0.5, 1.0, 2.0, 8.0]))
def test_complementary_and_swap_symmetric(d, c):
    p = R.rrc_probabilities([d, 1 - d], R.RRCConfig(c))
    q = R.rrc_probabilities([1 - d, d], R.RRCConfig(c))
    assert p[0] + p[1] == 1.0
    np.testing.assert_array_equal(p, q[::-1])
    assert (0 <= p).all() and (p <= 1).all()


@given(st.floats(0.01, 0.49), st.floats(0.01, 0.49), st.sampled_from([1.0, 2.0, 8.0]))
def test_monotone_in_support(a, b, c):
    lo, hi = sorted((a, b))
    p_lo = R.rrc_probability((lo, 1 - lo), c)[0]
    p_hi = R.rrc_probability((hi, 1 - hi), c)[0]
    assert p_lo <= p_hi + 1e-12
