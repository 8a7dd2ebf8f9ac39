import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import optimize

from llr_lab import analytic, poisson
from llr_lab.errors import ParameterError
from llr_lab.rng import derive_stream
from llr_lab.validation import ladder_prime_samples

rhos = st.floats(1e-3, 20.0)
ys = st.floats(-50.0, 50.0)


def test_half_moment_values():
    assert analytic.half_moment(1.0, 0.0) == 1.0
    assert analytic.half_moment(1.0, 2.0) == pytest.approx(math.exp(-math.tanh(0.25)), rel=1e-15)
    assert analytic.half_moment(1.0, 2.0) == pytest.approx(0.782768, abs=1e-6)
    assert analytic.half_moment(1e-6, 1.0) == pytest.approx(math.exp(-1 / 8), abs=1e-6)


@given(rhos, ys)
def test_half_moment_symmetric(rho, y):
    assert analytic.half_moment(rho, y) == analytic.half_moment(rho, -y)


@pytest.mark.parametrize("y", [1.0, -1.0, 10.0, -10.0])
def test_half_moment_exponential_bound(y):
    assert analytic.half_moment(0.01, y) <= math.exp(-0.12 * abs(y))


@pytest.mark.parametrize("fn", [analytic.half_moment, analytic.quarter_moment])
@pytest.mark.parametrize("rho", [0.0, -1.0, math.nan, math.inf])
def test_rho_errors(fn, rho):
    with pytest.raises(ParameterError):
        fn(rho, 1.0)


def test_quarter_moment_values():
    assert analytic.quarter_moment(2.0, 0.0) == 1.0
    assert analytic.quarter_moment(1e-6, 1.0) == pytest.approx(math.exp(-3 / 32), abs=1e-6)
    assert analytic.quarter_moment(1e-6, -1.0) == pytest.approx(math.exp(-3 / 32), abs=1e-6)


@given(st.floats(1e-2, 20.0), ys)
def test_quarter_moment_matches_mgf(rho, y):
    # direct evaluation of E e^{(1/4) ln X(y)} from the Poisson MGF
    if y >= 0:
        lam = y / (rho * math.expm1(rho))
        direct = math.exp(lam * math.expm1(rho / 4) - y / (4 * rho))
    else:
        lam = -y / (rho * -math.expm1(-rho))
        direct = math.exp(lam * math.expm1(-rho / 4) - y / (4 * rho))
    assert analytic.quarter_moment(rho, y) == pytest.approx(direct, rel=1e-9, abs=1e-300)


@given(rhos, ys)
def test_moment_bounds(rho, y):
    assert 0 < analytic.half_moment(rho, y) <= 1
    assert 0 < analytic.quarter_moment(rho, y) <= 1


def test_quarter_moment_monte_carlo(seed):
    x = np.exp(0.25 * poisson.sample_marginal_logX(1.0, 2.0, derive_stream(seed, 0), 10**5))
    assert abs(x.mean() - analytic.quarter_moment(1.0, 2.0)) <= 4 * x.std(ddof=1) / math.sqrt(x.size)


def test_sqrt_increment():
    assert analytic.sqrt_increment_second_moment(1.0, 0.7, 0.7) == 0.0


@given(rhos, ys, ys)
def test_sqrt_increment_bound(rho, y1, y2):
    assert analytic.sqrt_increment_second_moment(rho, y1, y2) <= abs(y1 - y2) / 4 * (1 + 1e-12)


def test_sqrt_increment_monte_carlo(seed):
    n = 10**5
    a = poisson.sample_marginal_logX(0.5, 1.0, derive_stream(seed, 1), n)
    b = poisson.sample_marginal_logX(0.5, -1.0, derive_stream(seed, 2), n)
    d = (np.exp(0.5 * a) - np.exp(0.5 * b)) ** 2
    exact = analytic.sqrt_increment_second_moment(0.5, 1.0, -1.0)
    assert abs(d.mean() - exact) <= 4 * d.std(ddof=1) / math.sqrt(n)


def test_log_increment_limits():
    for side in ("positive", "negative"):
        beta, gamma = analytic.log_increment_coefficients(1e-6, side)
        assert beta == pytest.approx(1.0, abs=1e-5)
        assert gamma == pytest.approx(0.25, abs=1e-5)


@pytest.mark.parametrize("side", ["positive", "negative"])
def test_log_increment_small_delta(side):
    beta, _ = analytic.log_increment_coefficients(1.3, side)
    mean, second = analytic.log_increment_moments(1.3, 1e-8, side)
    assert second == pytest.approx(beta * 1e-8, rel=1e-7)
    assert abs(mean) < 1e-8


@pytest.mark.parametrize("side", ["positive", "negative"])
def test_log_increment_consistency(side):
    beta, gamma = analytic.log_increment_coefficients(2.0, side)
    mean, second = analytic.log_increment_moments(2.0, 3.0, side)
    assert second == pytest.approx(3 * beta + 9 * gamma, rel=1e-13)
    assert mean**2 == pytest.approx(9 * gamma, rel=1e-13)


def test_log_increment_errors():
    with pytest.raises(ParameterError):
        analytic.log_increment_moments(1.0, 0.0)
    with pytest.raises(ParameterError):
        analytic.log_increment_moments(1.0, 1.0, "left")


def test_log_increment_monte_carlo(seed):
    x = poisson.sample_marginal_logX(1.0, 1.0, derive_stream(seed, 3), 10**6)
    mean, second = analytic.log_increment_moments(1.0, 1.0)
    var = second - mean**2
    assert abs(x.mean() - mean) <= 4 * x.std(ddof=1) / 1e3
    # SE of the sample variance from the fourth central moment
    c = x - x.mean()
    se_var = math.sqrt((np.mean(c**4) - np.mean(c**2) ** 2) / x.size)
    assert abs(x.var(ddof=1) - var) <= 4 * se_var


def test_eta_tail_basic():
    assert analytic.eta_tail(1.0, -1.0) == 1.0
    for rho in (0.1, 1.0, 5.0):
        assert analytic.eta_tail(rho, 1e-12) == pytest.approx(analytic.ladder_intensity(rho), rel=1e-9)


@pytest.mark.parametrize("rho", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("x", [1.0, 5.0, 20.0])
def test_eta_tail_bound(rho, x):
    assert analytic.eta_tail(rho, x) <= math.exp(-rho * x / 2)


@pytest.mark.parametrize("rho", [0.2, 1.0, 3.0])
def test_eta_tail_monotone(rho):
    xs = np.linspace(0.01, 30.0, 60)
    p = np.array([analytic.eta_tail(rho, x) for x in xs])
    assert np.all(np.diff(p) <= 1e-15) and np.all((0 <= p) & (p <= 1))


def _eta_samples(rho, n, s):
    lam = analytic.ladder_intensity(rho)
    from llr_lab import kernels
    return kernels.get_backend().side_sup_batch(s.bit_generator, lam, 1.0, n, 40.0 / rho, 10**8)


def test_eta_tail_monte_carlo(seed):
    n = 10**5
    sups, cut = _eta_samples(1.0, n, derive_stream(seed, 4))
    assert not cut.any()
    for x in (0.0, 1.0, 3.0):
        p = analytic.eta_tail(1.0, x + 1e-12)
        freq = np.mean(sups > x)
        assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_eta_quarter_moment_monte_carlo(seed):
    n = 10**5
    sups, _ = _eta_samples(1.0, n, derive_stream(seed, 5))
    v = np.exp(sups / 4)
    assert abs(v.mean() - analytic.eta_exp_quarter_moment(1.0)) <= 4 * v.std(ddof=1) / math.sqrt(n)


@pytest.mark.parametrize("rho", [0.05, 0.5, 1.0, 5.0])
def test_eta_quarter_moment_bounds(rho):
    assert 1.0 <= analytic.eta_exp_quarter_moment(rho) <= 2.0


def test_ladder_rate():
    assert analytic.solve_ladder_rate(1 / (1 - math.exp(-1))) == pytest.approx(1.0, abs=1e-10)
    assert analytic.solve_ladder_rate(1.5) == pytest.approx(0.874, abs=5e-4)
    assert analytic.solve_ladder_rate(1 + 1e-8) < 1e-7
    with pytest.raises(ParameterError):
        analytic.solve_ladder_rate(1.0)


@given(st.floats(1.001, 50.0))
def test_ladder_rate_matches_brentq(lp):
    f = lambda r: lp * math.expm1(-r) + r
    assert analytic.solve_ladder_rate(lp) == pytest.approx(optimize.brentq(f, 1e-9, 2 * lp), rel=1e-9)


@given(st.floats(0.01, 10.0))
def test_ladder_rate_equals_rho(rho):
    assert analytic.solve_ladder_rate(rho / -math.expm1(-rho)) == pytest.approx(rho, rel=1e-10)


def test_eta_prime_exponential(seed):
    sups, _ = ladder_prime_samples(1.0, 10**5, derive_stream(seed, 6))
    from llr_lab.montecarlo import ks_statistic
    assert ks_statistic(sups, lambda x: -np.expm1(-x)) < 1.95 / math.sqrt(1e5) * 1.5


def test_limit_constants():
    c = analytic.limit_constants()
    assert c.zeta3 == pytest.approx(analytic.ZETA3_REFERENCE, rel=1e-15)
    assert c.B0 == pytest.approx(19.2329, abs=1e-4)
    assert c.E0 == pytest.approx(0.7397, abs=1e-4)
    assert c.E0 * c.M0 == pytest.approx(c.B0, rel=1e-15)
    assert c.E_inf * c.M_inf == c.B_inf


def test_zeta3_alternating_series_oracle():
    # eta(3) = (3/4) zeta(3); the alternating tail after n terms is below 1/n^3
    eta3 = math.fsum((-1) ** (n + 1) / n**3 for n in range(1, 200001))
    assert analytic.riemann_zeta3() == pytest.approx(eta3 / (1 - 2**-2), rel=1e-14)
