import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycoint.longmem import (
    BivariateProcessSpec,
    MemoryParam,
    SamplePath,
    asymptotic_constant,
    autocovariance,
    cross_asymptotic_constants,
    cross_covariance,
    cross_covariance_exact,
    ma_weights,
    process_variance,
    simulate,
    truncated_autocovariance,
)
from polycoint.spectral import sample_cross_covariance

# rho * sum_{j < N - 3} psi_j(0.4) psi_{j+3}(0.2), N = 1e5, by math.fsum
CROSS_04_02_LAG3 = 0.13409269797449497


# -- weights -----------------------------------------------------------------


def test_ma_weights_examples():
    assert ma_weights(0.0, 3).tolist() == [1.0, 0.0, 0.0]
    np.testing.assert_allclose(ma_weights(0.25, 3), [1.0, 0.25, 0.15625], rtol=0, atol=1e-15)
    np.testing.assert_allclose(ma_weights(0.4, 2), [1.0, 0.4], rtol=0, atol=1e-15)


def test_ma_weights_match_gamma_ratio():
    from scipy.special import gammaln

    d, j = 0.3, np.arange(1, 2000)
    expect = np.exp(gammaln(j + d) - gammaln(d) - gammaln(j + 1))
    np.testing.assert_allclose(ma_weights(d, 2000)[1:], expect, rtol=1e-11)


@pytest.mark.parametrize("d", [-0.1, 0.5, 0.7, float("nan")])
def test_memory_param_range(d):
    with pytest.raises(ValueError):
        MemoryParam(d)


# -- autocovariance ----------------------------------------------------------


def test_autocovariance_white_noise():
    assert autocovariance(0.0, 0) == 1.0
    assert autocovariance(0.0, 5) == 0.0
    assert autocovariance(0.0, 0, variance=2.5) == 2.5


def test_autocovariance_d025_lag0():
    closed = autocovariance(0.25, 0)
    assert closed == pytest.approx(1.18035, abs=1e-5)
    # sum of psi_j^2 over 1e6 terms; its neglected tail is about N^(2d-1) / ((1-2d) Gamma(d)^2)
    psi = ma_weights(0.25, 10**6)
    tail = (10**6) ** (-0.5) / (0.5 * math.gamma(0.25) ** 2)
    assert math.fsum(psi * psi) == pytest.approx(closed - tail, rel=1e-6)


def test_autocovariance_symmetric_and_vectorised():
    lags = np.arange(-20, 21)
    vals = autocovariance(0.3, lags, variance=1.7)
    np.testing.assert_array_equal(vals, vals[::-1])
    assert vals[25] == autocovariance(0.3, 5, variance=1.7)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_autocovariance_decay_law(d):
    taus = np.arange(100, 1001)
    slope = np.polyfit(np.log(taus), np.log(autocovariance(d, taus)), 1)[0]
    assert abs(slope - (2 * d - 1)) <= 0.05 * abs(2 * d - 1)
    ratio = autocovariance(d, 10**6) / autocovariance(d, 10**6 - 1)
    assert ratio == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("d", [0.1, 0.25, 0.4])
def test_truncated_autocovariance_direct_sum(d):
    N = 5000
    psi = ma_weights(d, N)
    lags = np.array([0, 1, 7, 300, 4999, 5000])
    direct = [float(psi[: N - t] @ psi[t:]) if t < N else 0.0 for t in lags]
    np.testing.assert_allclose(truncated_autocovariance(d, lags, N), direct, rtol=1e-12, atol=1e-15)


def test_asymptotic_constant_matches_tail():
    d = 0.3
    tau = 10**6
    assert autocovariance(d, tau) / tau ** (2 * d - 1) == pytest.approx(asymptotic_constant(d), rel=1e-5)


# -- cross-covariance --------------------------------------------------------


def test_cross_covariance_rho_zero():
    spec = BivariateProcessSpec(0.4, 0.2, 0.0, ma_truncation=1000)
    assert all(cross_covariance(spec, lag) == 0.0 for lag in (-5, 0, 5))


def test_cross_covariance_white_noise():
    spec = BivariateProcessSpec(0.0, 0.0, 1.0, ma_truncation=10)
    assert cross_covariance(spec, 0) == 1.0
    assert cross_covariance(spec, 2) == 0.0


def test_cross_covariance_frozen_value():
    spec = BivariateProcessSpec(0.4, 0.2, 0.5, ma_truncation=10**5)
    assert cross_covariance(spec, 3) == pytest.approx(CROSS_04_02_LAG3, rel=1e-12)
    psi_x, psi_e = ma_weights(0.4, 10**5), ma_weights(0.2, 10**5)
    assert cross_covariance(spec, -3) == pytest.approx(0.5 * math.fsum(psi_e[: 10**5 - 3] * psi_x[3:]), rel=1e-12)


def test_cross_covariance_sample_check():
    # short truncation keeps the simulation cheap; the identity does not depend on N
    spec = BivariateProcessSpec(0.4, 0.2, 0.5, ma_truncation=256)
    n, R = 4096, 200
    vals = np.array([sample_cross_covariance(p.x, p.eps, 3) for p in (simulate(spec, n, (1, r)) for r in range(R))])
    se = vals.std(ddof=1) / math.sqrt(R)
    assert abs(vals.mean() - cross_covariance(spec, 3)) < 4 * se


@given(rho=st.floats(-0.5, 0.5).filter(lambda r: r == 0 or abs(r) > 1e-300), lag=st.integers(-40, 40))
@settings(max_examples=40, deadline=None)
def test_cross_covariance_bilinear_in_rho(rho, lag):
    a = BivariateProcessSpec(0.35, 0.15, rho, ma_truncation=512)
    b = BivariateProcessSpec(0.35, 0.15, 2 * rho, ma_truncation=512)
    assert cross_covariance(b, lag) == 2 * cross_covariance(a, lag)


def test_cross_covariance_exact_limits():
    lags = np.arange(-30, 31)
    np.testing.assert_allclose(cross_covariance_exact(0.3, 0.3, lags, rho=1.0), autocovariance(0.3, lags), rtol=1e-12)
    spec = BivariateProcessSpec(0.3, 0.1, 0.5, ma_truncation=10**6)
    for lag in (-10, 0, 10):
        trunc = cross_covariance(spec, lag)
        assert trunc == pytest.approx(cross_covariance_exact(0.3, 0.1, lag, rho=0.5), rel=1e-3)


def test_cross_asymptotic_constants():
    spec = BivariateProcessSpec(0.4, 0.2, 0.5)
    g_plus, g_minus = cross_asymptotic_constants(spec)
    tau = 10**6
    e = 0.4 + 0.2 - 1
    assert cross_covariance_exact(0.4, 0.2, tau, 0.5) / tau**e == pytest.approx(g_plus, rel=1e-4)
    assert cross_covariance_exact(0.4, 0.2, -tau, 0.5) / tau**e == pytest.approx(g_minus, rel=1e-4)


def test_spec_variances_are_truncated():
    spec = BivariateProcessSpec(0.45, 0.15, 0.5)
    assert spec.var_x == pytest.approx(process_variance(0.45), rel=1e-14)
    assert spec.var_x == pytest.approx(truncated_autocovariance(0.45, [0], spec.ma_truncation)[0], rel=1e-12)
    assert spec.var_x < autocovariance(0.45, 0)


@pytest.mark.parametrize("kwargs", [{"rho": 1.5}, {"ma_truncation": 0}, {"innovation_variance": 0.0}, {"d_x": 0.5}])
def test_process_spec_validation(kwargs):
    base = dict(d_x=0.3, d_eps=0.1, rho=0.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        BivariateProcessSpec(**base)


# -- simulation --------------------------------------------------------------


def test_simulate_identical_white_noise():
    p = simulate(BivariateProcessSpec(0.0, 0.0, 1.0), 500, 3)
    np.testing.assert_array_equal(p.x, p.eps)


def test_simulate_deterministic():
    spec = BivariateProcessSpec(0.4, 0.2, 0.3)
    a, b = simulate(spec, 1000, 42), simulate(spec, 1000, 42)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.eps, b.eps)
    c = simulate(spec, 1000, 43)
    assert not np.array_equal(a.x, c.x)
    assert a.n == 1000 and isinstance(a, SamplePath)


def test_simulate_tuple_seed_independence():
    spec = BivariateProcessSpec(0.2, 0.1, 0.0, ma_truncation=64)
    a = simulate(spec, 100, (0, 100, 1))
    b = simulate(spec, 100, (0, 100, 2))
    assert not np.array_equal(a.x, b.x)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_simulate_rejects_bad_n(n):
    with pytest.raises(ValueError):
        simulate(BivariateProcessSpec(0.2, 0.1), n, 0)


def test_simulate_rho_zero_uncorrelated():
    spec = BivariateProcessSpec(0.3, 0.2, 0.0)
    vals = np.array([sample_cross_covariance(p.x, p.eps, 0) for p in (simulate(spec, 1024, (5, r)) for r in range(200))])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean()) < 4 * se


def test_simulate_autocovariance_bands():
    # the truncated moving average is the process actually simulated
    spec = BivariateProcessSpec(0.4, 0.0, 0.0)
    n, R, lags = 2**14, 200, np.arange(1, 51)
    covs = np.empty((R, lags.size))
    for r in range(R):
        x = simulate(spec, n, (11, r)).x
        full = np.correlate(x, x, mode="full")[n - 1 :] / n
        covs[r] = full[lags]
    target = truncated_autocovariance(0.4, lags, spec.ma_truncation)
    se = covs.std(axis=0, ddof=1) / math.sqrt(R)
    assert np.all(np.abs(covs.mean(axis=0) - target) < 4 * se)


def test_innovation_variance_scales_paths():
    a = simulate(BivariateProcessSpec(0.3, 0.1, 0.2, ma_truncation=128), 300, 1)
    b = simulate(BivariateProcessSpec(0.3, 0.1, 0.2, ma_truncation=128, innovation_variance=4.0), 300, 1)
    np.testing.assert_allclose(b.x, 2 * a.x, rtol=1e-12)
    np.testing.assert_allclose(b.eps, 2 * a.eps, rtol=1e-12)
