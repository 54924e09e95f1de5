import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polycoint.hermite import HermiteExpansion
from polycoint.longmem import autocovariance
from polycoint.spectral import (
    KernelValidationError,
    LagWindowKernel,
    builtin_kernels,
    fractional_spectral_density,
    frequency_grid,
    get_kernel,
    grid_integral,
    k_fold_convolution,
    read_spectrum_csv,
    sample_covariance_matrices,
    sample_cross_covariance,
    transformed_spectrum,
    wce_f0,
    wce_f0_matrix,
    weighted_lag_sum,
    write_spectrum_csv,
)

# -- sample covariances ------------------------------------------------------


def test_sample_cross_covariance_examples():
    a, b = np.array([1.0, 2.0, 3.0]), np.array([1.0, 0.0, -1.0])
    assert sample_cross_covariance(a, b, 0) == pytest.approx(-2 / 3)
    assert sample_cross_covariance(a, b, 1) == pytest.approx(-2 / 3)
    assert sample_cross_covariance(a, b, -1) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        sample_cross_covariance(a, b, 3)
    with pytest.raises(ValueError):
        sample_cross_covariance(a, b[:2], 0)


@given(seed=st.integers(0, 2**32 - 1), lag=st.integers(-20, 20))
@settings(max_examples=50, deadline=None)
def test_cross_covariance_reflection(seed, lag):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, 50))
    assert sample_cross_covariance(a, b, lag) == pytest.approx(sample_cross_covariance(b, a, -lag), abs=1e-14)


def test_covariance_matrices_agree_with_scalar():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((3, 200))
    C = sample_covariance_matrices(Z, 5)
    for t in range(6):
        for i in range(3):
            for j in range(3):
                assert C[t, i, j] == pytest.approx(sample_cross_covariance(Z[i], Z[j], t), abs=1e-14)


# -- kernels -----------------------------------------------------------------


def test_builtin_kernels_valid():
    ks = builtin_kernels()
    assert set(ks) == {"rectangular", "bartlett", "tukey_hanning", "parzen"}
    for k in ks.values():
        assert k.integral() == pytest.approx(1.0, abs=1e-10)
        assert k(1.5) == 0.0 and k(-2.0) == 0.0
    assert get_kernel("Bartlett")(0.25) == pytest.approx(0.75)


def test_kernel_validation_rejects():
    with pytest.raises(KernelValidationError, match="integrates to 2"):
        LagWindowKernel("one", lambda u: np.ones_like(np.asarray(u, dtype=float)))
    with pytest.raises(KernelValidationError, match="negative"):
        LagWindowKernel("neg", lambda u: 1.5 * (1 - 3 * np.asarray(u) ** 2))
    with pytest.raises(KernelValidationError, match="symmetric"):
        LagWindowKernel("skew", lambda u: 0.5 + 0.25 * np.asarray(u))
    with pytest.raises(KernelValidationError, match="finite"):
        LagWindowKernel("pole", lambda u: np.where(np.asarray(u) == 0, np.inf, 0.5))
    with pytest.raises(KeyError):
        get_kernel("gaussian")


# -- frequency-zero estimate --------------------------------------------------


def test_wce_f0_examples():
    z = np.array([1.0, -1.0, 1.0, -1.0])
    # c(0) = 1, c(1) = -3/4; Bartlett weight at lag 1 with M = 2 is 1/2
    assert wce_f0(z, z, "bartlett", 2) == pytest.approx((1 - 0.75) / (2 * math.pi))
    with pytest.raises(ValueError, match="Assumption C"):
        wce_f0(z, z, "bartlett", 4)
    with pytest.raises(ValueError):
        wce_f0(z, z, "bartlett", 0)


def test_white_noise_level():
    rng = np.random.default_rng(5)
    vals = np.array([wce_f0(z, z, "bartlett", 64) for z in rng.standard_normal((200, 2**14))])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - 1 / (2 * math.pi)) < 4 * se


@pytest.mark.parametrize("kernel", ["bartlett", "parzen", "tukey_hanning", "rectangular"])
def test_matrix_estimate_matches_scalar(kernel):
    rng = np.random.default_rng(1)
    Z = np.cumsum(rng.standard_normal((3, 400)), axis=1) * 0.05 + rng.standard_normal((3, 400))
    F = wce_f0_matrix(Z, kernel, 17)
    for i in range(3):
        for j in range(3):
            assert F[i, j] == pytest.approx(wce_f0(Z[i], Z[j], kernel, 17), rel=1e-12, abs=1e-14)
    np.testing.assert_allclose(F, F.T, rtol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), M=st.integers(1, 40))
@settings(max_examples=40, deadline=None)
def test_bartlett_matrix_nonnegative(seed, M):
    Z = np.random.default_rng(seed).standard_normal((3, 60))
    assert np.linalg.eigvalsh(wce_f0_matrix(Z, "bartlett", M)).min() > -1e-12


def test_weighted_lag_sum_table_and_callable():
    g = 0.5 ** np.arange(11)
    via_table = weighted_lag_sum(g, "bartlett", 10)
    via_call = weighted_lag_sum(lambda t: 0.5 ** np.abs(t), "bartlett", 10)
    assert via_table == pytest.approx(via_call)
    assert weighted_lag_sum(g, "bartlett", 1) == 1.0


@pytest.mark.parametrize("k,expect", [(1, 0.9), (2, 0.8)])
def test_weighted_power_sum_growth(k, expect):
    # sum k(tau/M) gamma(tau)^k grows like M^(k(2d-1)+1) when that exponent is positive
    s = lambda M: weighted_lag_sum(lambda t: autocovariance(0.45, t) ** k, "bartlett", M)
    slope = math.log(s(10**5) / s(10**4)) / math.log(10)
    assert slope == pytest.approx(expect, abs=1e-4)


# -- tabulated spectra --------------------------------------------------------


def test_frequency_grid():
    lam = frequency_grid(8)
    assert lam[0] == -math.pi and lam[4] == 0.0
    with pytest.raises(ValueError):
        frequency_grid(12)


def test_constant_convolution():
    c = 0.3
    f = np.full(64, c)
    np.testing.assert_allclose(k_fold_convolution(f, 2), 2 * math.pi * c * c, rtol=1e-12)
    np.testing.assert_allclose(k_fold_convolution(f, 3), (2 * math.pi) ** 2 * c**3, rtol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_convolution_integral(k):
    f = fractional_spectral_density(0.2, 2**12)
    assert grid_integral(k_fold_convolution(f, k)) == pytest.approx(autocovariance(0.2, 0) ** k, rel=1e-4)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_convolution_fourier_coefficients(k):
    f = fractional_spectral_density(0.2, 2**12)
    lam = frequency_grid(f.size)
    fk = k_fold_convolution(f, k)
    for tau in (0, 1, 5):
        assert grid_integral(fk * np.cos(lam * tau)) == pytest.approx(autocovariance(0.2, tau) ** k, rel=1e-4)


def test_convolution_validation():
    with pytest.raises(ValueError, match="symmetric"):
        k_fold_convolution(np.arange(8.0), 2)
    with pytest.raises(ValueError):
        k_fold_convolution(np.ones(8), 0)


def test_white_noise_density_and_variance():
    f = fractional_spectral_density(0.0, 16, variance=2.0)
    np.testing.assert_allclose(f, 1 / math.pi)
    f = fractional_spectral_density(0.3, 2**12, variance=1.5)
    assert grid_integral(f) == pytest.approx(1.5 * autocovariance(0.3, 0), rel=1e-6)


def test_transformed_spectrum():
    g0 = autocovariance(0.2, 0)
    f = fractional_spectral_density(0.2, 2**12)
    lam = frequency_grid(f.size)
    exp = HermiteExpansion(g0, {1: 0.5, 2: 0.3})
    fg = transformed_spectrum(exp, f)
    for tau in (0, 3):
        g = autocovariance(0.2, tau)
        assert grid_integral(fg * np.cos(lam * tau)) == pytest.approx(0.25 * g + 0.09 * 2 * g * g, rel=1e-4)
    np.testing.assert_allclose(transformed_spectrum(HermiteExpansion(g0, {1: 2.0}), f), 4 * f)


def test_spectrum_csv_roundtrip(tmp_path):
    lam = frequency_grid(16)
    f = fractional_spectral_density(0.1, 16)
    path = tmp_path / "spec.csv"
    write_spectrum_csv(path, lam, f)
    assert path.read_text().splitlines()[0] == "frequency,value"
    lam2, f2 = read_spectrum_csv(path)
    np.testing.assert_array_equal(lam2, lam)
    np.testing.assert_array_equal(f2, f)
    bad = tmp_path / "bad.csv"
    bad.write_text("lambda,f\n0,1\n")
    with pytest.raises(ValueError, match="frequency,value"):
        read_spectrum_csv(bad)
