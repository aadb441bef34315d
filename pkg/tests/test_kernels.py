import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from nodallab import ConfigError, CovarianceKernel, ModelError, kappa, kappa_tilde, q_of, spectral_density
from nodallab.kernels import kappa_from_spectrum, kappa_quad, spectral_support, truncation_tail

KERNELS = ["bargmann_fock", "truncated_wave", "bessel_j0"]


_BUILT = {}


def make(name):
    if name not in _BUILT:
        _BUILT[name] = getattr(CovarianceKernel, name)()
    return _BUILT[name]


@pytest.mark.parametrize("name", KERNELS)
def test_unit_variance(name):
    assert kappa(make(name), 0.0) == pytest.approx(1.0, abs=1e-12)


def test_bargmann_fock_values(bf):
    assert kappa(bf, 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert q_of(bf, 0.0) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)
    assert kappa_tilde(bf, 2.0) == pytest.approx(math.exp(-2), abs=1e-12)


def test_truncated_wave_near_bessel_zero(tw):
    # first zero of J1, where J0 has its first minimum
    r = special.jn_zeros(1, 1)[0]
    assert abs(kappa(tw, r) - special.j0(r)) < 0.05


def test_truncated_wave_matches_direct_quadrature(tw):
    for r in (0.5, 2.0, 7.0, 15.0):
        assert kappa(tw, r) == pytest.approx(kappa_quad(tw, r), abs=1e-7)


def test_bessel_kernel_is_j0(j0):
    r = np.linspace(0, 30, 61)
    assert np.allclose(kappa(j0, r), special.j0(r), atol=1e-12)


def test_self_convolution_reproduces_covariance(bf):
    # numerical 2-D convolution of q on a fine grid, independent of the sampler
    step = 0.05
    ax = np.arange(-6, 6 + step / 2, step)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    q = q_of(bf, np.hypot(X, Y))
    for shift in (0, 10, 20, 40, 60, 100):
        conv = np.sum(q[shift:, :] * q[: q.shape[0] - shift, :]) * step * step
        assert conv == pytest.approx(kappa(bf, shift * step), abs=5e-3)
    conv1 = np.sum(q[20:, :] * q[:-20, :]) * step * step
    assert conv1 == pytest.approx(0.606531, abs=1e-3)


@pytest.mark.parametrize("name", ["bargmann_fock", "truncated_wave"])
def test_truncation_contract(name):
    k = make(name)
    R = k.truncation_radius
    assert q_of(k, R) == 0.0
    assert q_of(k, R + 1.0) == 0.0
    assert truncation_tail(k) < 1e-4


def test_truncation_radius_bargmann_fock(bf):
    # smallest r with sqrt(2/pi) exp(-r^2) < 1e-8
    expected = math.sqrt(-math.log(1e-8 / math.sqrt(2 / math.pi)))
    assert bf.truncation_radius == pytest.approx(expected, abs=1e-3)


def test_q_nonnegative_for_bargmann_fock(bf):
    r = np.linspace(0, 6, 200)
    assert np.all(q_of(bf, r) >= 0)


def test_bessel_kernel_takes_negative_values(j0):
    r = np.linspace(0, 10, 1001)
    assert kappa(j0, r).min() < -0.1


def test_bessel_kernel_has_no_density(j0):
    with pytest.raises(ModelError):
        spectral_density(j0, np.zeros(2))
    with pytest.raises(ModelError):
        q_of(j0, 1.0)


def test_spectral_density_bargmann_fock(bf):
    assert spectral_density(bf, np.zeros(2)) == pytest.approx(2 * math.pi, rel=1e-12)


@pytest.mark.parametrize("name", ["bargmann_fock", "truncated_wave"])
def test_spectral_density_integrates_to_one(name):
    k = make(name)
    total, _ = integrate.quad(lambda t: 2 * math.pi * t * spectral_density(k, np.array([t, 0.0])),
                              0, 2.0, limit=400, points=[0.13, 0.16, 0.19])
    assert total == pytest.approx(1.0, abs=1e-3)


def test_spectral_density_nonnegative_and_supported(tw):
    lo, hi = spectral_support(tw)
    xi = np.linspace(0, 0.5, 2001)
    dens = spectral_density(tw, np.stack([xi, np.zeros_like(xi)], axis=1))
    assert dens.min() >= -1e-9
    outside = (xi < lo) | (xi > hi)
    assert np.all(dens[outside] == 0)
    t0, w = tw.params
    assert lo < t0 / (2 * math.pi) < hi


@pytest.mark.parametrize("name", ["bargmann_fock", "truncated_wave"])
def test_fourier_inversion(name):
    k = make(name)
    r = np.linspace(0, 5, 26)
    assert np.allclose(kappa_from_spectrum(k, r), kappa(k, r), atol=1e-3)


def test_kappa_tilde_bessel_grid_search(j0):
    # dense maximization over [3, 200]; the tail envelope is below this value
    r = np.arange(3.0, 200.0, 1e-4)
    expected = special.j0(r).max()
    assert kappa_tilde(j0, 3.0) == pytest.approx(expected, abs=1e-6)
    assert expected == pytest.approx(0.300116, abs=1e-6)


@pytest.mark.parametrize("name", KERNELS)
def test_kappa_tilde_at_zero(name):
    assert kappa_tilde(make(name), 0.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", KERNELS)
@given(a=st.floats(0, 60), b=st.floats(0, 60))
def test_kappa_tilde_monotone_and_dominates(name, a, b):
    k = make(name)
    lo, hi = min(a, b), max(a, b)
    assert kappa_tilde(k, hi) <= kappa_tilde(k, lo) + 1e-12
    assert kappa_tilde(k, lo) >= kappa(k, lo) - 1e-12


@given(r=st.floats(0, 20), theta=st.floats(0, 2 * math.pi))
def test_spectral_density_radial(r, theta):
    k = CovarianceKernel.bargmann_fock()
    xi = np.array([r * math.cos(theta), r * math.sin(theta)]) / 10
    assert spectral_density(k, xi) == pytest.approx(spectral_density(k, np.array([r / 10, 0.0])), rel=1e-9)


def test_invalid_parameters():
    with pytest.raises(ConfigError):
        CovarianceKernel.truncated_wave(1.0, 0.0)
    with pytest.raises(ConfigError):
        CovarianceKernel.from_spec("NoSuchKernel")
    with pytest.raises(ValueError):
        kappa(CovarianceKernel.bargmann_fock(), -1.0)


def test_spec_roundtrip():
    k = CovarianceKernel.truncated_wave(1.0, 0.25)
    assert CovarianceKernel.from_spec(k.to_spec()) == k
    assert CovarianceKernel.from_spec("BesselJ0").name == CovarianceKernel.bessel_j0().name
