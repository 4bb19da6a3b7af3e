import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from twophoton_qd.phonons import (
    KB_OVER_HBAR, KernelRangeError, PhononBathParams, PhononKernels, QuadratureError, calibrate_absolute_scale,
    correlation_phi, default_g1_absolute, displacement_average, effective_rates_coherent,
    effective_rates_incoherent, get_kernels, half_fourier, spectral_density,
)

BATH5 = PhononBathParams(temperature=5.0)


# independent oracle: phi by adaptive oscillatory quadrature (QUADPACK QAWO) in omega
def _oracle_phi(tau, params):
    a, wb = params.alpha_p, params.omega_b
    th = KB_OVER_HBAR * params.temperature / params.scale()

    def re_f(w):
        if th == 0:
            return a * w * math.exp(-w * w / (2 * wb * wb))
        if w == 0:
            return 2 * a * th
        return a * w / math.tanh(w / (2 * th)) * math.exp(-w * w / (2 * wb * wb))

    def im_f(w):
        return a * w * math.exp(-w * w / (2 * wb * wb))

    r = integrate.quad(re_f, 0, 8 * wb, weight="cos", wvar=tau, limit=400)[0]
    i = integrate.quad(im_f, 0, 8 * wb, weight="sin", wvar=tau, limit=400)[0]
    return complex(r, -i)


def _oracle_transform(f, omega, tau_max):
    """int_0^tau_max f(tau) e^{i omega tau} dtau with QAWO weights on each real part."""
    q = lambda g, wt: integrate.quad(g, 0, tau_max, weight=wt, wvar=omega, limit=400)[0]  # noqa: E731
    re = lambda t: f(t).real  # noqa: E731
    im = lambda t: f(t).imag  # noqa: E731
    return complex(q(re, "cos") - q(im, "sin"), q(re, "sin") + q(im, "cos"))


def test_spectral_density_examples():
    p = PhononBathParams()
    assert spectral_density(0.0, p) == 0.0
    assert spectral_density(p.omega_b, p) == pytest.approx(p.alpha_p * p.omega_b**3 * math.exp(-0.5), rel=1e-14)
    w = np.linspace(0, 60, 600001)
    assert w[np.argmax(spectral_density(w, p))] == pytest.approx(math.sqrt(3) * p.omega_b, abs=1e-3)
    with pytest.raises(ValueError):
        spectral_density(-1.0, p)


def test_bath_param_validation():
    with pytest.raises(ValueError):
        PhononBathParams(temperature=-1.0)
    with pytest.raises(ValueError):
        PhononBathParams(omega_b=0.0)


def test_displacement_average_reference_values():
    assert displacement_average(PhononBathParams(temperature=5.0)) == pytest.approx(0.90, abs=0.01)
    assert displacement_average(PhononBathParams(temperature=20.0)) == pytest.approx(0.73, abs=0.01)
    p0 = PhononBathParams(temperature=0.0)
    assert displacement_average(p0) == pytest.approx(math.exp(-p0.alpha_p * p0.omega_b**2 / 2), rel=1e-12)


def test_displacement_average_monotone_in_temperature():
    bs = [displacement_average(PhononBathParams(temperature=float(t))) for t in np.linspace(0, 30, 31)]
    assert np.all(np.diff(bs) <= 0)
    assert all(0 < b <= 1 for b in bs)


def test_calibration():
    s = default_g1_absolute()
    assert 0.05 <= s <= 0.5
    cal = calibrate_absolute_scale(PhononBathParams(g1_absolute=1.0))
    assert cal.g1_absolute == pytest.approx(s, rel=1e-10)
    assert displacement_average(replace(cal, temperature=5.0)) == pytest.approx(0.90, abs=0.005)
    assert displacement_average(replace(cal, temperature=20.0)) == pytest.approx(0.73, abs=0.02)
    with pytest.raises(QuadratureError):
        calibrate_absolute_scale(PhononBathParams(), target=0.99999, bracket=(0.01, 0.02))


@settings(max_examples=15, deadline=None)
@given(factor=st.floats(0.25, 4.0))
def test_property_temperature_scale_invariance(factor):
    s = default_g1_absolute()
    b0 = displacement_average(PhononBathParams(temperature=5.0, g1_absolute=s))
    b1 = displacement_average(PhononBathParams(temperature=5.0 * factor, g1_absolute=s * factor))
    assert b1 == pytest.approx(b0, rel=1e-10)


def test_phi_at_origin():
    for t in (0.0, 5.0, 20.0):
        p = PhononBathParams(temperature=t)
        ph = correlation_phi(0.0, p)
        assert abs(ph.imag) < 1e-10
        assert ph.real == pytest.approx(-2 * math.log(displacement_average(p)), rel=1e-9)


def test_phi_zero_temperature_against_trapezoid():
    p = PhononBathParams(temperature=0.0)
    tau = 1.0 / p.omega_b
    w = np.linspace(0.0, 8 * p.omega_b, 1_000_000)
    f = p.alpha_p * w * np.exp(-(w**2) / (2 * p.omega_b**2)) * np.exp(-1j * w * tau)
    oracle = np.trapezoid(f, w)
    assert abs(correlation_phi(tau, p) - oracle) < 1e-7


@pytest.mark.parametrize("temperature", [5.0, 20.0])
def test_phi_against_adaptive_quadrature(temperature):
    p = PhononBathParams(temperature=temperature)
    for tau in (0.0, 0.03, 0.2, 1.0):
        assert abs(correlation_phi(tau, p) - _oracle_phi(tau, p)) < 1e-10


def test_phi_imaginary_part_temperature_independent():
    tau = np.linspace(0, 2, 41)
    a = correlation_phi(tau, PhononBathParams(temperature=5.0))
    b = correlation_phi(tau, PhononBathParams(temperature=20.0))
    assert np.max(np.abs(a.imag - b.imag)) < 1e-8
    assert np.max(np.abs(a.real - b.real)) > 1e-3


@pytest.mark.parametrize("temperature", [0.0, 5.0, 20.0])
def test_kernel_table_decays(temperature):
    k = PhononKernels(PhononBathParams(temperature=temperature))
    assert abs(k.phi(k.tau_max)) < 1e-6
    assert k.tail_residual() < 1e-8
    assert k.B == pytest.approx(math.exp(-0.5 * k.phi(0.0).real), rel=1e-12)


def test_half_fourier_against_oscillatory_oracle(kernels5):
    p = BATH5
    B = math.exp(-_oracle_phi(0.0, p).real / 2)
    gu = lambda t: B * B * np.sinh(_oracle_phi(t, p))  # noqa: E731
    oracle = _oracle_transform(gu, 5.0, kernels5.tau_max)
    assert abs(half_fourier("u", 5.0, kernels5) - oracle) < 1e-6 * abs(oracle)


def test_half_fourier_zero_frequency_and_positivity(kernels5):
    tab = kernels5.table()
    gg = kernels5.green("g", tab.tau)
    assert kernels5.half_fourier("g", 0.0).real == pytest.approx(np.sum(tab.weights * gg.real), rel=1e-12)
    w = np.linspace(-40, 40, 161)
    kg = kernels5.half_fourier("g", w)
    assert np.all(kg.real >= -1e-12)
    assert np.all(kg.real + kg.real[::-1] >= -1e-12)
    with pytest.raises(ValueError):
        kernels5.half_fourier("q", 1.0)


def test_green_functions_at_origin(kernels5):
    ph0 = kernels5.phi(0.0)
    assert kernels5.green("u", 0.0) == pytest.approx(kernels5.B**2 * np.sinh(ph0), rel=1e-12)
    assert kernels5.green("g", 0.0) == pytest.approx(kernels5.B**2 * (np.cosh(ph0) - 1), rel=1e-10)


def test_uncoupled_bath_gives_zero_kernels():
    k = PhononKernels(PhononBathParams(alpha_p=0.0))
    assert k.B == 1.0
    assert np.all(k.green("g", np.linspace(0, 3, 7)) == 0)
    assert np.all(k.half_fourier("g", np.array([0.0, 5.0])) == 0)
    assert k.half_fourier("u", 5.0) == 0
    r = effective_rates_incoherent(1.0, 1.0, 5.0, -5.0, k)
    for name in ("gamma_plus_1", "gamma_minus_2", "delta_plus_1", "omega_12", "gamma_ug", "gamma_gu"):
        assert getattr(r, name) == 0


def _phi_zero_temperature_hyp1f1(tau, p):
    """T=0 phi via confluent hypergeometric closed forms (no Dawson function)."""
    a, wb = p.alpha_p, p.omega_b
    A = 1 / (2 * wb**2)
    re = a / (2 * A) * special.hyp1f1(1, 0.5, -(tau**2) / (4 * A))
    im = -a * wb**3 * tau * np.sqrt(np.pi / 2) * np.exp(-(wb**2) * tau**2 / 2)
    return re + 1j * im


def test_zero_temperature_tail_transform():
    """Production transform (GL panels plus analytic 1/tau^2 tail) vs dense trapezoid to 4 tau_max."""
    p = PhononBathParams(temperature=0.0)
    k = get_kernels(p)
    omega = 5.0
    horizon = 4 * k.tau_max
    t = np.linspace(0, horizon, 1_000_001)
    ph = _phi_zero_temperature_hyp1f1(t, p)
    assert np.max(np.abs(ph[::1000] - correlation_phi(t[::1000], p))) < 1e-10
    oracle = np.trapezoid(k.B**2 * np.sinh(ph) * np.exp(1j * omega * t), t)
    # the part beyond the horizon is bounded by 2 alpha_p B^2 / (omega horizon^2)
    bound = 2 * p.alpha_p * k.B**2 / (omega * horizon**2)
    assert abs(k.half_fourier("u", omega) - oracle) < 1e-6 * abs(oracle) + bound


def _oracle_rate(p, delta, sign):
    """Gamma-type integral int_0^inf (e^{sign phi} - 1) e^{i delta tau} dtau, independent route."""
    k = get_kernels(p)
    return _oracle_transform(lambda t: np.expm1(sign * _oracle_phi(t, p)), delta, k.tau_max)


def test_effective_rates_against_oracle(kernels5):
    r = effective_rates_incoherent(1.0, 1.0, 5.0, -5.0, kernels5)
    B2 = kernels5.B**2
    plus = _oracle_rate(BATH5, 5.0, +1)
    assert r.gamma_plus_1 == pytest.approx(2 * B2 * plus.real, rel=1e-6)
    assert r.delta_plus_1 == pytest.approx(B2 * plus.imag, rel=1e-6)
    beta1 = _oracle_rate(BATH5, -5.0, -1)
    assert abs(r.beta_1 - beta1) < 1e-6 * abs(beta1)
    assert r.omega_12 == pytest.approx(-0.5j * B2 * (r.beta_1 - np.conj(r.beta_2)))


def test_rates_scale_with_coupling_squared(kernels5):
    a = effective_rates_incoherent(1.0, 0.7, 5.0, -5.0, kernels5)
    b = effective_rates_incoherent(2.0, 1.4, 5.0, -5.0, kernels5)
    for name in ("gamma_plus_1", "gamma_minus_1", "gamma_plus_2", "gamma_minus_2"):
        assert getattr(b, name) == pytest.approx(4 * getattr(a, name), rel=1e-13)
    assert b.omega_12 == pytest.approx(4 * a.omega_12, rel=1e-13)


def test_rates_positive_and_asymmetric():
    k0 = get_kernels(PhononBathParams(temperature=0.0))
    k5 = get_kernels(BATH5)
    r0 = effective_rates_incoherent(1.0, 1.0, 5.0, 5.0, k0)
    r5 = effective_rates_incoherent(1.0, 1.0, 5.0, 5.0, k5)
    assert r0.gamma_plus_1 > r0.gamma_minus_1 >= -1e-12
    assert r5.gamma_plus_1 > r0.gamma_plus_1
    for r in (r0, r5):
        for name in ("gamma_plus_1", "gamma_minus_1", "gamma_plus_2", "gamma_minus_2"):
            assert getattr(r, name) >= -1e-10


@settings(max_examples=20, deadline=None)
@given(delta=st.floats(-20, 20), temperature=st.sampled_from([0.0, 5.0, 20.0]))
def test_property_rates_nonnegative(delta, temperature):
    r = effective_rates_incoherent(1.0, 1.0, delta, -delta, get_kernels(PhononBathParams(temperature=temperature)))
    assert min(r.gamma_plus_1, r.gamma_minus_1, r.gamma_plus_2, r.gamma_minus_2) >= -1e-10


def test_coherent_rates(kernels5):
    zero = effective_rates_coherent(0.0, 0.0, 1.0, 15.0, -1.0, kernels5)
    assert zero.gamma_p_plus_1 == 0 and zero.gamma_p_minus_2 == 0 and zero.omega_p == 0
    a = effective_rates_coherent(1.0, 1.0, 0.0, 15.0, -1.0, kernels5)
    b = effective_rates_coherent(3.0, 1.0, 0.0, 15.0, -1.0, kernels5)
    assert b.gamma_p_plus_1 == pytest.approx(9 * a.gamma_p_plus_1, rel=1e-13)
    assert b.gamma_p_plus_2 == pytest.approx(a.gamma_p_plus_2, rel=1e-13)
    assert a.delta_p_prime == pytest.approx(0.0 - 15.0 + 1.0)
    inc = effective_rates_incoherent(1.0, 1.0, 0.0, 1.0, kernels5)
    assert a.alpha_1 == pytest.approx(inc.beta_1, rel=1e-12)
    lit = effective_rates_coherent(1.0, 1.0, 0.0, 15.0, -1.0, kernels5, literal_prefactor=2.5)
    assert lit.omega_p == pytest.approx(2.5 * a.omega_p, rel=1e-13)


def test_kernel_cache_is_shared():
    assert get_kernels(BATH5) is get_kernels(PhononBathParams(temperature=5.0))


def test_error_types_exist():
    assert issubclass(KernelRangeError, ValueError)
    assert issubclass(QuadratureError, RuntimeError)
