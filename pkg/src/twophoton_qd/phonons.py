"""Bath-derived quantities for the polaron-frame model.

Everything is in units of the cavity coupling g (hbar = 1). The only absolute
scale needed is ``g1_absolute`` (g in ps^-1), which converts k_B T into g units;
it is fixed by calibrating <B>(5 K) = 0.90.

phi(tau) = int_0^inf dw J(w)/w^2 [coth(w/2 theta) cos(w tau) - i sin(w tau)]
with J(w) = alpha_p w^3 exp(-w^2 / 2 w_b^2) and theta = k_B T / hbar.

The T = 0 part (coth -> 1) has a closed form through the Dawson function; the
thermal remainder 2/(exp(w/theta) - 1) is integrated numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import constants, integrate, optimize, special

KB_OVER_HBAR = constants.k / constants.hbar * 1e-12  # ps^-1 per kelvin

# omega-integrals are cut at this multiple of omega_b; exp(-32) is below double precision.
OMEGA_CUTOFF = 8.0
PHI_TAIL_TOL = 1e-6
GREEN_TAIL_TOL = 1e-8
TAU_PANEL = 0.05
GL_NODES = 8


class QuadratureError(RuntimeError):
    pass


class KernelRangeError(ValueError):
    pass


@dataclass(frozen=True)
class PhononBathParams:
    alpha_p: float = 1.42e-3  # 1/g^2
    omega_b: float = 10.0  # g
    temperature: float = 5.0  # K
    g1_absolute: float | None = None  # ps^-1; None -> calibrated default

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"negative temperature {self.temperature}")
        if self.alpha_p < 0 or self.omega_b <= 0:
            raise ValueError("alpha_p must be >= 0 and omega_b > 0")

    def scale(self) -> float:
        return self.g1_absolute if self.g1_absolute is not None else default_g1_absolute()

    def theta(self) -> float:
        """k_B T / hbar in units of g."""
        if self.temperature == 0:
            return 0.0
        return KB_OVER_HBAR * self.temperature / self.scale()


def spectral_density(omega, params: PhononBathParams):
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral density is defined for omega >= 0")
    out = params.alpha_p * w**3 * np.exp(-(w**2) / (2 * params.omega_b**2))
    return float(out) if out.ndim == 0 else out


def _thermal_weight(w, theta):
    """2 n(w) = coth(w / 2 theta) - 1, finite at w = 0 after multiplying by w."""
    with np.errstate(over="ignore"):
        return 2.0 / np.expm1(w / theta)


def _reorganisation_integral(params: PhononBathParams) -> float:
    """int_0^inf J(w)/w^2 coth(w/2 theta) dw."""
    zero_t = params.alpha_p * params.omega_b**2
    theta = params.theta()
    if theta == 0 or params.alpha_p == 0:
        return zero_t

    def f(w):
        if w == 0:
            return 2 * params.alpha_p * theta
        if w > 700 * theta:
            return 0.0
        return params.alpha_p * w * math.exp(-w * w / (2 * params.omega_b**2)) * 2.0 / math.expm1(w / theta)

    val, err = integrate.quad(f, 0, OMEGA_CUTOFF * params.omega_b, epsabs=0, epsrel=1e-12, limit=200)
    if err > 1e-8 * abs(val):
        raise QuadratureError(f"<B> integral did not converge (err {err:.1e})")
    return zero_t + val


@lru_cache(maxsize=256)
def displacement_average(params: PhononBathParams) -> float:
    """<B> = exp(-1/2 int J(w)/w^2 coth(w/2 k_B T) dw)."""
    return math.exp(-0.5 * _reorganisation_integral(params))


def calibrate_absolute_scale(params: PhononBathParams | None = None, target: float = 0.90,
                             temperature: float = 5.0, bracket=(0.01, 10.0)) -> PhononBathParams:
    """Root-find g (ps^-1) such that <B>(temperature) = target."""
    params = params or PhononBathParams()

    def f(scale):
        return displacement_average(replace(params, temperature=temperature, g1_absolute=scale)) - target

    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise QuadratureError(f"no calibration root for <B>={target} in [{lo}, {hi}] ps^-1")
    scale = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)
    return replace(params, g1_absolute=scale)


@lru_cache(maxsize=1)
def default_g1_absolute() -> float:
    cal = calibrate_absolute_scale(PhononBathParams(g1_absolute=1.0))
    return cal.g1_absolute


# ---------------------------------------------------------------------------
# phi(tau)


def _phi_zero_temperature(tau, alpha_p, omega_b):
    t = omega_b * np.asarray(tau, dtype=float)
    re = 1.0 - math.sqrt(2) * t * special.dawsn(t / math.sqrt(2))
    im = -math.sqrt(math.pi / 2) * t * np.exp(-t * t / 2)
    return alpha_p * omega_b**2 * (re + 1j * im)


def _gauss_panels(a: float, b: float, width: float, nodes: int = GL_NODES):
    n_pan = max(1, int(math.ceil((b - a) / width - 1e-12)))
    edges = np.linspace(a, b, n_pan + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _phi_thermal_part(tau, params: PhononBathParams, tau_scale: float):
    """Real part int J/w^2 (coth - 1) cos(w tau) dw via composite Gauss-Legendre."""
    theta = params.theta()
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    wmax = min(OMEGA_CUTOFF * params.omega_b, 60.0 * theta + 10 * params.omega_b)
    width = min(1.0, 3.0 / max(tau_scale, 1e-9), 2 * theta)
    w, wt = _gauss_panels(0.0, wmax, width, nodes=10)
    f = wt * params.alpha_p * w * np.exp(-(w**2) / (2 * params.omega_b**2)) * _thermal_weight(w, theta)
    out = np.empty(tau.shape, dtype=float)
    chunk = max(1, int(4e6 // len(w)))
    for s in range(0, len(tau), chunk):
        out[s:s + chunk] = np.cos(np.outer(tau[s:s + chunk], w)) @ f
    return out


def correlation_phi(tau, params: PhononBathParams, _tau_scale: float | None = None):
    """Phonon correlation function phi(tau) for tau >= 0 (complex)."""
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ValueError("phi(tau) requires tau >= 0")
    out = _phi_zero_temperature(tau_arr, params.alpha_p, params.omega_b)
    if params.temperature > 0 and params.alpha_p > 0:
        scale = _tau_scale if _tau_scale is not None else float(np.max(tau_arr, initial=1.0))
        out = out + _phi_thermal_part(tau_arr.ravel(), params, scale).reshape(tau_arr.shape)
    return complex(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class _Table:
    tau: np.ndarray
    weights: np.ndarray
    phi: np.ndarray


class PhononKernels:
    """<B>, phi(tau) tables and half-Fourier transforms of the polaron Green functions.

    G_g(tau) = <B>^2 (cosh phi - 1),  G_u(tau) = <B>^2 sinh phi,
    K_j(w) = int_0^inf G_j(tau) exp(i w tau) dtau.

    At T = 0, phi decays only as -alpha_p / tau^2; the integral beyond tau_max
    is added analytically for that tail.
    """

    def __init__(self, params: PhononBathParams):
        self.params = params
        self.B = displacement_average(params)
        self.tau_max = self._choose_tau_max()
        self._tables: dict[float, _Table] = {}
        self._tail_coef = 0.0
        if params.temperature == 0 and params.alpha_p > 0:
            self._tail_coef = -params.alpha_p * self.B**2
        self._residual = self._tail_residual()

    # -- tau range -----------------------------------------------------------
    def _choose_tau_max(self) -> float:
        p = self.params
        base = 50.0 / p.omega_b
        if p.alpha_p == 0:
            return base
        if p.temperature == 0:
            # Re phi ~ -alpha_p / tau^2 at large tau
            return max(base, 1.05 * math.sqrt(p.alpha_p / PHI_TAIL_TOL))
        tau = base
        tol = GREEN_TAIL_TOL / max(self.B**2, 1e-300)
        while tau <= 2000.0:
            probe = tau * np.linspace(1.0, 2.0, 9)
            if np.max(np.abs(correlation_phi(probe, p, _tau_scale=2 * tau))) < tol:
                return tau
            tau *= 2.0
        raise QuadratureError("phi(tau) does not decay within tau <= 2000 / g")

    # -- tables --------------------------------------------------------------
    def table(self, omega_max: float = 0.0) -> _Table:
        width = TAU_PANEL
        while width * max(omega_max, 1e-12) > 3.0:
            width /= 2.0
        tab = self._tables.get(width)
        if tab is None:
            tau, wts = _gauss_panels(0.0, self.tau_max, width)
            tab = _Table(tau, wts, correlation_phi(tau, self.params, _tau_scale=self.tau_max))
            self._tables[width] = tab
        return tab

    def phi(self, tau):
        return correlation_phi(tau, self.params)

    def green(self, kernel: str, tau) -> np.ndarray:
        ph = correlation_phi(tau, self.params)
        return _green(kernel, ph, self.B)

    def tail_residual(self) -> float:
        """|G(tau_max)| after removing the analytic tail model (must be tiny)."""
        return self._residual

    def _tail_residual(self) -> float:
        ph = correlation_phi(self.tau_max, self.params)
        gu = _green("u", ph, self.B) - self._tail_coef / self.tau_max**2
        gg = _green("g", ph, self.B)
        return float(max(abs(gu), abs(gg)))

    def half_fourier(self, kernel: str, omega) -> np.ndarray:
        """K_j(omega) = int_0^inf G_j(tau) e^{i omega tau} dtau, j in {'g', 'u'}."""
        return self._transform(kernel, omega)

    def rate_integral(self, omega, sign: int = +1) -> np.ndarray:
        """int_0^inf (exp(sign * phi) - 1) e^{i omega tau} dtau."""
        if self.B == 0:
            raise QuadratureError("<B> vanished")
        kg = self._transform("g", omega)
        ku = self._transform("u", omega)
        return (kg + sign * ku) / self.B**2

    def _transform(self, kernel: str, omega) -> np.ndarray:
        if kernel not in ("g", "u"):
            raise ValueError(f"unknown kernel {kernel!r}; expected 'g' or 'u'")
        w = np.asarray(omega, dtype=float)
        flat = w.ravel()
        if self.params.alpha_p == 0:
            return np.zeros(w.shape, dtype=complex) if w.ndim else 0j
        if self._residual > GREEN_TAIL_TOL:
            raise QuadratureError(f"tau grid too short: |G(tau_max)| = {self._residual:.1e}")
        wmax = float(np.max(np.abs(flat), initial=0.0))
        tab = self.table(wmax)
        g = tab.weights * _green(kernel, tab.phi, self.B)
        out = np.empty(flat.shape, dtype=complex)
        chunk = max(1, int(2e6 // len(tab.tau)))
        for s in range(0, len(flat), chunk):
            out[s:s + chunk] = np.exp(1j * np.outer(flat[s:s + chunk], tab.tau)) @ g
        if kernel == "u" and self._tail_coef:
            out += self._tail_coef * _inverse_square_tail(flat, self.tau_max)
        out = out.reshape(w.shape)
        return complex(out) if out.ndim == 0 else out


def _green(kernel: str, phi, B: float):
    if kernel == "g":
        # cosh(phi) - 1 without cancellation for small phi
        return B**2 * 2.0 * np.sinh(phi / 2) ** 2
    if kernel == "u":
        return B**2 * np.sinh(phi)
    raise ValueError(f"unknown kernel {kernel!r}")


def _inverse_square_tail(omega: np.ndarray, a: float) -> np.ndarray:
    """int_a^inf e^{i w t} / t^2 dt."""
    out = np.empty(omega.shape, dtype=complex)
    zero = omega == 0
    out[zero] = 1.0 / a
    w = omega[~zero]
    si, ci = special.sici(np.abs(w) * a)
    e1 = -ci + 1j * np.sign(w) * (np.pi / 2 - si)  # int_a^inf e^{iwt}/t dt
    out[~zero] = np.exp(1j * w * a) / a + 1j * w * e1
    return out


def half_fourier(kernel: str, omega, kernels: PhononKernels):
    return kernels.half_fourier(kernel, omega)


@lru_cache(maxsize=32)
def get_kernels(params: PhononBathParams) -> PhononKernels:
    """Shared kernel instance per bath (kernels are immutable once built)."""
    return PhononKernels(params)


# ---------------------------------------------------------------------------
# effective rates


@dataclass(frozen=True)
class EffectiveRates:
    delta_plus_1: float
    delta_minus_1: float
    delta_plus_2: float
    delta_minus_2: float
    gamma_plus_1: float
    gamma_minus_1: float
    gamma_plus_2: float
    gamma_minus_2: float
    omega_12: complex
    gamma_ug: complex
    gamma_gu: complex
    beta_1: complex
    beta_2: complex


@dataclass(frozen=True)
class EffectiveRatesCoherent:
    delta_p_plus_1: float
    delta_p_minus_1: float
    delta_p_plus_2: float
    delta_p_minus_2: float
    gamma_p_plus_1: float
    gamma_p_minus_1: float
    gamma_p_plus_2: float
    gamma_p_minus_2: float
    omega_p: complex
    gamma_p_ug: complex
    gamma_p_gu: complex
    alpha_1: complex
    alpha_2: complex
    delta_p_prime: float


def effective_rates_incoherent(g1: float, g2: float, Delta_1: float, Delta_2: float,
                               kernels: PhononKernels) -> EffectiveRates:
    B2 = kernels.B**2
    plus = kernels.rate_integral(np.array([Delta_1, -Delta_1, Delta_2, -Delta_2]), +1)
    beta_1, beta_2 = kernels.rate_integral(np.array([-Delta_1, Delta_2]), -1)
    return EffectiveRates(
        delta_plus_1=g1**2 * B2 * plus[0].imag,
        delta_minus_1=g1**2 * B2 * plus[1].imag,
        delta_plus_2=g2**2 * B2 * plus[2].imag,
        delta_minus_2=g2**2 * B2 * plus[3].imag,
        gamma_plus_1=2 * g1**2 * B2 * plus[0].real,
        gamma_minus_1=2 * g1**2 * B2 * plus[1].real,
        gamma_plus_2=2 * g2**2 * B2 * plus[2].real,
        gamma_minus_2=2 * g2**2 * B2 * plus[3].real,
        omega_12=-0.5j * g1 * g2 * B2 * (beta_1 - np.conj(beta_2)),
        gamma_ug=g1 * g2 * B2 * (beta_1 + np.conj(beta_2)),
        gamma_gu=g1 * g2 * B2 * (np.conj(beta_1) + beta_2),
        beta_1=complex(beta_1),
        beta_2=complex(beta_2),
    )


def effective_rates_coherent(Omega_1: float, Omega_2: float, Delta_p: float, Delta_xx: float,
                             delta_x: float, kernels: PhononKernels,
                             literal_prefactor: float | None = None) -> EffectiveRatesCoherent:
    """Pump-dressed phonon rates.

    ``literal_prefactor`` replaces Omega_1 * Omega_2 in the Omega^p coupling
    (an alternative reading puts a product of cavity frequencies there).
    """
    B2 = kernels.B**2
    dpp = Delta_p - Delta_xx - delta_x  # omega_u - omega_x - omega_p
    plus = kernels.rate_integral(np.array([Delta_p, -Delta_p, dpp, -dpp]), +1)
    alpha_1, alpha_2 = kernels.rate_integral(np.array([-Delta_p, dpp]), -1)
    pref = Omega_1 * Omega_2 if literal_prefactor is None else literal_prefactor
    return EffectiveRatesCoherent(
        delta_p_plus_1=Omega_1**2 * B2 * plus[0].imag,
        delta_p_minus_1=Omega_1**2 * B2 * plus[1].imag,
        delta_p_plus_2=Omega_2**2 * B2 * plus[2].imag,
        delta_p_minus_2=Omega_2**2 * B2 * plus[3].imag,
        gamma_p_plus_1=2 * Omega_1**2 * B2 * plus[0].real,
        gamma_p_minus_1=2 * Omega_1**2 * B2 * plus[1].real,
        gamma_p_plus_2=2 * Omega_2**2 * B2 * plus[2].real,
        gamma_p_minus_2=2 * Omega_2**2 * B2 * plus[3].real,
        omega_p=-0.5j * pref * B2 * (alpha_1 - np.conj(alpha_2)),
        gamma_p_ug=Omega_1 * Omega_2 * B2 * (alpha_1 + np.conj(alpha_2)),
        gamma_p_gu=Omega_1 * Omega_2 * B2 * (np.conj(alpha_1) + alpha_2),
        alpha_1=complex(alpha_1),
        alpha_2=complex(alpha_2),
        delta_p_prime=dpp,
    )
