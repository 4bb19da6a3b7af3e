"""Populations, photon statistics, per-process photon fluxes and the DGCZ witness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import LiouvillianBundle
from .operators import LEVELS, DensityMatrix, annihilator, expectation, number, qd_projector

UNDEFINED = float("nan")  # marker for g2 of an (almost) empty mode
EMPTY_MODE = 1e-10
BALANCE_TOL = 1e-6
DEFAULT_PHASES = (-0.5, -0.5)


@dataclass(frozen=True)
class ObservableSet:
    pop_g: float
    pop_x: float
    pop_y: float
    pop_u: float
    n1: float
    n2: float
    F1: float
    F2: float
    g2_1: float
    g2_2: float
    g2_12: float
    P_nm: np.ndarray = field(repr=False, compare=False)

    def scalars(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in SCALAR_FIELDS}


SCALAR_FIELDS = ("pop_g", "pop_x", "pop_y", "pop_u", "n1", "n2", "F1", "F2", "g2_1", "g2_2", "g2_12")


def _diag_tensor(rho: DensityMatrix) -> np.ndarray:
    """Diagonal of rho reshaped to (level, n1, n2)."""
    return np.real(np.diagonal(rho.data)).reshape(rho.layout.dims)


def level_populations(rho: DensityMatrix) -> dict[str, float]:
    d = _diag_tensor(rho)
    return {lv: float(d[i].sum()) for i, lv in enumerate(LEVELS)}


def photon_number_distribution(rho: DensityMatrix) -> np.ndarray:
    """P[n, m] = sum_i <i,n,m|rho|i,n,m>."""
    return _diag_tensor(rho).sum(axis=0)


def mean_photon_numbers(rho: DensityMatrix) -> tuple[float, float]:
    p = photon_number_distribution(rho)
    n = np.arange(p.shape[0])
    m = np.arange(p.shape[1])
    return float(n @ p.sum(axis=1)), float(m @ p.sum(axis=0))


def _ratio(num: float, den: float) -> float:
    return num / den if den > EMPTY_MODE else UNDEFINED


def compute_observables(rho: DensityMatrix) -> ObservableSet:
    """Zero-delay statistics from the photon-number diagonal of rho.

    Every quantity here depends only on P[n, m]: <n_i>, <n_i^2>,
    <a^dag^2 a^2> = <n(n-1)> and <a1^dag a2^dag a2 a1> = <n m>.
    """
    pops = level_populations(rho)
    p = photon_number_distribution(rho)
    n = np.arange(p.shape[0], dtype=float)[:, None]
    m = np.arange(p.shape[1], dtype=float)[None, :]
    n1, n2 = float((n * p).sum()), float((m * p).sum())
    nn1, nn2 = float((n * n * p).sum()), float((m * m * p).sum())
    nm = float((n * m * p).sum())
    f1 = _ratio(nn1 - n1**2, n1)
    f2 = _ratio(nn2 - n2**2, n2)
    g1 = _ratio(nn1 - n1, n1**2) if n1 > EMPTY_MODE else UNDEFINED
    g2 = _ratio(nn2 - n2, n2**2) if n2 > EMPTY_MODE else UNDEFINED
    g12 = _ratio(nm, n1 * n2) if min(n1, n2) > EMPTY_MODE else UNDEFINED
    return ObservableSet(pops["g"], pops["x"], pops["y"], pops["u"], n1, n2, f1, f2, g1, g2, g12, p)


def g2_from_moments(rho: DensityMatrix) -> tuple[float, float, float]:
    """Same g2 set evaluated with operator products (independent route)."""
    lay = rho.layout
    a1, a2 = annihilator(1, lay), annihilator(2, lay)
    n1 = expectation(a1.dag() @ a1, rho).real
    n2 = expectation(a2.dag() @ a2, rho).real
    g1 = expectation(a1.dag() @ a1.dag() @ a1 @ a1, rho).real
    g2 = expectation(a2.dag() @ a2.dag() @ a2 @ a2, rho).real
    g12 = expectation(a1.dag() @ a2.dag() @ a2 @ a1, rho).real
    return _ratio(g1, n1**2), _ratio(g2, n2**2), _ratio(g12, n1 * n2)


# ---------------------------------------------------------------------------
# emission rates


class FluxBalanceError(RuntimeError):
    pass


@dataclass(frozen=True)
class EmissionRates:
    single1_net: float
    single2_net: float
    twophoton_net: float
    ledger: tuple[tuple[str, float, float], ...]
    balance_residual: tuple[float, float]
    # three- and four-photon processes of the rate-equation picture are not
    # part of the generator, so they never appear in the ledger
    notes: str = "pair flux reported once per photon pair; higher-order multi-photon terms omitted"


def term_fluxes(bundle: LiouvillianBundle, rho: DensityMatrix) -> list[tuple[str, str, float, float]]:
    lay = bundle.layout
    n1, n2 = number(1, lay), number(2, lay)
    out = []
    for t in bundle.terms:
        drho = DensityMatrix(lay, t.sop.apply(rho.data))
        out.append((t.label, t.process, expectation(n1, drho).real, expectation(n2, drho).real))
    return out


def virtual_pair_coupling(bundle: LiouvillianBundle) -> float:
    """Second-order two-photon coupling carried by the coherent g_i<B> terms.

    Eliminating the intermediate |y> between |u,n1,n2> and |g,n1+1,n2+1>
    (energy gaps Delta_2 and -Delta_1 in both pumping frames) gives
    Omega_v (sigma_ug a1 a2 + h.c.) with
    Omega_v = (g1 g2 <B>^2 / 2) (1/Delta_2 - 1/Delta_1).
    """
    p = bundle.params
    if abs(p.Delta_1) < 1e-9 or abs(p.Delta_2) < 1e-9:
        return UNDEFINED
    return 0.5 * p.g1 * p.g2 * bundle.B**2 * (1.0 / p.Delta_2 - 1.0 / p.Delta_1)


def virtual_pair_flux(bundle: LiouvillianBundle, rho: DensityMatrix) -> float:
    """Photon flux (per mode) of the virtual two-photon path: -2 Im(Omega_v <sigma_ug a1 a2>)."""
    om = virtual_pair_coupling(bundle)
    if np.isnan(om):
        return UNDEFINED
    lay = bundle.layout
    m = qd_projector("u", "g", lay) @ annihilator(1, lay) @ annihilator(2, lay)
    return float(-2.0 * np.imag(om * expectation(m, rho)))


def emission_rate_decomposition(bundle: LiouvillianBundle, rho: DensityMatrix,
                                tol: float = BALANCE_TOL) -> EmissionRates:
    """Net photon flux into each mode, split by process.

    For every generator term t the flux into mode i is Tr[a_i^dag a_i t(rho)].
    At steady state the fluxes of all terms into mode i sum to zero, i.e. the
    gain terms equal the cavity loss kappa_i <n_i>.

    Two-photon net: Omega_12 and Gamma_ug/Gamma_gu terms plus the virtual
    pair path hidden in the coherent g_i<B> exchange (``virtual_pair_flux``),
    per photon pair. Single-photon nets: the g_i<B> exchange minus that pair
    part, plus the phonon-assisted Gamma_i+- channels.
    """
    if bundle.form != "effective":
        raise ValueError("emission-rate decomposition needs an effective-form bundle")
    fl = term_fluxes(bundle, rho)
    tot1 = sum(f[2] for f in fl)
    tot2 = sum(f[3] for f in fl)
    loss1 = -sum(f[2] for f in fl if f[1] == "loss")
    loss2 = -sum(f[3] for f in fl if f[1] == "loss")
    res = (abs(tot1) / loss1 if loss1 > 0 else abs(tot1),
           abs(tot2) / loss2 if loss2 > 0 else abs(tot2))
    if max(abs(tot1), abs(tot2)) > tol * max(loss1, loss2, 1.0):
        raise FluxBalanceError(f"photon-number balance violated (residual {tot1:.3e}, {tot2:.3e}); "
                               "input is not a steady state of this bundle")
    vpf = virtual_pair_flux(bundle, rho)
    s1 = sum(f[2] for f in fl if f[1] == "mode1") - vpf
    s2 = sum(f[3] for f in fl if f[1] == "mode2") - vpf
    pair = [f for f in fl if f[1] == "pair"]
    tp = 0.5 * (sum(f[2] for f in pair) + sum(f[3] for f in pair)) + vpf
    ledger = tuple((f[0], f[2], f[3]) for f in fl) + (("virtual_pair(in H:cavity)", vpf, vpf),)
    return EmissionRates(s1, s2, tp, ledger, res)


# ---------------------------------------------------------------------------
# entanglement witness


@dataclass(frozen=True)
class EntanglementWitness:
    phi1: float
    phi2: float
    variance_sum: float
    entangled: bool


def _moments(rho: DensityMatrix) -> dict[str, complex]:
    lay = rho.layout
    a1, a2 = annihilator(1, lay), annihilator(2, lay)
    e = lambda op: expectation(op, rho)  # noqa: E731
    return {
        "n1": e(a1.dag() @ a1).real, "n2": e(a2.dag() @ a2).real,
        "a1a2": e(a1 @ a2), "a1": e(a1), "a2": e(a2),
    }


def _variance_from_moments(mo: dict, phase_sum) -> np.ndarray:
    ph = np.exp(1j * np.asarray(phase_sum, dtype=float))
    val = (1 + mo["n1"] + mo["n2"]
           + np.conj(mo["a1a2"]) / ph + mo["a1a2"] * ph
           - abs(mo["a1"]) ** 2 - abs(mo["a2"]) ** 2
           - np.conj(mo["a1"] * mo["a2"]) / ph - mo["a1"] * mo["a2"] * ph)
    return 2.0 * np.real(val)


def dgcz_variance(rho: DensityMatrix, phi1: float = DEFAULT_PHASES[0],
                  phi2: float = DEFAULT_PHASES[1]) -> EntanglementWitness:
    """Delta u^2 + Delta v^2 for u = x1 + x2, v = p1 - p2 with
    x_j = (a_j e^{i phi_j} + a_j^dag e^{-i phi_j}) / sqrt(2) and
    p_j = -i (a_j e^{i phi_j} - a_j^dag e^{-i phi_j}) / sqrt(2).

    Depends on the phases only through phi1 + phi2. Below 2 certifies entanglement.
    """
    v = float(_variance_from_moments(_moments(rho), phi1 + phi2))
    return EntanglementWitness(phi1, phi2, v, v < 2.0)


def dgcz_phase_scan(rho: DensityMatrix, points: int = 256) -> tuple[float, float]:
    """Minimum of the variance sum over phi1 + phi2 on a uniform grid in [0, 2 pi)."""
    grid = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    vals = _variance_from_moments(_moments(rho), grid)
    k = int(np.argmin(vals))
    return float(grid[k]), float(vals[k])


def dgcz_variance_direct(rho: DensityMatrix, phi1: float, phi2: float) -> float:
    """Variance sum from explicit quadrature operators (oracle route)."""
    lay = rho.layout
    a1, a2 = annihilator(1, lay), annihilator(2, lay)
    s = 1 / np.sqrt(2)
    x1 = s * (np.exp(1j * phi1) * a1 + np.exp(-1j * phi1) * a1.dag())
    x2 = s * (np.exp(1j * phi2) * a2 + np.exp(-1j * phi2) * a2.dag())
    p1 = -1j * s * (np.exp(1j * phi1) * a1 - np.exp(-1j * phi1) * a1.dag())
    p2 = -1j * s * (np.exp(1j * phi2) * a2 - np.exp(-1j * phi2) * a2.dag())
    u, v = x1 + x2, p1 - p2
    var = lambda o: (expectation(o @ o, rho) - expectation(o, rho) ** 2).real  # noqa: E731
    return float(var(u) + var(v))


def all_observables(bundle: LiouvillianBundle, rho: DensityMatrix,
                    phases: tuple[float, float] = DEFAULT_PHASES) -> dict[str, float]:
    """Flat record used by the sweep tables."""
    out = compute_observables(rho).scalars()
    w = dgcz_variance(rho, *phases)
    out["variance_sum"] = w.variance_sum
    if bundle.form == "effective":
        er = emission_rate_decomposition(bundle, rho)
        out.update(single1_net=er.single1_net, single2_net=er.single2_net, twophoton_net=er.twophoton_net)
    return out
