"""Polaron master equation for the four-level dot in a two-mode cavity.

Two assemblies are provided:

* the full polaron-frame generator, where the phonon term is evaluated in the
  eigenbasis of H_s through the half-Fourier transforms of G_g and G_u;
* the effective large-detuning generators (incoherent and coherent pumping)
  with phonon-induced shifts, Lindblad rates and the two-photon cross terms.

Each generator keeps a labelled list of its terms so the photon flux of every
process can be evaluated separately (see ``observables.emission_rate_decomposition``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .operators import (
    DensityMatrix, Operator, SpaceLayout, Superoperator, annihilator, charge_blocks, dissipator,
    hamiltonian_commutator, hermitian_eigendecomposition, identity, number, qd_projector, sandwich,
)
from .phonons import (
    EffectiveRates, EffectiveRatesCoherent, PhononBathParams, PhononKernels, displacement_average,
    effective_rates_coherent, effective_rates_incoherent, get_kernels,
)

RATE_FLOOR = -1e-10  # tolerated quadrature noise on rates that must be >= 0


@dataclass(frozen=True)
class IncoherentPump:
    eta1: float = 0.5
    eta2: float = 0.5


@dataclass(frozen=True)
class CoherentPump:
    Omega1: float = 2.0
    Omega2: float = 2.0
    Delta_p: float = 0.0


@dataclass(frozen=True)
class SystemParams:
    """Model parameters in units of g; defaults are the reference detuning scan set."""

    g1: float = 1.0
    g2: float = 1.0
    delta_x: float = -1.0
    Delta_xx: float = 15.0
    Delta_1: float = 5.0
    Delta_2: float = -5.0
    kappa_1: float = 0.1
    kappa_2: float = 0.1
    gamma_1: float = 0.01
    gamma_2: float = 0.01
    gamma_d: float = 0.01
    pump: IncoherentPump | CoherentPump = field(default_factory=IncoherentPump)
    bath: PhononBathParams = field(default_factory=PhononBathParams)
    layout: SpaceLayout = field(default_factory=SpaceLayout)
    # Omega^p prefactor override (None -> Omega1 * Omega2)
    omega_p_prefactor: float | None = None

    def __post_init__(self):
        rates = dict(kappa_1=self.kappa_1, kappa_2=self.kappa_2, gamma_1=self.gamma_1,
                     gamma_2=self.gamma_2, gamma_d=self.gamma_d)
        if isinstance(self.pump, IncoherentPump):
            rates.update(eta1=self.pump.eta1, eta2=self.pump.eta2)
        for k, v in rates.items():
            if v < 0:
                raise ValueError(f"rate {k} must be >= 0, got {v}")

    @property
    def scheme(self) -> str:
        return "coherent" if isinstance(self.pump, CoherentPump) else "incoherent"

    def replace(self, **kw) -> "SystemParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class Channel:
    label: str
    op: Operator
    rate: float


@dataclass(frozen=True)
class GeneratorTerm:
    """One labelled piece of the generator.

    ``process`` tags the photon bookkeeping: 'mode1' and 'mode2' for
    single-photon exchange with one cavity mode, 'pair' for two-photon terms,
    'loss' for cavity leakage and 'other' for terms that do not move photons.
    """

    label: str
    sop: Superoperator
    process: str = "other"


@dataclass(frozen=True, eq=False)
class LiouvillianBundle:
    generator: Superoperator
    hamiltonian: Operator
    channels: tuple[Channel, ...]
    terms: tuple[GeneratorTerm, ...]
    form: Literal["full-polaron", "effective", "bare"]
    scheme: Literal["incoherent", "coherent"]
    charges: tuple | None = None
    params: SystemParams | None = None
    B: float = 1.0

    @property
    def layout(self) -> SpaceLayout:
        return self.generator.layout

    def blocks(self):
        if self.charges is None:
            return [np.arange(self.layout.dim)]
        return charge_blocks(self.charges)


# ---------------------------------------------------------------------------
# operators of the model


def _ops(layout: SpaceLayout):
    s = lambda i, j: qd_projector(i, j, layout)  # noqa: E731
    return s, annihilator(1, layout), annihilator(2, layout)


def charge_labels(layout: SpaceLayout, scheme: str) -> tuple:
    """Conserved excitation labels used to block-diagonalise the steady state.

    Incoherent pumping: (n1 + [y or u], n2 + [u]); the x level is assigned
    (n1, n2). Coherent pumping: n1 - n2 + [y].
    """
    qn = layout.quantum_numbers()
    lev, n1, n2 = qn[:, 0], qn[:, 1], qn[:, 2]
    if scheme == "incoherent":
        q1 = n1 + ((lev == 2) | (lev == 3))
        q2 = n2 + (lev == 3)
        return tuple(zip(q1.tolist(), q2.tolist()))
    return tuple((n1 - n2 + (lev == 2)).tolist())


def _require(p: SystemParams, scheme: str):
    if p.scheme != scheme:
        raise ValueError(f"expected {scheme} pumping, got {p.scheme}")


def _B(p: SystemParams, kernels: PhononKernels | None) -> float:
    return kernels.B if kernels is not None else displacement_average(p.bath)


def coupling_parts(p: SystemParams) -> dict[str, Operator]:
    """Lowering-type pieces A whose Hermitian combinations form X_g, X_u."""
    s, a1, a2 = _ops(p.layout)
    parts = {
        "cavity1": p.g1 * (s("y", "g") @ a1),
        "cavity2": p.g2 * (s("u", "y") @ a2),
    }
    if p.scheme == "coherent":
        parts["pump1"] = p.pump.Omega1 * s("x", "g")
        parts["pump2"] = p.pump.Omega2 * s("u", "x")
    return parts


def system_operators(p: SystemParams) -> tuple[Operator, Operator]:
    """X_g = A + A^dag and X_u = i A - i A^dag, with A the sum of coupling parts."""
    a = sum(coupling_parts(p).values(), start=Operator(p.layout, np.zeros((p.layout.dim,) * 2)))
    return a + a.dag(), 1j * a + (-1j) * a.dag()


def _diagonal_incoherent(p: SystemParams) -> Operator:
    s, a1, a2 = _ops(p.layout)
    n1, n2 = number(1, p.layout), number(2, p.layout)
    return (p.delta_x * s("x", "x") - (p.Delta_xx - p.delta_x) * s("u", "u")
            - p.Delta_1 * n1 - (p.Delta_xx - p.delta_x + p.Delta_2) * n2)


def _diagonal_coherent(p: SystemParams) -> Operator:
    s, a1, a2 = _ops(p.layout)
    n1, n2 = number(1, p.layout), number(2, p.layout)
    dp = p.pump.Delta_p
    return (dp * s("x", "x") + (2 * dp - p.delta_x - p.Delta_xx) * s("u", "u")
            + (dp - p.delta_x) * s("y", "y")
            + (dp - p.delta_x - p.Delta_1) * n1 + (dp - p.Delta_xx - p.Delta_2) * n2)


def hamiltonian_pieces(p: SystemParams, B: float) -> dict[str, Operator]:
    diag = _diagonal_incoherent(p) if p.scheme == "incoherent" else _diagonal_coherent(p)
    pieces = {"H:detuning": diag}
    for name, part in coupling_parts(p).items():
        pieces[f"H:{name}"] = B * (part + part.dag())
    return pieces


def hamiltonian_incoherent(p: SystemParams, B: float | None = None) -> Operator:
    """Polaron-frame H_s for incoherent pumping (hbar = 1)."""
    _require(p, "incoherent")
    B = displacement_average(p.bath) if B is None else B
    return sum(hamiltonian_pieces(p, B).values(), start=_zero(p))


def hamiltonian_coherent(p: SystemParams, B: float | None = None) -> Operator:
    """Polaron-frame H_s in the frame rotating at the pump frequency."""
    _require(p, "coherent")
    B = displacement_average(p.bath) if B is None else B
    return sum(hamiltonian_pieces(p, B).values(), start=_zero(p))


def system_hamiltonian(p: SystemParams, B: float | None = None) -> Operator:
    if p.scheme == "incoherent":
        return hamiltonian_incoherent(p, B)
    return hamiltonian_coherent(p, B)


def _zero(p: SystemParams) -> Operator:
    return 0.0 * identity(p.layout)


# ---------------------------------------------------------------------------
# phonon term


def _filtered_operator(h_dense: np.ndarray, x_dense: np.ndarray, kernel: str,
                       kernels: PhononKernels, blocks) -> np.ndarray:
    """X~ = int_0^inf G(tau) e^{-iH tau} X e^{iH tau} dtau, assembled blockwise.

    In the eigenbasis of H: X~_ab = X_ab K(E_b - E_a).
    """
    d = h_dense.shape[0]
    out = np.zeros((d, d), dtype=complex)
    xmax = float(np.max(np.abs(x_dense))) if x_dense.size else 0.0
    if xmax == 0:
        return out
    for blk in blocks:
        ix = np.ix_(blk, blk)
        xb = x_dense[ix]
        if not np.any(xb):
            continue
        e, v = hermitian_eigendecomposition(h_dense[ix])
        xe = v.conj().T @ xb @ v
        mask = np.abs(xe) > 1e-14 * xmax
        freqs = (e[None, :] - e[:, None])[mask]
        kvals = np.zeros(xe.shape, dtype=complex)
        kvals[mask] = kernels.half_fourier(kernel, freqs)
        out[ix] = v @ (xe * kvals) @ v.conj().T
    return out


def polaron_dissipator(h_s: Operator, x_g: Operator, x_u: Operator, kernels: PhononKernels,
                       charges: tuple | None = None, tol: float = 1e-14) -> Superoperator:
    """Phonon term of the polaron master equation (enters the generator with a minus sign).

    Returns the superoperator rho -> -sum_j ([X_j, X~_j rho] + h.c.); it annihilates
    the trace and preserves Hermiticity.
    """
    for name, op in (("H_s", h_s), ("X_g", x_g), ("X_u", x_u)):
        if not op.is_hermitian():
            raise ValueError(f"{name} must be Hermitian")
    layout = h_s.layout
    blocks = charge_blocks(charges) if charges is not None else [np.arange(layout.dim)]
    h = h_s.dense()
    terms = []
    for kernel, x in (("g", x_g), ("u", x_u)):
        xd = x.dense()
        xt = _filtered_operator(h, xd, kernel, kernels, blocks)
        scale = max(float(np.max(np.abs(xt))), 1e-300)
        xt[np.abs(xt) < tol * scale] = 0.0
        xt_op = Operator(layout, xt)
        xxt = x @ xt_op
        terms += [
            (-1.0, xxt.mat, None),  # -X X~ rho
            (1.0, xt_op.mat, x.mat),  # +X~ rho X
            (-1.0, None, xxt.dag().mat),  # -rho X~^dag X
            (1.0, x.mat, xt_op.dag().mat),  # +X rho X~^dag
        ]
    return Superoperator(layout, tuple(terms))


# ---------------------------------------------------------------------------
# Lindblad channels


def lindblad_channels(p: SystemParams) -> list[Channel]:
    s, a1, a2 = _ops(p.layout)
    ch = [
        Channel("kappa_1", a1, p.kappa_1),
        Channel("kappa_2", a2, p.kappa_2),
    ]
    for i in ("x", "y"):
        ch.append(Channel(f"gamma_1:{i}->g", s("g", i), p.gamma_1))
        ch.append(Channel(f"gamma_2:u->{i}", s(i, "u"), p.gamma_2))
    for i in ("x", "y", "u"):
        ch.append(Channel(f"gamma_d:{i}", s(i, i), p.gamma_d))
    if p.scheme == "incoherent":
        ch.append(Channel("eta_1:g->x", s("x", "g"), p.pump.eta1))
        ch.append(Channel("eta_2:x->u", s("u", "x"), p.pump.eta2))
    return ch


def _channel_terms(channels) -> list[GeneratorTerm]:
    out = []
    for c in channels:
        proc = "loss" if c.label.startswith("kappa") else "other"
        if c.label.startswith("Gamma_1"):
            proc = "mode1"
        elif c.label.startswith("Gamma_2"):
            proc = "mode2"
        out.append(GeneratorTerm(c.label, dissipator(c.op, c.rate), proc))
    return out


_H_PROCESS = {"H:cavity1": "mode1", "H:cavity2": "mode2", "H:two_photon": "pair"}


def _hamiltonian_terms(pieces: dict[str, Operator]) -> list[GeneratorTerm]:
    return [GeneratorTerm(k, hamiltonian_commutator(v), _H_PROCESS.get(k, "other"))
            for k, v in pieces.items()]


def _bundle(p, pieces, channels, extra_terms, form, charges, B) -> LiouvillianBundle:
    terms = _hamiltonian_terms(pieces) + _channel_terms(channels) + list(extra_terms)
    gen = Superoperator(p.layout)
    for t in terms:
        gen = gen + t.sop
    h = sum(pieces.values(), start=_zero(p))
    return LiouvillianBundle(gen, h, tuple(channels), tuple(terms), form, p.scheme, charges, p, B)


def build_full_liouvillian(p: SystemParams, kernels: PhononKernels | None = None) -> LiouvillianBundle:
    """Full polaron master equation: -i[H_s, .] - L_ph + Lindblad channels."""
    kernels = kernels if kernels is not None else get_kernels(p.bath)
    pieces = hamiltonian_pieces(p, kernels.B)
    h = sum(pieces.values(), start=_zero(p))
    charges = charge_labels(p.layout, p.scheme)
    x_g, x_u = system_operators(p)
    ph = polaron_dissipator(h, x_g, x_u, kernels, charges=charges)
    return _bundle(p, pieces, lindblad_channels(p), [GeneratorTerm("phonon", ph, "other")],
                   "full-polaron", charges, kernels.B)


def build_bare_liouvillian(p: SystemParams) -> LiouvillianBundle:
    """Generator without any phonon term and with <B> = 1."""
    pieces = hamiltonian_pieces(p, 1.0)
    return _bundle(p, pieces, lindblad_channels(p), [], "bare", charge_labels(p.layout, p.scheme), 1.0)


# ---------------------------------------------------------------------------
# effective generators


def _nonneg(name: str, rate: float) -> float:
    if rate < RATE_FLOOR:
        raise ValueError(f"phonon-induced rate {name} = {rate:.3e} is negative")
    return max(float(rate), 0.0)


def _cross_term(layout, coef: complex, m: Operator, left: Operator, right: Operator) -> Superoperator:
    """-(coef/2) (M rho - 2 L rho R + rho M)."""
    return (sandwich(layout, m, None, -0.5 * coef) + sandwich(layout, left, right, coef)
            + sandwich(layout, None, m, -0.5 * coef))


def _warn_regime(p: SystemParams):
    if abs(p.Delta_1) < 5 * abs(p.g1) or abs(p.Delta_2) < 5 * abs(p.g2):
        warnings.warn("effective master equation used outside the |Delta_i| >> g_i regime",
                      RuntimeWarning, stacklevel=3)


def _cavity_phonon_parts(p: SystemParams, r: EffectiveRates):
    s, a1, a2 = _ops(p.layout)
    ad1, ad2 = a1.dag(), a2.dag()
    shifts = (r.delta_plus_2 * (s("u", "u") @ a2 @ ad2) + r.delta_minus_2 * (s("y", "y") @ ad2 @ a2)
              + r.delta_plus_1 * (s("y", "y") @ a1 @ ad1) + r.delta_minus_1 * (s("g", "g") @ ad1 @ a1))
    pair = s("u", "g") @ a1 @ a2
    two_photon = r.omega_12 * pair + np.conj(r.omega_12) * pair.dag()
    channels = [
        Channel("Gamma_2+", s("y", "u") @ ad2, _nonneg("Gamma_2+", r.gamma_plus_2)),
        Channel("Gamma_2-", s("u", "y") @ a2, _nonneg("Gamma_2-", r.gamma_minus_2)),
        Channel("Gamma_1+", s("g", "y") @ ad1, _nonneg("Gamma_1+", r.gamma_plus_1)),
        Channel("Gamma_1-", s("y", "g") @ a1, _nonneg("Gamma_1-", r.gamma_minus_1)),
    ]
    layout = p.layout
    cross = [
        GeneratorTerm("Gamma_ug", _cross_term(layout, r.gamma_ug, pair, s("y", "g") @ a1, a2 @ s("u", "y")), "pair"),
        GeneratorTerm("Gamma_gu", _cross_term(layout, r.gamma_gu, pair.dag(), s("y", "u") @ ad2,
                                              ad1 @ s("g", "y")), "pair"),
    ]
    return shifts, two_photon, channels, cross


def build_effective_liouvillian_incoherent(p: SystemParams, r: EffectiveRates | None = None,
                                           kernels: PhononKernels | None = None) -> LiouvillianBundle:
    _require(p, "incoherent")
    _warn_regime(p)
    kernels = kernels if kernels is not None else get_kernels(p.bath)
    if r is None:
        r = effective_rates_incoherent(p.g1, p.g2, p.Delta_1, p.Delta_2, kernels)
    pieces = hamiltonian_pieces(p, kernels.B)
    shifts, two_photon, ph_channels, cross = _cavity_phonon_parts(p, r)
    pieces["H:phonon_shift"] = shifts
    pieces["H:two_photon"] = two_photon
    channels = lindblad_channels(p) + ph_channels
    return _bundle(p, pieces, channels, cross, "effective", charge_labels(p.layout, p.scheme), kernels.B)


def build_effective_liouvillian_coherent(p: SystemParams, rp: EffectiveRatesCoherent | None = None,
                                         r: EffectiveRates | None = None,
                                         kernels: PhononKernels | None = None) -> LiouvillianBundle:
    _require(p, "coherent")
    _warn_regime(p)
    kernels = kernels if kernels is not None else get_kernels(p.bath)
    pump = p.pump
    if r is None:
        r = effective_rates_incoherent(p.g1, p.g2, p.Delta_1, p.Delta_2, kernels)
    if rp is None:
        rp = effective_rates_coherent(pump.Omega1, pump.Omega2, pump.Delta_p, p.Delta_xx, p.delta_x,
                                      kernels, literal_prefactor=p.omega_p_prefactor)
    s, a1, a2 = _ops(p.layout)
    pieces = hamiltonian_pieces(p, kernels.B)
    shifts, two_photon, ph_channels, cross = _cavity_phonon_parts(p, r)
    pieces["H:phonon_shift"] = (shifts + rp.delta_p_plus_2 * s("u", "u")
                                + (rp.delta_p_minus_2 + rp.delta_p_plus_1) * s("x", "x")
                                + rp.delta_p_minus_1 * s("g", "g"))
    pieces["H:two_photon"] = two_photon
    pieces["H:pump_two_photon"] = rp.omega_p * s("u", "g") + np.conj(rp.omega_p) * s("g", "u")
    pump_channels = [
        Channel("Gamma_p2+", s("x", "u"), _nonneg("Gamma_p2+", rp.gamma_p_plus_2)),
        Channel("Gamma_p2-", s("u", "x"), _nonneg("Gamma_p2-", rp.gamma_p_minus_2)),
        Channel("Gamma_p1+", s("g", "x"), _nonneg("Gamma_p1+", rp.gamma_p_plus_1)),
        Channel("Gamma_p1-", s("x", "g"), _nonneg("Gamma_p1-", rp.gamma_p_minus_1)),
    ]
    cross_p = [
        GeneratorTerm("Gamma_p_ug", _cross_term(p.layout, rp.gamma_p_ug, s("u", "g"), s("x", "g"), s("u", "x"))),
        GeneratorTerm("Gamma_p_gu", _cross_term(p.layout, rp.gamma_p_gu, s("g", "u"), s("x", "u"), s("g", "x"))),
    ]
    channels = lindblad_channels(p) + ph_channels + pump_channels
    return _bundle(p, pieces, channels, cross + cross_p, "effective", charge_labels(p.layout, p.scheme),
                   kernels.B)


def build_liouvillian(p: SystemParams, form: str = "full", kernels: PhononKernels | None = None) -> LiouvillianBundle:
    if form == "full":
        return build_full_liouvillian(p, kernels)
    if form == "effective":
        if p.scheme == "incoherent":
            return build_effective_liouvillian_incoherent(p, kernels=kernels)
        return build_effective_liouvillian_coherent(p, kernels=kernels)
    raise ValueError(f"unknown model form {form!r}; expected 'full' or 'effective'")


__all__ = [
    "IncoherentPump", "CoherentPump", "SystemParams", "Channel", "GeneratorTerm", "LiouvillianBundle",
    "charge_labels", "coupling_parts", "system_operators", "hamiltonian_pieces", "hamiltonian_incoherent",
    "hamiltonian_coherent", "system_hamiltonian", "polaron_dissipator", "lindblad_channels",
    "build_full_liouvillian", "build_bare_liouvillian", "build_effective_liouvillian_incoherent",
    "build_effective_liouvillian_coherent", "build_liouvillian", "DensityMatrix",
]
