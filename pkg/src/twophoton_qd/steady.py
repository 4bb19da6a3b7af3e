"""Steady states, time evolution and Fock truncation checks."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import LiouvillianBundle, SystemParams, build_liouvillian
from .operators import DensityMatrix, SpaceLayout, sector_indices, sector_matrix

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
DENSE_LIMIT = 1500  # sector dimension below which the dense SVD route is used
TRUNCATION_FLOOR = 1e-8  # observable magnitude below which changes count as absolute


class SteadyStateError(RuntimeError):
    pass


class DegenerateSteadyStateError(SteadyStateError):
    pass


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SteadySolution:
    rho: DensityMatrix
    residual: float
    method: str
    converged_truncation: bool | None = None
    diagnostics: dict = field(default_factory=dict)


def _reduced(bundle: LiouvillianBundle):
    blocks = bundle.blocks()
    idx = sector_indices(bundle.layout, blocks)
    m = sector_matrix(bundle.generator, blocks)
    return m, idx


def _trace_row(layout: SpaceLayout, idx: np.ndarray) -> np.ndarray:
    d = layout.dim
    a, b = idx % d, idx // d
    return (a == b).astype(complex)


def _unpack(layout: SpaceLayout, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
    d = layout.dim
    v = np.zeros(d * d, dtype=complex)
    v[idx] = x
    return v.reshape((d, d), order="F")


def _norm1(m: sp.spmatrix) -> float:
    return float(abs(m).sum(axis=0).max()) if m.nnz else 0.0


def _finish(layout, idx, x, m, method, diagnostics) -> SteadySolution:
    rho = _unpack(layout, idx, x)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if not np.isfinite(tr) or abs(tr) < 1e-14:
        raise SteadyStateError("steady-state solve returned a traceless or non-finite result")
    rho = rho / tr
    xr = rho.reshape(-1, order="F")[idx]
    residual = float(np.linalg.norm(m @ xr) / max(_norm1(m), 1e-300))
    dm = DensityMatrix(layout, rho)
    if residual > RESIDUAL_TOL:
        raise SteadyStateError(f"steady-state residual {residual:.2e} exceeds {RESIDUAL_TOL:.0e}")
    return SteadySolution(dm, residual, method, diagnostics=diagnostics)


def solve_steady(bundle: LiouvillianBundle, method: str = "auto") -> SteadySolution:
    """Solve L rho = 0 with Tr rho = 1 inside the conserved-charge sector.

    ``method``: 'direct' (sparse LU with one row replaced by the trace
    condition), 'svd' (dense null space, also checks uniqueness) or 'auto'.
    """
    m, idx = _reduced(bundle)
    n = m.shape[0]
    layout = bundle.layout
    tr = _trace_row(layout, idx)
    if method == "auto":
        method = "svd" if n <= DENSE_LIMIT else "direct"

    if method == "svd":
        dense = m.toarray()
        _, s, vh = la.svd(dense)
        scale = max(s[0], 1e-300)
        null = np.sum(s < 1e-10 * scale)
        if null > 1:
            raise DegenerateSteadyStateError(f"Liouvillian null space has dimension {null}")
        x = vh[-1].conj()
        return _finish(layout, idx, x, m, "svd", {"sector_dim": n, "gap": float(s[-2] / scale)})

    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    # replace the row with the largest weight on the trace entries
    a = m.tolil(copy=True)
    r = int(np.flatnonzero(tr)[0])
    a[r, :] = tr
    rhs = np.zeros(n, dtype=complex)
    rhs[r] = 1.0
    try:
        lu = spla.splu(a.tocsc())
        x = lu.solve(rhs)
    except RuntimeError as exc:  # exactly singular
        raise DegenerateSteadyStateError(f"singular steady-state system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("non-finite steady state, the system is likely degenerate")
    return _finish(layout, idx, x, m, "direct", {"sector_dim": n})


def steady_state(params: SystemParams, form: str = "full", kernels=None, method: str = "auto") -> SteadySolution:
    return solve_steady(build_liouvillian(params, form, kernels), method)


def time_evolve(bundle: LiouvillianBundle, rho0: DensityMatrix, t_final: float, n_out: int = 2,
                dt: float | None = None) -> tuple[np.ndarray, list[DensityMatrix]]:
    """Classical RK4 in the charge sector; rho0 must be block diagonal.

    The step is chosen so that dt * ||L||_1 stays below 0.1 unless given.
    """
    m, idx = _reduced(bundle)
    layout = bundle.layout
    full = rho0.vec()
    x = full[idx].copy()
    if np.linalg.norm(full) - np.linalg.norm(x) > 1e-12 * max(np.linalg.norm(full), 1.0):
        raise ValueError("initial state has coherences outside the conserved-charge sector")
    norm = _norm1(m)
    if dt is None:
        dt = 0.1 / max(norm, 1e-12)
    times = np.linspace(0.0, t_final, n_out)
    out = []
    t = 0.0
    for target in times:
        while t < target - 1e-15:
            h = min(dt, target - t)
            k1 = m @ x
            k2 = m @ (x + 0.5 * h * k1)
            k3 = m @ (x + 0.5 * h * k2)
            k4 = m @ (x + h * k3)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out.append(DensityMatrix(layout, _unpack(layout, idx, x)))
    return times, out


@dataclass(frozen=True)
class TruncationReport:
    n_max: tuple[int, int]
    converged: bool
    rel_change: float
    history: tuple = ()
    converged_at: int | None = None  # smallest cutoff whose value was confirmed by the next one


def truncation_convergence(params: SystemParams, form: str = "full", observable=None, start: int | None = None,
                           step: int = 2, limit: int = 14, rtol: float = 5e-3,
                           strict: bool = False) -> tuple[SteadySolution, TruncationReport]:
    """Raise the Fock cutoff of both modes by ``step`` until the observable
    (default: total photon number) changes by less than ``rtol``."""
    from .observables import mean_photon_numbers

    if observable is None:
        def observable(rho):
            n1, n2 = mean_photon_numbers(rho)
            return n1 + n2
    n = start if start is not None else max(params.layout.n_max1, params.layout.n_max2)
    prev = None
    history = []
    sol = None
    while True:
        p = params.replace(layout=SpaceLayout(n, n))
        sol = steady_state(p, form)
        val = float(observable(sol.rho))
        history.append((n, val))
        if prev is not None:
            rel = abs(val - prev) / max(abs(val), TRUNCATION_FLOOR)
            if rel < rtol:
                return sol, TruncationReport((n, n), True, rel, tuple(history), converged_at=n - step)
        prev = val
        if n + step > limit:
            rel = abs(history[-1][1] - history[-2][1]) / max(abs(val), TRUNCATION_FLOOR) if len(history) > 1 else np.inf
            if strict:
                raise TruncationError(f"photon-number truncation not converged at n_max={n} (change {rel:.2e})")
            log.warning("truncation not converged at n_max=%d (relative change %.2e)", n, rel)
            return sol, TruncationReport((n, n), False, rel, tuple(history))
        n += step
