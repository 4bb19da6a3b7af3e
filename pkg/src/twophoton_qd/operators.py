"""Operator algebra on the truncated QD x Fock(N1) x Fock(N2) space.

Basis ordering is |g>,|x>,|y>,|u> (x) Fock(mode 1) (x) Fock(mode 2) with the
mode-2 photon number running fastest. Superoperators act on column-stacked
density matrices, so A rho B corresponds to kron(B.T, A).

Superoperators are stored in "sandwich" form, a list of (c, A, B) triples with
L(rho) = sum c A rho B. The explicit D^2 x D^2 matrix is only built on demand;
the steady-state solver instead assembles the generator restricted to the
block-diagonal sector selected by a conserved charge (see ``sector_matrix``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np
import scipy.sparse as sp

LEVELS = ("g", "x", "y", "u")
QD_DIM = 4


@dataclass(frozen=True)
class SpaceLayout:
    n_max1: int = 6
    n_max2: int = 6

    def __post_init__(self):
        if self.n_max1 < 1 or self.n_max2 < 1:
            raise ValueError(f"Fock truncation must be >= 1, got {self.n_max1}, {self.n_max2}")

    @property
    def qd_dim(self) -> int:
        return QD_DIM

    @property
    def dims(self) -> tuple[int, int, int]:
        return (QD_DIM, self.n_max1 + 1, self.n_max2 + 1)

    @property
    def dim(self) -> int:
        return QD_DIM * (self.n_max1 + 1) * (self.n_max2 + 1)

    def index(self, level: str, n1: int, n2: int) -> int:
        q = _level_index(level)
        if not (0 <= n1 <= self.n_max1 and 0 <= n2 <= self.n_max2):
            raise ValueError(f"photon numbers ({n1}, {n2}) outside truncation")
        return (q * (self.n_max1 + 1) + n1) * (self.n_max2 + 1) + n2

    def quantum_numbers(self) -> np.ndarray:
        """Array of shape (D, 3): (level index, n1, n2) for every basis state."""
        q, n1, n2 = np.unravel_index(np.arange(self.dim), self.dims)
        return np.stack([q, n1, n2], axis=1)

    def label(self, k: int) -> str:
        q, n1, n2 = np.unravel_index(k, self.dims)
        return f"|{LEVELS[q]},{n1},{n2}>"


def _level_index(level: str) -> int:
    try:
        return LEVELS.index(level)
    except ValueError:
        raise ValueError(f"unknown QD level {level!r}; expected one of {LEVELS}") from None


def _as_csr(m) -> sp.csr_matrix:
    return sp.csr_matrix(m, dtype=complex)


@dataclass(frozen=True, eq=False)
class Operator:
    """A complex operator on the composite space (stored as CSR)."""

    layout: SpaceLayout
    mat: sp.csr_matrix

    def __post_init__(self):
        object.__setattr__(self, "mat", _as_csr(self.mat))
        if self.mat.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(f"matrix shape {self.mat.shape} does not match layout dimension {self.layout.dim}")

    def _check(self, other: "Operator"):
        if other.layout != self.layout:
            raise ValueError("layout mismatch")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.mat + other.mat)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.mat - other.mat)
        return NotImplemented

    def __neg__(self):
        return Operator(self.layout, -self.mat)

    def __mul__(self, c):
        if np.isscalar(c):
            return Operator(self.layout, self.mat * c)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.mat @ other.mat)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.layout, self.mat.conj().T)

    def dense(self) -> np.ndarray:
        return self.mat.toarray()

    def hermiticity_error(self) -> float:
        diff = self.mat - self.mat.conj().T
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermiticity_error() <= tol

    def trace(self) -> complex:
        return complex(self.mat.diagonal().sum())


def identity(layout: SpaceLayout) -> Operator:
    return Operator(layout, sp.identity(layout.dim, dtype=complex, format="csr"))


def zero(layout: SpaceLayout) -> Operator:
    return Operator(layout, sp.csr_matrix((layout.dim, layout.dim), dtype=complex))


def embed(qd: np.ndarray | None, mode1: np.ndarray | None, mode2: np.ndarray | None,
          layout: SpaceLayout) -> Operator:
    """Tensor factor operators into the composite space; None means identity."""
    d0, d1, d2 = layout.dims
    a = sp.identity(d0) if qd is None else sp.csr_matrix(qd)
    b = sp.identity(d1) if mode1 is None else sp.csr_matrix(mode1)
    c = sp.identity(d2) if mode2 is None else sp.csr_matrix(mode2)
    return Operator(layout, sp.kron(sp.kron(a, b), c, format="csr"))


def qd_projector(i: str, j: str, layout: SpaceLayout) -> Operator:
    """sigma_ij = |i><j| on the dot, identity on both cavity modes."""
    m = np.zeros((QD_DIM, QD_DIM))
    m[_level_index(i), _level_index(j)] = 1.0
    return embed(m, None, None, layout)


def fock_lowering(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)


def annihilator(mode: int, layout: SpaceLayout) -> Operator:
    if mode == 1:
        return embed(None, fock_lowering(layout.n_max1), None, layout)
    if mode == 2:
        return embed(None, None, fock_lowering(layout.n_max2), layout)
    raise ValueError(f"invalid mode index {mode}; expected 1 or 2")


def number(mode: int, layout: SpaceLayout) -> Operator:
    a = annihilator(mode, layout)
    return a.dag() @ a


# ---------------------------------------------------------------------------
# density matrices


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SpaceLayout
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (self.layout.dim, self.layout.dim):
            raise ValueError(f"density matrix shape {data.shape} does not match layout dimension {self.layout.dim}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_ket(cls, layout: SpaceLayout, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, layout: SpaceLayout, level: str = "g", n1: int = 0, n2: int = 0) -> "DensityMatrix":
        psi = np.zeros(layout.dim, dtype=complex)
        psi[layout.index(level, n1, n2)] = 1.0
        return cls(layout, np.outer(psi, psi))

    @classmethod
    def maximally_mixed(cls, layout: SpaceLayout) -> "DensityMatrix":
        return cls(layout, np.eye(layout.dim) / layout.dim)

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def validate(self, trace_tol: float = 1e-10, herm_tol: float = 1e-10, neg_tol: float = 1e-8):
        if abs(self.trace() - 1) > trace_tol:
            raise ValueError(f"trace {self.trace()} differs from 1")
        if self.hermiticity_error() > herm_tol:
            raise ValueError(f"density matrix not Hermitian (err {self.hermiticity_error():.2e})")
        lam = self.min_eigenvalue()
        if lam < -neg_tol:
            raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")
        return self

    def vec(self) -> np.ndarray:
        return self.data.reshape(-1, order="F")

    def purity(self) -> float:
        return float(np.real(np.vdot(self.data.conj().T, self.data)))

    def trace_distance(self, other: "DensityMatrix") -> float:
        ev = np.linalg.eigvalsh(self.data - other.data)
        return 0.5 * float(np.sum(np.abs(ev)))


def expectation(op: Operator, rho: DensityMatrix) -> complex:
    """Tr[O rho]."""
    if op.layout != rho.layout:
        raise ValueError("layout mismatch between operator and density matrix")
    # Tr(O rho) = sum_ij O_ij rho_ji
    m = op.mat.tocoo()
    return complex(np.sum(m.data * rho.data[m.col, m.row]))


# ---------------------------------------------------------------------------
# superoperators


@dataclass(frozen=True, eq=False)
class Superoperator:
    """L(rho) = sum_k c_k A_k rho B_k on column-stacked density matrices."""

    layout: SpaceLayout
    terms: tuple = field(default_factory=tuple)

    def __add__(self, other):
        if not isinstance(other, Superoperator):
            return NotImplemented
        if other.layout != self.layout:
            raise ValueError("layout mismatch")
        return Superoperator(self.layout, self.terms + other.terms)

    def __mul__(self, c):
        if np.isscalar(c):
            return Superoperator(self.layout, tuple((c * k, a, b) for k, a, b in self.terms))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho, dtype=complex)
        for c, a, b in self.terms:
            left = rho if a is None else a @ rho
            out += c * (left if b is None else (b.T @ left.T).T)
        return out

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Explicit column-stacking matrix, D^2 x D^2."""
        d = self.layout.dim
        eye = sp.identity(d, dtype=complex, format="csr")
        total = sp.csr_matrix((d * d, d * d), dtype=complex)
        for c, a, b in self.terms:
            a_ = eye if a is None else a
            b_ = eye if b is None else b
            total = total + c * sp.kron(b_.T, a_, format="csr")
        total.eliminate_zeros()
        return total

    def trace_row(self) -> np.ndarray:
        """The functional rho -> Tr L(rho), as a row vector over vec(rho)."""
        d = self.layout.dim
        row = np.zeros((d, d), dtype=complex)
        for c, a, b in self.terms:
            # Tr(A rho B) = sum_ij (B A)_ji rho_ij
            if a is None and b is None:
                ba = np.eye(d)
            elif a is None:
                ba = b.toarray()
            elif b is None:
                ba = a.toarray()
            else:
                ba = (b @ a).toarray()
            row += c * ba.T
        return row.reshape(-1, order="F")


def _mat(op):
    if op is None:
        return None
    return op.mat if isinstance(op, Operator) else _as_csr(op)


def sandwich(layout: SpaceLayout, a=None, b=None, coef: complex = 1.0) -> Superoperator:
    """Superoperator rho -> coef * A rho B (None stands for identity)."""
    return Superoperator(layout, ((coef, _mat(a), _mat(b)),))


def dissipator(c: Operator, rate: float) -> Superoperator:
    """rate * (C rho C^dag - 1/2 {C^dag C, rho}).

    Equivalent to -(rate/2) L[C] with L[O]rho = O^dag O rho - 2 O rho O^dag + rho O^dag O.
    """
    if rate < 0:
        raise ValueError(f"negative rate {rate}")
    cdc = (c.dag() @ c).mat
    return Superoperator(c.layout, (
        (rate, c.mat, c.dag().mat),
        (-0.5 * rate, cdc, None),
        (-0.5 * rate, None, cdc),
    ))


def hamiltonian_commutator(h: Operator, tol: float = 1e-10) -> Superoperator:
    """-i [H, rho] with hbar = 1."""
    err = h.hermiticity_error()
    if err > tol:
        raise ValueError(f"Hamiltonian is not Hermitian (max |H - H^dag| = {err:.2e})")
    return Superoperator(h.layout, ((-1j, h.mat, None), (1j, None, h.mat)))


def hermitian_eigendecomposition(h: Operator | np.ndarray, tol: float = 1e-10):
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian operator."""
    m = h.dense() if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    err = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if err > tol * max(1.0, float(np.max(np.abs(m)))):
        raise ValueError(f"matrix is not Hermitian (err {err:.2e})")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


# ---------------------------------------------------------------------------
# conserved-charge sectors


def charge_blocks(charges: Sequence[Hashable]) -> list[np.ndarray]:
    """Group basis indices by charge label; blocks are ordered by first occurrence."""
    groups: dict = {}
    for k, q in enumerate(charges):
        groups.setdefault(q, []).append(k)
    return [np.asarray(v) for v in groups.values()]


def sector_indices(layout: SpaceLayout, blocks: list[np.ndarray]) -> np.ndarray:
    """vec indices (column stacking) of all block-diagonal entries rho[a, b]."""
    d = layout.dim
    out = []
    for blk in blocks:
        a, b = np.meshgrid(blk, blk, indexing="ij")
        out.append((a + d * b).reshape(-1, order="F"))
    return np.concatenate(out)


def sector_matrix(sop: Superoperator, blocks: list[np.ndarray]) -> sp.csr_matrix:
    """Matrix of ``sop`` restricted to block-diagonal density matrices.

    Each stored term must map the block-diagonal sector into itself, i.e. A and
    B shift the block label by opposite amounts. Columns and rows are ordered
    as ``sector_indices(layout, blocks)``.
    """
    d = sop.layout.dim
    owner = np.empty(d, dtype=int)
    for i, blk in enumerate(blocks):
        owner[blk] = i
    sizes = np.array([len(b) for b in blocks])
    offsets = np.concatenate([[0], np.cumsum(sizes**2)])
    n = int(offsets[-1])
    eye = sp.identity(d, dtype=complex, format="csr")

    rows, cols, vals = [], [], []
    for c, a, b in sop.terms:
        a_ = eye if a is None else a
        b_ = eye if b is None else b
        for p, bp in enumerate(blocks):
            # output block p receives A[p, q] rho_q B[q, p]
            a_rows = a_[bp, :]
            qs = np.unique(owner[a_rows.indices]) if a_rows.nnz else []
            for q in qs:
                bq = blocks[q]
                apq = a_rows[:, bq]
                bqp = b_[bq, :][:, bp]
                if apq.nnz == 0 or bqp.nnz == 0:
                    continue
                blk = sp.kron(bqp.T, apq, format="coo")
                rows.append(blk.row + offsets[p])
                cols.append(blk.col + offsets[q])
                vals.append(c * blk.data)
            # entries of B outside the block structure would leave the sector
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    m.sum_duplicates()
    return m


def check_sector_closure(sop: Superoperator, blocks: list[np.ndarray], tol: float = 1e-12) -> float:
    """Largest off-block element produced from a random block-diagonal input."""
    rng = np.random.default_rng(0)
    d = sop.layout.dim
    rho = np.zeros((d, d), dtype=complex)
    mask = np.zeros((d, d), dtype=bool)
    for blk in blocks:
        x = rng.normal(size=(len(blk), len(blk))) + 1j * rng.normal(size=(len(blk), len(blk)))
        rho[np.ix_(blk, blk)] = x + x.conj().T
        mask[np.ix_(blk, blk)] = True
    out = sop.apply(rho)
    return float(np.max(np.abs(out[~mask]))) if (~mask).any() else 0.0


def dump_operator(op: Operator, path) -> None:
    """Write nonzero entries as 'row col re im' lines (0-based)."""
    m = op.mat.tocoo()
    order = np.lexsort((m.col, m.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"% {op.layout.dim} {op.layout.dim} {m.nnz}\n")
        for k in order:
            v = m.data[k]
            fh.write(f"{m.row[k]} {m.col[k]} {v.real:.17g} {v.imag:.17g}\n")
