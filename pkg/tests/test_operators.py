import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_density, random_hermitian, thermal_fock
from twophoton_qd.operators import (
    LEVELS, DensityMatrix, Operator, SpaceLayout, Superoperator, annihilator, charge_blocks, dissipator,
    dump_operator, embed, expectation, hamiltonian_commutator, hermitian_eigendecomposition, identity,
    number, qd_projector, sandwich, sector_indices, sector_matrix,
)

LAY = SpaceLayout(2, 3)


def test_layout_dimension_and_ordering():
    lay = SpaceLayout(6, 6)
    assert lay.dim == 196
    assert lay.qd_dim == 4
    # mode 2 runs fastest, then mode 1, then the dot level
    assert lay.index("g", 0, 1) == 1
    assert lay.index("g", 1, 0) == 7
    assert lay.index("x", 0, 0) == 49
    assert lay.label(lay.index("u", 2, 5)) == "|u,2,5>"


@pytest.mark.parametrize("n1,n2", [(0, 3), (2, 0), (-1, 1)])
def test_layout_rejects_bad_truncation(n1, n2):
    with pytest.raises(ValueError):
        SpaceLayout(n1, n2)


def test_projector_trace_and_algebra():
    gg = qd_projector("g", "g", LAY)
    assert gg.trace() == pytest.approx(3 * 4)
    prod = qd_projector("x", "g", LAY) @ qd_projector("g", "x", LAY)
    assert np.allclose(prod.dense(), qd_projector("x", "x", LAY).dense())
    assert np.allclose(qd_projector("u", "y", LAY).dag().dense(), qd_projector("y", "u", LAY).dense())
    with pytest.raises(ValueError):
        qd_projector("z", "g", LAY)


def test_annihilator_matrix_elements():
    lay = SpaceLayout(3, 1)
    a = annihilator(1, lay).dense()
    vac = np.zeros(lay.dim)
    vac[lay.index("g", 0, 0)] = 1
    assert np.allclose(a @ vac, 0)
    assert a[lay.index("g", 1, 0), lay.index("g", 2, 0)] == pytest.approx(np.sqrt(2))
    with pytest.raises(ValueError):
        annihilator(3, lay)


def test_commutator_deviates_only_on_top_level():
    lay = SpaceLayout(5, 5)
    for mode in (1, 2):
        a = annihilator(mode, lay)
        comm = (a @ a.dag() - a.dag() @ a).dense()
        n = np.real(np.diag(number(mode, lay).dense())).round().astype(int)
        d = np.diag(comm).real
        assert np.allclose(d[n < 5], 1.0)
        assert np.allclose(d[n == 5], -5.0)
        assert np.allclose(comm - np.diag(np.diag(comm)), 0)


def test_number_spectrum_is_integer():
    lay = SpaceLayout(4, 2)
    for mode, top in ((1, 4), (2, 2)):
        ev = np.linalg.eigvalsh(number(mode, lay).dense())
        assert np.array_equal(np.unique(ev.round(12)), np.arange(top + 1))
        assert np.allclose(ev, ev.round())


def test_embedding_commutes_with_products(rng):
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4))
    lhs = embed(a, None, None, LAY) @ embed(b, None, None, LAY)
    assert np.allclose(lhs.dense(), embed(a @ b, None, None, LAY).dense())
    m1 = rng.normal(size=(3, 3))
    m2 = rng.normal(size=(3, 3))
    lhs = embed(None, m1, None, LAY) @ embed(None, m2, None, LAY)
    assert np.allclose(lhs.dense(), embed(None, m1 @ m2, None, LAY).dense())


def test_layout_mismatch_is_an_error():
    a = identity(SpaceLayout(1, 1))
    b = identity(SpaceLayout(2, 1))
    with pytest.raises(ValueError):
        a + b
    with pytest.raises(ValueError):
        expectation(a, DensityMatrix.maximally_mixed(SpaceLayout(2, 1)))
    with pytest.raises(ValueError):
        Operator(SpaceLayout(1, 1), np.eye(3))


def test_dissipator_single_photon_decay():
    lay = SpaceLayout(2, 1)
    a1 = annihilator(1, lay)
    vac = DensityMatrix.basis(lay, "g", 0, 0)
    assert np.allclose(dissipator(a1, 0.3).apply(vac.data), 0)
    one = DensityMatrix.basis(lay, "g", 1, 0)
    out = dissipator(a1, 0.3).apply(one.data)
    assert np.allclose(out, 0.3 * (vac.data - one.data))
    with pytest.raises(ValueError):
        dissipator(a1, -0.1)


def test_dissipator_trace_and_hermiticity_random(rng):
    lay = SpaceLayout(1, 1)
    for _ in range(5):
        c = Operator(lay, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
        rho = random_density(16, rng)
        out = dissipator(c, 0.7).apply(rho)
        assert abs(np.trace(out)) < 1e-10
        assert np.max(np.abs(out - out.conj().T)) < 1e-10


def test_vectorisation_convention(rng):
    lay = SpaceLayout(1, 1)
    a = Operator(lay, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    b = Operator(lay, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    s = sandwich(lay, a, b, 0.5 - 0.2j)
    rho = random_density(16, rng)
    direct = s.apply(rho)
    via_matrix = (s.matrix @ rho.reshape(-1, order="F")).reshape((16, 16), order="F")
    assert np.allclose(direct, via_matrix)
    assert np.allclose(s.matrix.toarray(), (0.5 - 0.2j) * np.kron(b.dense().T, a.dense()))


def test_commutator_superoperator():
    lay = SpaceLayout(1, 1)
    assert np.allclose(hamiltonian_commutator(identity(lay)).matrix.toarray(), 0)
    h = number(1, lay) + 2.0 * qd_projector("x", "x", lay)
    rho = DensityMatrix.basis(lay, "x", 1, 0)
    assert np.allclose(hamiltonian_commutator(h).apply(rho.data), 0)
    plus = hamiltonian_commutator(h).matrix.toarray()
    minus = hamiltonian_commutator(-1.0 * h).matrix.toarray()
    assert np.allclose(plus, -minus)
    with pytest.raises(ValueError):
        hamiltonian_commutator(Operator(lay, np.triu(np.ones((16, 16)))))


def test_unitary_evolution_conserves_eigenstate_populations(rng):
    from scipy.linalg import expm
    lay = SpaceLayout(1, 1)
    hm = random_hermitian(16, rng)
    h = Operator(lay, hm)
    e, v = hermitian_eigendecomposition(h)
    rho = random_density(16, rng)
    gen = hamiltonian_commutator(h).matrix.toarray()
    rho_t = (expm(0.37 * gen) @ rho.reshape(-1, order="F")).reshape((16, 16), order="F")
    pops0 = np.real(np.diag(v.conj().T @ rho @ v))
    pops1 = np.real(np.diag(v.conj().T @ rho_t @ v))
    assert np.allclose(pops0, pops1, atol=1e-10)


def test_eigendecomposition():
    e, v = hermitian_eigendecomposition(np.diag([3.0, -1.0, 2.0]))
    assert np.allclose(e, [-1, 2, 3])
    assert np.allclose(np.abs(v), np.eye(3)[:, [1, 2, 0]])
    e, _ = hermitian_eigendecomposition(np.array([[0, 0.7], [0.7, 0]]))
    assert np.allclose(e, [-0.7, 0.7])
    with pytest.raises(ValueError):
        hermitian_eigendecomposition(np.array([[0, 1.0], [0, 0]]))


def test_eigendecomposition_reconstruction_fig2_hamiltonian():
    from twophoton_qd.model import SystemParams, hamiltonian_incoherent
    h = hamiltonian_incoherent(SystemParams(layout=SpaceLayout(4, 4)))
    e, v = hermitian_eigendecomposition(h)
    hd = h.dense()
    assert np.linalg.norm(v @ np.diag(e) @ v.conj().T - hd) < 1e-9 * np.linalg.norm(hd)
    assert np.all(np.diff(e) >= 0)


def test_expectation_values():
    lay = SpaceLayout(4, 1)
    rho = DensityMatrix.basis(lay, "y", 2, 1)
    assert expectation(identity(lay), rho) == pytest.approx(1.0)
    assert expectation(number(1, lay), rho) == pytest.approx(2.0)
    # truncated thermal state, geometric-series oracle: n = nbar(1 - (N+1)q^N + N q^{N+1}) / (1 - q^{N+1})
    lay = SpaceLayout(40, 1)
    p = thermal_fock(40, 0.5)
    diag = np.zeros(lay.dims)
    diag[0, :, 0] = p
    rho = DensityMatrix(lay, np.diag(diag.ravel()).astype(complex))
    q, N = 0.5 / 1.5, 40
    oracle = q * (1 - (N + 1) * q**N + N * q ** (N + 1)) / ((1 - q) * (1 - q ** (N + 1)))
    assert expectation(number(1, lay), rho).real == pytest.approx(oracle, abs=1e-12)
    assert oracle == pytest.approx(0.5, abs=1e-12)


def test_density_matrix_validation(rng):
    lay = SpaceLayout(1, 1)
    DensityMatrix(lay, random_density(16, rng)).validate()
    with pytest.raises(ValueError):
        DensityMatrix(lay, 2 * random_density(16, rng)).validate()
    bad = np.diag(np.r_[1.1, -0.1, np.zeros(14)]).astype(complex)
    with pytest.raises(ValueError):
        DensityMatrix(lay, bad).validate()


def test_sector_matrix_matches_full_matrix(rng):
    lay = SpaceLayout(2, 2)
    a1, a2 = annihilator(1, lay), annihilator(2, lay)
    s = lambda i, j: qd_projector(i, j, lay)  # noqa: E731
    h = (s("y", "g") @ a1 + s("u", "y") @ a2)
    h = h + h.dag() + 0.3 * number(1, lay)
    gen = hamiltonian_commutator(h) + dissipator(a1, 0.2) + dissipator(s("g", "y"), 0.1)
    qn = lay.quantum_numbers()
    charges = list(zip(qn[:, 1] + (qn[:, 0] >= 2), qn[:, 2] + (qn[:, 0] == 3)))
    blocks = charge_blocks(charges)
    idx = sector_indices(lay, blocks)
    full = gen.matrix.tocsr()
    red = sector_matrix(gen, blocks)
    assert abs(red - full[idx][:, idx]).max() < 1e-14
    # nothing leaks out of the sector
    outside = np.setdiff1d(np.arange(lay.dim**2), idx)
    assert abs(full[outside][:, idx]).max() < 1e-14


def test_dump_operator(tmp_path):
    lay = SpaceLayout(1, 1)
    a = annihilator(1, lay)
    path = tmp_path / "a1.txt"
    dump_operator(a, path)
    lines = path.read_text().splitlines()
    assert lines[0].split()[-1] == str(a.mat.nnz)
    r, c, re, im = lines[1].split()
    assert a.dense()[int(r), int(c)] == pytest.approx(float(re) + 1j * float(im))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), rate=st.floats(0, 5))
def test_property_generators_preserve_trace_and_hermiticity(seed, rate):
    rng = np.random.default_rng(seed)
    lay = SpaceLayout(1, 1)
    c = Operator(lay, rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    h = Operator(lay, random_hermitian(16, rng))
    gen = hamiltonian_commutator(h) + dissipator(c, rate)
    x = random_hermitian(16, rng)
    out = gen.apply(x)
    assert abs(np.trace(out)) < 1e-10 * max(1.0, np.abs(out).max())
    assert np.max(np.abs(out - out.conj().T)) < 1e-10 * max(1.0, np.abs(out).max())


@settings(max_examples=25, deadline=None)
@given(level=st.sampled_from(LEVELS), n1=st.integers(0, 2), n2=st.integers(0, 3))
def test_property_basis_states_are_valid(level, n1, n2):
    rho = DensityMatrix.basis(LAY, level, n1, n2)
    rho.validate()
    assert expectation(number(1, LAY), rho).real == pytest.approx(n1)
    assert expectation(number(2, LAY), rho).real == pytest.approx(n2)


def test_superoperator_algebra(rng):
    lay = SpaceLayout(1, 1)
    a = dissipator(annihilator(1, lay), 1.0)
    b = dissipator(annihilator(2, lay), 0.5)
    rho = random_density(16, rng)
    assert np.allclose((a + b).apply(rho), a.apply(rho) + b.apply(rho))
    assert np.allclose((2.0 * a).apply(rho), 2 * a.apply(rho))
    assert np.allclose((-a).apply(rho), -a.apply(rho))
    assert isinstance(a + b, Superoperator)
