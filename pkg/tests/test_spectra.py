import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import sparse

from isospec import spectra as S
from isospec.endospace import clifford_space, random_orthogonal

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


# --- Jacobi and spectrum reports ---------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 12, 31])
def test_jacobi_matches_lapack(rng, n):
    A = rng.normal(size=(n, n))
    A = A + A.T
    w, V = S.jacobi_eigh(A)
    assert_allclose(w, np.linalg.eigvalsh(A), atol=1e-10 * max(1, np.abs(A).max()))
    assert_allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert_allclose(A @ V, V * w, atol=1e-9)


def test_jacobi_deterministic(rng):
    A = rng.normal(size=(20, 20))
    A = A + A.T
    w1, V1 = S.jacobi_eigh(A)
    w2, V2 = S.jacobi_eigh(A.copy())
    assert np.array_equal(w1, w2) and np.array_equal(V1, V2)


def test_eigs_sym_diag():
    r = S.eigs_sym(np.diag([1.0, 2.0, 2.0]))
    assert_allclose(r.values, [1, 2])
    assert list(r.multiplicities) == [1, 2]
    assert r.dimension == 3
    assert not r.ambiguous


def test_eigs_sym_trace(rng):
    A = rng.normal(size=(50, 50))
    A = A + A.T
    r = S.eigs_sym(A)
    assert abs(r.raw.sum() - np.trace(A)) <= 1e-9
    assert np.all(np.diff(r.values) > 0)


def test_eigs_sym_conjugation_invariant(rng):
    A = rng.normal(size=(10, 10))
    A = A + A.T
    O = random_orthogonal(10, rng)
    assert_allclose(S.eigs_sym(A).raw, S.eigs_sym(O @ A @ O.T).raw, atol=1e-10)


def test_eigs_sym_hermitian(rng):
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    A = A + A.conj().T
    assert_allclose(S.eigs_sym(A).raw, np.linalg.eigvalsh(A), atol=1e-10)


def test_eigs_sym_rejects_nonsymmetric():
    with pytest.raises(S.NotSymmetric):
        S.eigs_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(S.NotSymmetric):
        S.eigs_sym(np.ones((2, 3)))


def test_report_text_and_csv():
    r = S.eigs_sym(np.diag([1.0, 2.0, 2.0]), label="demo")
    assert "label: demo" in r.to_text()
    assert r.to_csv().splitlines()[0] == "value,multiplicity,cluster_diameter"
    assert r.to_csv().splitlines()[2].startswith("2,2,")


def test_cluster_ambiguity():
    r = S.cluster_spectrum([1.0, 1.0 + 5e-8, 3.0])
    assert list(r.multiplicities) == [2, 1]
    assert r.ambiguous


# --- comparisons --------------------------------------------------------------------

def test_compare_identical():
    r = S.cluster_spectrum([1, 2, 2, 3])
    assert S.compare_spectra(r, r).passed
    v = S.compare_spectra(r, r, mode="set")
    assert v.passed and v.relation == "isotonal"


def test_compare_isotonal_not_isospectral():
    a = S.cluster_spectrum([1, 2, 2, 3])
    b = S.cluster_spectrum([1, 1, 2, 3])
    assert not S.compare_spectra(a, b).passed
    v = S.compare_spectra(a, b, mode="set")
    assert v.passed and v.relation == "isotonal"


def test_compare_subtonal():
    a = S.cluster_spectrum([0, 1, 1])
    b = S.cluster_spectrum([0, 1, 5])
    v = S.compare_spectra(a, b, mode="set")
    assert not v.passed and v.relation == "subtonal"
    assert S.compare_spectra(b, a, mode="set").relation == "supertonal"
    assert_allclose(v.distance, 4)


def test_compare_sizes_and_mode():
    a = S.cluster_spectrum([1, 2])
    b = S.cluster_spectrum([1, 2, 3])
    v = S.compare_spectra(a, b)
    assert not v.passed and v.details["sizes"] == (2, 3)
    with pytest.raises(ValueError):
        S.compare_spectra(a, b, mode="bag")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.lists(st.floats(-10, 10), min_size=1, max_size=8))
def test_compare_multiset_symmetric(x, y):
    a, b = S.cluster_spectrum(x), S.cluster_spectrum(y)
    v1, v2 = S.compare_spectra(a, b), S.compare_spectra(b, a)
    assert v1.passed == v2.passed and v1.distance == v2.distance


# --- conjugation residual -----------------------------------------------------------

def test_conjugation_residual_cases(rng):
    P = rng.normal(size=(5, 5))
    assert S.conjugation_residual(P, P, np.eye(5)) == 0
    U = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))[0]
    assert S.conjugation_residual(P, U @ P @ U.conj().T, U) <= 1e-12
    assert S.conjugation_residual(P, rng.normal(size=(5, 5)), U) > 0.1
    with pytest.raises(S.ShapeMismatch):
        S.conjugation_residual(P, P, np.eye(4))


def test_sparse_conjugation_residual(rng):
    P = sparse.random(8, 8, density=0.3, random_state=1).tocsr()
    O = random_orthogonal(8, rng)
    K = sparse.csr_matrix(O)
    Pp = sparse.csr_matrix(O @ P.toarray() @ O.T)
    assert S.sparse_conjugation_residual(P, Pp, K) <= 1e-12


# --- Fourier-reduced operators ------------------------------------------------------

def test_fock_indices_count():
    from math import comb
    for k, N in ((2, 5), (4, 3)):
        assert len(S.fock_indices(k, N)) == comb(N + k, k)


def test_fourier_reduce_structure(h3_11):
    beta = np.array([0.3, 0.2, 0.1])
    r = S.fourier_reduce(h3_11.J(beta), beta, 4)
    H = r.matrix.toarray()
    assert_allclose(H, H.conj().T, atol=1e-12)
    assert r.band_residual == 0
    assert r.commutator_residual <= 1e-12
    assert np.all(np.linalg.eigvalsh(-H) > 0)


def test_fourier_reduce_rejects_small_N():
    with pytest.raises(ValueError):
        S.fourier_reduce(ROT, np.array([1.0]), 1)


def test_beta_zero_is_laplacian():
    r = S.fourier_reduce(np.zeros((2, 2)), np.zeros(1), 6)
    H = r.matrix.toarray()
    assert np.abs(H.imag).max() == 0
    assert r.rotation.nnz == 0
    # <h_n, -h_n''> = n + 1/2 per coordinate
    d = np.array([sum(m) + 1.0 for m in S.fock_indices(2, 6)])
    assert_allclose(-np.diag(H), d, atol=1e-12)


def test_heisenberg_landau_levels():
    r = S.fourier_reduce(ROT, np.array([1.0]), 10, scale=np.sqrt(np.pi))
    w = np.linalg.eigvalsh(-r.matrix.toarray())
    levels = (w - 4 * np.pi ** 2) / (2 * np.pi)
    assert_allclose(levels, np.round(levels), atol=1e-9)
    assert np.all(np.round(levels) % 2 == 1)


def test_heisenberg_cauchy_convergence():
    ground = 2 * np.pi + 4 * np.pi ** 2
    lows = [S.fourier_reduce(ROT, np.array([1.0]), N).lowest(1)[0] for N in (6, 10, 14, 18)]
    assert np.all(np.diff(lows) < 0)
    assert np.all(np.array(lows) >= ground - 1e-9)
    gaps = np.abs(np.diff(lows))
    assert np.all(np.diff(gaps) < 0)


def test_dense_vs_sectors(h3_11):
    beta = np.array([0.3, 0.2, 0.1])
    r = S.fourier_reduce(h3_11.J(beta)[:4, :4], beta, 6)
    assert_allclose(r.lowest(12, "dense"), r.lowest(12, "sectors"), atol=1e-10)
    total = sum(V.shape[1] for V in r.sectors())
    assert total == r.dim
    with pytest.raises(ValueError):
        r.lowest(3, "arnoldi")


def test_fock_rotation_unitary(rng):
    O = random_orthogonal(3, rng)
    U = S.fock_rotation(O, 4).toarray()
    assert_allclose(U.conj().T @ U, np.eye(len(U)), atol=1e-12)


def test_exact_route(rng):
    s1, s2 = clifford_space(3, 1, 0), clifford_space(3, 0, 1)
    beta = np.array([0.3, 0.2, 0.1])
    J1, J2 = s1.J(beta), s2.J(beta)
    O = S.orthogonal_conjugator(J1, J2)
    assert_allclose(O @ J1 @ O.T, J2, atol=1e-12)
    assert S.exact_route_residual(J1, J2, beta, O, 6) <= 1e-12
    assert S.exact_route_residual(J1, J2, beta, np.eye(4), 6) > 1e-3


def test_orthogonal_conjugator_errors():
    with pytest.raises(ValueError):
        S.orthogonal_conjugator(ROT, 2 * ROT)
    with pytest.raises(ValueError):
        S.orthogonal_conjugator(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]))


def test_compare_reduced_small():
    s1, s2 = clifford_space(3, 1, 0), clifford_space(3, 0, 1)
    beta = np.array([0.3, 0.2, 0.1])
    J1, J2 = s1.J(beta), s2.J(beta)
    rep = S.compare_reduced(J1, J2, beta, N=8, n_eigs=6, conjugator=S.orthogonal_conjugator(J1, J2))
    assert rep.passed
    assert rep.exact_residual <= 1e-12
    text = rep.to_text()
    assert text.splitlines()[0] == "N: 8" and "passed: True" in text


def test_compare_reduced_detects_difference():
    beta = np.array([1.0])
    rep = S.compare_reduced(ROT, 1.5 * ROT, beta, N=8, n_eigs=4)
    assert not rep.passed
