"""Spectral computations: a deterministic Jacobi eigensolver, clustered
spectrum reports and their comparison, conjugation residuals, and the
Z-Fourier reduced operators in a Hermite-function basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, pi, sqrt

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sla

JACOBI_THRESHOLD = 1e-12
CLUSTER_TOL = 1e-7
AMBIGUOUS_DIAMETER = 1e-8


class NotSymmetric(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings of 0..n-1 (n even) in n-1 rounds, each index once per round."""
    idx = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(idx[: n // 2])
        q = np.array(idx[n // 2:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def jacobi_eigh(M, threshold: float = JACOBI_THRESHOLD, max_sweeps: int = 60):
    """Cyclic Jacobi for a real symmetric matrix.

    Rotations in each round act on disjoint index pairs and are applied
    together.  Stops when the off-diagonal Frobenius norm is at most
    threshold times the Frobenius norm of M.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n < 2:
        return np.diag(A).copy(), V
    pad = n % 2
    if pad:
        A = np.pad(A, ((0, 1), (0, 1)))
        V = np.pad(V, ((0, 1), (0, 1)))
        V[n, n] = 1.0
    m = A.shape[0]
    rounds = _round_robin(m)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= threshold * scale:
            break
        for p, q in rounds:
            apq = A[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (A[q, q] - A[p, p]) / (2 * apq)
            t = np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau))
            t[tau == 0] = 1.0
            c = 1 / np.sqrt(1 + t * t)
            s = t * c
            Ap, Aq = A[:, p].copy(), A[:, q].copy()
            A[:, p], A[:, q] = c * Ap - s * Aq, s * Ap + c * Aq
            Ap, Aq = A[p, :].copy(), A[q, :].copy()
            A[p, :], A[q, :] = c[:, None] * Ap - s[:, None] * Aq, s[:, None] * Ap + c[:, None] * Aq
            Vp, Vq = V[:, p].copy(), V[:, q].copy()
            V[:, p], V[:, q] = c * Vp - s * Vq, s * Vp + c * Vq
    w = np.diag(A)[:n].copy()
    V = V[:n, :n]
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass
class SpectrumReport:
    """Ascending eigenvalues clustered at a relative tolerance."""

    values: np.ndarray
    multiplicities: np.ndarray
    diameters: np.ndarray
    raw: np.ndarray
    cluster_tolerance: float = CLUSTER_TOL
    label: str = ""

    @property
    def ambiguous(self) -> bool:
        return bool(np.any(self.diameters >= AMBIGUOUS_DIAMETER))

    @property
    def dimension(self) -> int:
        return int(self.multiplicities.sum())

    def to_text(self) -> str:
        lines = [f"label: {self.label}", f"cluster_tolerance: {self.cluster_tolerance:.3g}",
                 f"dimension: {self.dimension}", f"ambiguous: {self.ambiguous}", "clusters:"]
        for v, m, d in zip(self.values, self.multiplicities, self.diameters):
            lines.append(f"  - value: {v:.15g}\n    multiplicity: {m}\n    cluster_diameter: {d:.3g}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["value,multiplicity,cluster_diameter"]
        rows += [f"{v:.15g},{m},{d:.3g}" for v, m, d in zip(self.values, self.multiplicities, self.diameters)]
        return "\n".join(rows) + "\n"


def cluster_spectrum(eigs, tol: float = CLUSTER_TOL, label: str = "") -> SpectrumReport:
    w = np.sort(np.asarray(eigs, dtype=float))
    groups: list[list[float]] = []
    for v in w:
        if groups and abs(v - groups[-1][-1]) <= tol * max(1.0, abs(v)):
            groups[-1].append(v)
        else:
            groups.append([v])
    return SpectrumReport(
        values=np.array([np.mean(g) for g in groups]),
        multiplicities=np.array([len(g) for g in groups]),
        diameters=np.array([g[-1] - g[0] for g in groups]),
        raw=w,
        cluster_tolerance=tol,
        label=label,
    )


def eigs_sym(M, tol: float = CLUSTER_TOL, label: str = "", sym_tol: float = 1e-10) -> SpectrumReport:
    """Full spectrum of a symmetric or Hermitian matrix, clustered."""
    M = np.asarray(M)
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or np.abs(M - M.conj().T).max(initial=0.0) > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric/Hermitian")
    if np.iscomplexobj(M) and np.abs(M.imag).max(initial=0.0) > 0:
        big = np.block([[M.real, -M.imag], [M.imag, M.real]])
        w, _ = jacobi_eigh(0.5 * (big + big.T))
        w = w[::2]
    else:
        A = np.real(M)
        w, _ = jacobi_eigh(0.5 * (A + A.T))
    return cluster_spectrum(w, tol, label)


@dataclass
class Verdict:
    mode: str
    passed: bool
    distance: float
    relation: str
    details: dict = field(default_factory=dict)


def _set_distance(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """One-sided distances: sup over a of dist to b, sup over b of dist to a."""
    if len(a) == 0 or len(b) == 0:
        return (0.0 if len(a) == 0 else np.inf), (0.0 if len(b) == 0 else np.inf)
    D = np.abs(a[:, None] - b[None, :])
    return float(D.min(axis=1).max()), float(D.min(axis=0).max())


def compare_spectra(r1: SpectrumReport, r2: SpectrumReport, mode: str = "multiset",
                    tol: float = 1e-8) -> Verdict:
    """Multiset comparison of raw eigenvalues, or set comparison of clusters."""
    if mode == "multiset":
        if len(r1.raw) != len(r2.raw):
            return Verdict(mode, False, np.inf, "different", {"sizes": (len(r1.raw), len(r2.raw))})
        d = float(np.abs(np.sort(r1.raw) - np.sort(r2.raw)).max(initial=0.0))
        return Verdict(mode, d <= tol, d, "isospectral" if d <= tol else "different")
    if mode == "set":
        d12, d21 = _set_distance(r1.values, r2.values)
        haus = max(d12, d21)
        if haus <= tol:
            rel = "isotonal"
        elif d12 <= tol:
            rel = "subtonal"
        elif d21 <= tol:
            rel = "supertonal"
        else:
            rel = "different"
        return Verdict(mode, haus <= tol, haus, rel, {"sup_1_to_2": d12, "sup_2_to_1": d21,
                                                       "ambiguous": r1.ambiguous or r2.ambiguous})
    raise ValueError(f"unknown mode {mode!r}")


def conjugation_residual(P, Pp, K) -> float:
    """|K P - P' K| / (|K| (|P| + |P'|)) in Frobenius norms."""
    P, Pp, K = (np.asarray(m) for m in (P, Pp, K))
    if K.shape[1] != P.shape[0] or Pp.shape[1] != K.shape[0] or P.shape[0] != P.shape[1] \
            or Pp.shape[0] != Pp.shape[1]:
        raise ShapeMismatch(f"{P.shape}, {Pp.shape}, {K.shape}")
    den = np.linalg.norm(K) * (np.linalg.norm(P) + np.linalg.norm(Pp))
    if den == 0:
        return 0.0
    return float(np.linalg.norm(K @ P - Pp @ K) / den)


# --- Z-Fourier reduced operators ------------------------------------------------------

def fock_indices(k: int, N: int) -> list[tuple]:
    """Multi-indices of total degree <= N, ordered by degree then monomial order."""
    from .polys import monomial_space
    ms = monomial_space(k)
    return [m for d in range(N + 1) for m in ms.monomials(d)]


def _ladders(k: int, N: int) -> list[sparse.csr_matrix]:
    """Annihilation operators A_i on Hermite functions of total degree <= N."""
    idx = fock_indices(k, N)
    pos = {m: i for i, m in enumerate(idx)}
    out = []
    for i in range(k):
        rows, cols, vals = [], [], []
        for c, m in enumerate(idx):
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                rows.append(pos[tuple(mm)])
                cols.append(c)
                vals.append(sqrt(m[i]))
        out.append(sparse.csr_matrix((vals, (rows, cols)), shape=(len(idx), len(idx))))
    return out


@dataclass
class ReducedOperator:
    """Galerkin matrix of Box_beta on product Hermite functions of total degree <= N.

    Box_beta f = Delta f - 4 pi^2 |beta|^2 f - pi^2 |J_beta X|^2 f - 2 pi i D_beta f.
    The basis is h_n(a x) with scale a.  matrix is complex Hermitian;
    -matrix is positive.
    """

    beta: np.ndarray
    J_beta: np.ndarray
    N: int
    scale: float
    matrix: sparse.csr_matrix
    degrees: np.ndarray
    band_residual: float
    rotation: sparse.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def commutator_residual(self) -> float:
        """|[Box_beta, i D_beta]| relative to |Box_beta| |i D_beta|; zero up to rounding."""
        num = sla.norm(self.matrix @ self.rotation - self.rotation @ self.matrix)
        den = sla.norm(self.matrix) * sla.norm(self.rotation)
        return float(num / den) if den else 0.0

    def sectors(self, tol: float = 1e-8) -> list[sparse.csr_matrix]:
        """Orthonormal bases of the joint eigenspaces of i D_beta.

        i D_beta keeps the Hermite degree and commutes with Box_beta, so each
        eigenspace is invariant.  Returned as sparse isometries (dim x size).
        """
        vals, cols, rows, data = [], [], [], []
        col = 0
        R = self.rotation.tocsr()
        for d in np.unique(self.degrees):
            idx = np.flatnonzero(self.degrees == d)
            w, V = np.linalg.eigh(R[idx][:, idx].toarray())
            for j in range(len(w)):
                nz = np.flatnonzero(np.abs(V[:, j]) > 1e-15)
                rows.append(idx[nz])
                data.append(V[nz, j])
                cols.append(np.full(len(nz), col))
                vals.append(w[j])
                col += 1
        vals = np.array(vals)
        basis = sparse.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                  shape=(self.dim, col)).tocsc()
        order = np.argsort(vals, kind="stable")
        breaks = np.flatnonzero(np.diff(vals[order]) > tol) + 1
        return [basis[:, np.sort(g)] for g in np.split(order, breaks)]

    def lowest(self, n: int = 10, method: str = "auto") -> np.ndarray:
        """The n smallest eigenvalues of -Box_beta.

        method "dense" diagonalizes the full matrix; "sectors" diagonalizes
        each i D_beta eigenspace separately.  "auto" picks dense up to dim 400.
        """
        A = -self.matrix
        if method == "auto":
            method = "dense" if self.dim <= 400 else "sectors"
        if method == "dense":
            return np.linalg.eigvalsh(A.toarray())[:n]
        if method != "sectors":
            raise ValueError(f"unknown method {method!r}")
        out = []
        for V in self.sectors():
            block = (V.conj().T @ (A @ V)).toarray()
            out.append(np.linalg.eigvalsh((block + block.conj().T) / 2)[:n])
        return np.sort(np.concatenate(out))[:n]


def fourier_reduce(J_beta, beta, N: int, scale: float = 1.0) -> ReducedOperator:
    """Assemble Box_beta for the endomorphism J_beta = J(beta)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    J = np.asarray(J_beta, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = J.shape[0]
    big = fock_indices(k, N + 1)
    small = len(fock_indices(k, N))
    A = _ladders(k, N + 1)
    Ad = [a.T.tocsr() for a in A]
    x = [(a + ad) / (scale * sqrt(2)) for a, ad in zip(A, Ad)]
    dx = [scale * (a - ad) / sqrt(2) for a, ad in zip(A, Ad)]

    def gal(P, Q):
        return (P[:small, :] @ Q[:, :small]).tocsr()

    lap = sum(gal(d, d) for d in dx)
    S = J.T @ J
    quad = sum(S[i, j] * gal(x[i], x[j]) for i in range(k) for j in range(k) if S[i, j] != 0)
    D = sum(J[i, j] * gal(x[j], dx[i]) for i in range(k) for j in range(k) if J[i, j] != 0)
    D = D if not np.isscalar(D) else sparse.csr_matrix((small, small))
    M = (lap - pi ** 2 * quad - 2j * pi * D - 4 * pi ** 2 * float(beta @ beta) * sparse.identity(small)).tocsr()
    deg = np.array([sum(m) for m in big[:small]])
    coo = M.tocoo()
    band = float(np.abs(coo.data[np.abs(deg[coo.row] - deg[coo.col]) > 2]).max(initial=0.0))
    return ReducedOperator(beta=beta, J_beta=J, N=N, scale=scale, matrix=M, degrees=deg, band_residual=band,
                           rotation=(1j * D).tocsr())


def fock_rotation(O, N: int) -> sparse.csr_matrix:
    """Unitary induced by f -> f(O^T X) on Hermite functions of degree <= N.

    Creation operators transform as vectors, so on degree d it is the
    substitution matrix of O on monomials in the creation operators,
    conjugated by the normalization W = diag(sqrt(n!)) as W S W^-1.
    """
    from .polys import monomial_space
    O = np.asarray(O, dtype=float)
    k = O.shape[0]
    ms = monomial_space(k)
    blocks = []
    for d in range(N + 1):
        Sd = ms.substitution(O.T, d)
        w = np.sqrt(ms.fischer_weights(d))
        blocks.append(Sd * w[:, None] / w[None, :])
    return sparse.block_diag(blocks, format="csr")


def sparse_conjugation_residual(P, Pp, K) -> float:
    """conjugation_residual for sparse matrices."""
    num = sla.norm(K @ P - Pp @ K)
    den = sla.norm(K) * (sla.norm(P) + sla.norm(Pp))
    return float(num / den) if den else 0.0


@dataclass
class FourierPairReport:
    N: int
    eigs1: np.ndarray
    eigs2: np.ndarray
    cauchy1: np.ndarray
    cauchy2: np.ndarray
    exact_residual: float | None

    @property
    def cauchy(self) -> np.ndarray:
        return np.maximum(self.cauchy1, self.cauchy2)

    @property
    def difference(self) -> np.ndarray:
        return np.abs(self.eigs1 - self.eigs2)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.difference <= 2 * self.cauchy + 1e-12 * np.abs(self.eigs1)))

    def to_text(self) -> str:
        lines = [f"N: {self.N}", "eigenvalues (of -Box), |difference|, cauchy error:"]
        for a, b, c in zip(self.eigs1, self.difference, self.cauchy):
            lines.append(f"  {a:.12g}  {b:.3e}  {c:.3e}")
        if self.exact_residual is not None:
            lines.append(f"exact unitary route residual: {self.exact_residual:.3e}")
        lines.append(f"passed: {self.passed}")
        return "\n".join(lines) + "\n"


def compare_reduced(J1, J2, beta, N: int = 20, n_eigs: int = 10, scale: float = 1.0,
                    conjugator=None) -> FourierPairReport:
    """Lowest eigenvalues of the two reduced operators at N with Cauchy errors against N - 2.

    If an orthogonal conjugator O with O J1 O^T = J2 is given, the exact route
    residual of the induced Fock rotation is also reported (at the same N).
    """
    ev = {}
    for name, J in (("1", J1), ("2", J2)):
        for n in (N - 2, N):
            ev[name, n] = fourier_reduce(J, beta, n, scale).lowest(n_eigs)
    exact = None
    if conjugator is not None:
        exact = exact_route_residual(J1, J2, beta, conjugator, N)
    return FourierPairReport(N=N, eigs1=ev["1", N], eigs2=ev["2", N],
                             cauchy1=np.abs(ev["1", N] - ev["1", N - 2]),
                             cauchy2=np.abs(ev["2", N] - ev["2", N - 2]), exact_residual=exact)


def exact_route_residual(J1, J2, beta, O, N: int) -> float:
    """Residual of U(O) Box_1 = Box_2 U(O) on the truncated Hermite space."""
    B1 = fourier_reduce(J1, beta, N).matrix
    B2 = fourier_reduce(J2, beta, N).matrix
    U = fock_rotation(O, N)
    return sparse_conjugation_residual(B1, B2, U)


def orthogonal_conjugator(J1, J2, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal O with O J1 O^T = J2 for skew J1, J2 with J^2 = -|J|^2 Id (same scale)."""
    from .endospace import _complex_structure_basis
    J1, J2 = np.asarray(J1, float), np.asarray(J2, float)
    k = J1.shape[0]
    r1 = sqrt(-np.trace(J1 @ J1) / k)
    r2 = sqrt(-np.trace(J2 @ J2) / k)
    if abs(r1 - r2) > tol * max(1.0, r1) or r1 == 0:
        raise ValueError("J1 and J2 must have the same nonzero scale")
    for J, r in ((J1, r1), (J2, r2)):
        if np.abs(J @ J + r * r * np.eye(k)).max() > tol * max(1.0, r * r):
            raise ValueError("J^2 is not a negative multiple of the identity")
    P1 = _complex_structure_basis(J1 / r1)
    P2 = _complex_structure_basis(J2 / r2)
    return P2 @ P1.T
