"""Endomorphism spaces with anticommutators.

An endomorphism space is a linear span of skew-symmetric maps J_1, ..., J_l
acting on R^k.  The supplied basis is treated as orthonormal for the
Z-space inner product unless a Gram matrix is given.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
import numpy as np
from scipy import linalg

STRUCT_TOL = 1e-10
EIG_TOL = 1e-9


class EndoSpaceError(ValueError):
    """Base class for endomorphism-space validation failures."""

    reason = "error"


class NonSkew(EndoSpaceError):
    reason = "NonSkew"

    def __init__(self, index: int, residual: float):
        super().__init__(f"basis element {index} is not skew (residual {residual:.3g})")
        self.index = index
        self.residual = residual


class DependentBasis(EndoSpaceError):
    reason = "DependentBasis"


class UnsupportedL(EndoSpaceError):
    reason = "UnsupportedL"


class NotAnticommutator(EndoSpaceError):
    reason = "NotAnticommutator"


class Degenerate(EndoSpaceError):
    reason = "Degenerate"


class BadSigma(EndoSpaceError):
    reason = "BadSigma"


class NotUnit(EndoSpaceError):
    reason = "NotUnit"


class NotAnticommuting(EndoSpaceError):
    reason = "NotAnticommuting"


class DimensionMismatch(EndoSpaceError):
    reason = "DimensionMismatch"


def skew_endo(mat, tol: float = 1e-12, index: int = 0) -> np.ndarray:
    """Validate a square matrix as a skew endomorphism and return it as floats."""
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EndoSpaceError(f"matrix {index} is not square: shape {m.shape}")
    res = float(np.max(np.abs(m + m.T))) if m.size else 0.0
    if res > tol * max(1.0, float(np.max(np.abs(m)))):
        raise NonSkew(index, res)
    return 0.5 * (m - m.T)


@dataclass(frozen=True, eq=False)
class EndoSpace:
    """A basis J_1..J_l of skew endomorphisms of R^k."""

    basis: np.ndarray
    labels: tuple = ()
    gram: np.ndarray | None = field(default=None)

    @property
    def l(self) -> int:
        return self.basis.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[1]

    @property
    def gram_matrix(self) -> np.ndarray:
        return np.eye(self.l) if self.gram is None else self.gram

    def J(self, Z) -> np.ndarray:
        """J_Z for Z given in basis coordinates."""
        return np.tensordot(np.asarray(Z, dtype=float), self.basis, axes=1)

    def coords(self, A) -> np.ndarray:
        """Basis coordinates of an endomorphism lying in the span."""
        M = self.basis.reshape(self.l, -1).T
        c, *_ = np.linalg.lstsq(M, np.asarray(A, dtype=float).ravel(), rcond=None)
        if np.max(np.abs(M @ c - np.ravel(A)), initial=0.0) > 1e-9 * max(1.0, np.abs(A).max()):
            raise EndoSpaceError("endomorphism is not in the span of the basis")
        return c

    def perp(self, Z) -> np.ndarray:
        """Rows: an orthonormal basis (in coordinates) of the complement of Z."""
        G = self.gram_matrix
        Z = np.asarray(Z, dtype=float)
        W = linalg.null_space((G @ Z)[None, :])
        # orthonormalize with respect to G
        if W.shape[1] == 0:
            return np.zeros((0, self.l))
        S = W.T @ G @ W
        w, V = np.linalg.eigh(S)
        return (W @ V / np.sqrt(w)).T

    def orthonormalized(self) -> "EndoSpace":
        """Equivalent space whose basis is orthonormal for the Gram matrix."""
        if self.gram is None:
            return self
        w, V = np.linalg.eigh(self.gram)
        T = V @ np.diag(w ** -0.5) @ V.T
        return EndoSpace(np.tensordot(T, self.basis, axes=1), self.labels, None)

    def is_heisenberg_type(self, tol: float = 1e-12) -> bool:
        return heisenberg_residual(self) <= tol

    def to_text(self) -> str:
        doc = {
            "k": self.k,
            "l": self.l,
            "labels": list(self.labels),
            "basis": [[_num(x) for x in m.ravel()] for m in self.basis],
        }
        if self.gram is not None:
            doc["gram"] = [_num(x) for x in self.gram.ravel()]
        return json.dumps(doc, indent=1)

    @classmethod
    def from_text(cls, text: str) -> "EndoSpace":
        doc = json.loads(text)
        k, l = int(doc["k"]), int(doc["l"])
        mats = [np.asarray(b, dtype=float).reshape(k, k) for b in doc["basis"]]
        if len(mats) != l:
            raise EndoSpaceError("basis length does not match l")
        gram = doc.get("gram")
        if gram is not None:
            gram = np.asarray(gram, dtype=float).reshape(l, l)
        return build_endo_space(mats, labels=tuple(doc.get("labels", ())), gram=gram)


def _num(x: float):
    return int(x) if float(x).is_integer() else float(x)


def build_endo_space(mats, labels: tuple = (), gram=None, tol: float = 1e-12) -> EndoSpace:
    """Validate skewness and independence and wrap the matrices."""
    mats = list(mats)
    if not mats:
        raise DependentBasis("empty basis")
    arrs = [skew_endo(m, tol=tol, index=i) for i, m in enumerate(mats)]
    k = arrs[0].shape[0]
    if any(a.shape != (k, k) for a in arrs):
        raise EndoSpaceError("matrices differ in size")
    basis = np.stack(arrs)
    rank = np.linalg.matrix_rank(basis.reshape(len(arrs), -1), tol=1e-10)
    if rank < len(arrs):
        raise DependentBasis(f"rank {rank} < l = {len(arrs)}")
    if k % 2 == 1 and any(abs(np.linalg.det(a)) > 1e-12 for a in arrs):
        raise EndoSpaceError("odd k cannot carry a non-degenerate skew map")
    if gram is not None:
        gram = np.asarray(gram, dtype=float)
        if gram.shape != (len(arrs),) * 2 or np.any(np.linalg.eigvalsh(gram) <= 0):
            raise EndoSpaceError("Gram matrix must be symmetric positive definite")
    return EndoSpace(basis, tuple(labels), gram)


def heisenberg_residual(space: EndoSpace) -> float:
    """max over basis pairs of |J_a J_b + J_b J_a + 2 g_ab Id|."""
    B, G = space.basis, space.gram_matrix
    I = np.eye(space.k)
    res = 0.0
    for a in range(space.l):
        for b in range(a, space.l):
            r = B[a] @ B[b] + B[b] @ B[a] + 2 * G[a, b] * I
            res = max(res, float(np.abs(r).max()))
    return res


# --- Pauli and quaternionic blocks ------------------------------------------

def pauli_blocks():
    """The 2x2 blocks (1, i, j, k) with i^2 = -1, j^2 = k^2 = 1, ij = k."""
    one = np.array([[1, 0], [0, 1]])
    i = np.array([[0, 1], [-1, 0]])
    j = np.array([[-1, 0], [0, 1]])
    k = np.array([[0, 1], [1, 0]])
    return one, i, j, k


def quaternionic_blocks():
    """The 4x4 blocks I, J, K built from Pauli blocks."""
    one, i, j, k = pauli_blocks()
    z = np.zeros((2, 2), dtype=int)
    I = np.block([[i, z], [z, i]])
    J = np.block([[z, j], [-j, z]])
    K = np.block([[z, k], [-k, z]])
    return I, J, K


def quat_mul(p, q) -> np.ndarray:
    """Hamilton product of quaternions given as (re, i, j, k)."""
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ])


def quat_conj(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def left_mult(q) -> np.ndarray:
    """Matrix of v -> q v on R^4 = H."""
    return np.stack([quat_mul(q, e) for e in np.eye(4, dtype=int)], axis=1)


def right_mult(q) -> np.ndarray:
    """Matrix of v -> v q on R^4 = H."""
    return np.stack([quat_mul(e, q) for e in np.eye(4, dtype=int)], axis=1)


def cayley_right(Z) -> np.ndarray:
    """Right product by the imaginary Cayley number Z in R^7, acting on H^2."""
    Z = np.asarray(Z)
    phi = np.array([0, Z[0], Z[1], Z[2]])
    psi = np.array([Z[3], Z[4], Z[5], Z[6]])
    cols = []
    for e in np.eye(8, dtype=int):
        v1, v2 = e[:4], e[4:]
        w1 = quat_mul(v1, phi) + quat_mul(psi, v2)
        w2 = -quat_mul(v2, phi) - quat_mul(quat_conj(psi), v1)
        cols.append(np.concatenate([w1, w2]))
    return np.stack(cols, axis=1)


def clifford_dimension(l: int) -> int:
    """Dimension n_l of the irreducible Clifford module for l generators."""
    p, r = divmod(l, 8)
    return 2 ** (4 * p + (0, 1, 2, 2, 3, 3, 3, 3)[r])


def _irreducible_generators(l: int) -> list[np.ndarray]:
    one, i, j, k = pauli_blocks()
    if l == 1:
        return [i]
    if l in (2, 3):
        units = [np.array(u) for u in ((0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))]
        return [left_mult(u) for u in units[:l]]
    if 4 <= l <= 7:
        return [cayley_right(e) for e in np.eye(7, dtype=int)[:l]]
    # l >= 8: tensor the l-8 module with the 16-dimensional l=8 module
    base8 = [np.kron(g, j) for g in _irreducible_generators(7)] + [np.kron(np.eye(8, dtype=int), i)]
    vol = np.eye(16, dtype=int)
    for g in base8:
        vol = vol @ g
    rest = _irreducible_generators(l - 8) if l > 8 else []
    n = rest[0].shape[0] if rest else 1
    gens = [np.kron(g, vol) for g in rest] + [np.kron(np.eye(n, dtype=int), g) for g in base8]
    return gens


def clifford_space(l: int, a: int = 1, b: int = 0) -> EndoSpace:
    """Heisenberg-type space J_l^{(a,b)}: the irreducible module replicated
    a+b times with the first generator sign-flipped on the last b copies."""
    if l < 1 or a < 0 or b < 0 or a + b < 1:
        raise EndoSpaceError("need l >= 1 and a + b >= 1")
    gens = _irreducible_generators(l)
    n = gens[0].shape[0]
    if n != clifford_dimension(l) or len(gens) != l:
        raise UnsupportedL(f"construction gives dimension {n}, expected {clifford_dimension(l)}")
    signs = [1] * a + [-1] * b
    mats = [np.kron(np.diag(signs), gens[0])]
    mats += [np.kron(np.eye(a + b, dtype=int), g) for g in gens[1:]]
    space = build_endo_space(mats, labels=("clifford", f"l={l}", f"a={a}", f"b={b}", "A=0"))
    if heisenberg_residual(space) > 1e-12:
        raise UnsupportedL(f"l={l}: generators fail the Clifford relations")
    return space


# --- anticommutators and Jordan form -----------------------------------------

@dataclass
class AnticommutatorCheck:
    ok: bool
    degenerate: bool
    residual: float

    def __bool__(self) -> bool:
        return self.ok


def _as_matrix(space: EndoSpace, A) -> tuple[np.ndarray, np.ndarray]:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0 or A.shape == ():
        raise EndoSpaceError("A must be an index, coordinate vector or matrix")
    if A.ndim == 1:
        return space.J(A), A
    return A, space.coords(A)


def resolve(space: EndoSpace, A) -> tuple[np.ndarray, np.ndarray]:
    """Return (matrix, coordinates) for A given as index, coordinates or matrix."""
    if isinstance(A, (int, np.integer)):
        e = np.zeros(space.l)
        e[int(A)] = 1.0
        return space.J(e), e
    return _as_matrix(space, A)


def is_anticommutator(space: EndoSpace, A, tol: float = STRUCT_TOL) -> AnticommutatorCheck:
    """A is non-degenerate and anticommutes with its orthogonal complement."""
    M, z = resolve(space, A)
    sv = np.linalg.svd(M, compute_uv=False)
    degenerate = bool(sv.min() <= tol * max(1.0, sv.max()))
    res = 0.0
    for w in space.perp(z):
        B = space.J(w)
        res = max(res, float(np.abs(M @ B + B @ M).max()))
    return AnticommutatorCheck(ok=(not degenerate) and res <= tol, degenerate=degenerate, residual=res)


@dataclass
class JordanForm:
    basis_change: np.ndarray
    block_sizes: list
    transformed_A: np.ndarray
    transformed_perp: list


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(values)
    groups: list[list[int]] = []
    for idx in order:
        if groups and abs(values[idx] - values[groups[-1][-1]]) <= tol * max(1.0, abs(values[idx])):
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def _complex_structure_basis(A0: np.ndarray) -> np.ndarray:
    """Orthonormal basis in which the complex structure A0 reads diag(i, ..., i)."""
    T, Zs = linalg.schur(A0, output="real")
    n = A0.shape[0]
    cols = []
    p = 0
    while p < n:
        if p + 1 < n and abs(T[p + 1, p]) > 1e-8:
            u, v = Zs[:, p], Zs[:, p + 1]
            # want A0 u = -v, A0 v = u  (columns of the block [[0,1],[-1,0]])
            if T[p, p + 1] < 0:
                v = -v
            cols += [u, v]
            p += 2
        else:
            raise Degenerate("complex structure has a real eigenvalue")
    return np.stack(cols, axis=1)


def jordan_normalize(space: EndoSpace, A, tol: float = 1e-8) -> JordanForm:
    """Orthogonal basis change putting A into 2x2 blocks a_c i and every
    perpendicular element into j/k blocks."""
    M, z = resolve(space, A)
    chk = is_anticommutator(space, z)
    if chk.residual > STRUCT_TOL:
        raise NotAnticommutator(f"residual {chk.residual:.3g}")
    S2 = -M @ M
    w, V = np.linalg.eigh(0.5 * (S2 + S2.T))
    w = np.clip(w, 0.0, None)
    cols, sizes = [], []
    for g in sorted(_cluster(np.sqrt(w), tol), key=lambda g: np.sqrt(w[g[0]])):
        a = float(np.mean(np.sqrt(w[g])))
        Vg = V[:, g]
        if a <= tol:
            cols.append(Vg)
        else:
            A0 = Vg.T @ M @ Vg / a
            cols.append(Vg @ _complex_structure_basis(A0))
        sizes.append((a, len(g)))
    P = np.concatenate(cols, axis=1)
    if np.allclose(P, np.eye(len(P)), atol=1e-12):
        P = np.eye(len(P))
    return JordanForm(
        basis_change=P,
        block_sizes=sizes,
        transformed_A=P.T @ M @ P,
        transformed_perp=[P.T @ space.J(r) @ P for r in space.perp(z)],
    )


def jordan_block_residual(A, perps, sizes) -> float:
    """Deviation of (A, perps) from the Jordan block pattern."""
    one, i, j, k = pauli_blocks()
    n = A.shape[0]
    target = np.zeros_like(A)
    ranges, p = [], 0
    for a, m in sizes:
        ranges.append((p, p + m, a))
        if a > 0:
            target[p:p + m, p:p + m] = np.kron(np.eye(m // 2), a * i)
        p += m
    res = 0.0
    for p0, p1, a in ranges:
        if a == 0:
            target[p0:p1, p0:p1] = A[p0:p1, p0:p1]
    res = float(np.abs(A - target).max())
    for F in perps:
        for p0, p1, a in ranges:
            if a == 0:
                continue
            for r in range(p0, p1, 2):
                for c in range(p0, p1, 2):
                    blk = F[r:r + 2, c:c + 2]
                    # component along 1 and i must vanish
                    res = max(res, abs(blk[0, 0] + blk[1, 1]) / 2, abs(blk[0, 1] - blk[1, 0]) / 2)
        # perpendicular maps preserve the eigenspaces of A^2
        for p0, p1, _ in ranges:
            off = np.concatenate([F[p0:p1, :p0], F[p0:p1, p1:]], axis=1)
            res = max(res, float(np.abs(off).max(initial=0.0)))
    return res


# --- deformations --------------------------------------------------------------

def sigma_ab(n: int, a: int, b: int) -> np.ndarray:
    """The involution (X_1..X_a, -X_{a+1}..-X_{a+b}) on (R^n)^{a+b}."""
    return np.kron(np.diag([1] * a + [-1] * b), np.eye(n, dtype=int))


def sigma_ab_deform(space: EndoSpace, A_index: int, a: int, b: int) -> EndoSpace:
    """Replicate the space on (a+b) copies with A negated on the last b."""
    if not is_anticommutator(space, A_index):
        raise NotAnticommutator(f"basis element {A_index}")
    reps = a + b
    mats = []
    for idx in range(space.l):
        signs = [1] * a + [-1] * b if idx == A_index else [1] * reps
        mats.append(np.kron(np.diag(signs), space.basis[idx]))
    return build_endo_space(mats, labels=space.labels + ("sigma-deformed", f"a={a}", f"b={b}"))


def sigma_A_deform(space: EndoSpace, A_index: int, sigma, tol: float = STRUCT_TOL) -> EndoSpace:
    """Replace A by sigma o A keeping the other basis elements."""
    s = np.asarray(sigma, dtype=float)
    I = np.eye(space.k)
    if np.abs(s @ s - I).max() > tol:
        raise BadSigma("not involutive")
    if np.abs(s.T @ s - I).max() > tol:
        raise BadSigma("not orthogonal")
    if max(np.abs(s @ B - B @ s).max() for B in space.basis) > tol:
        raise BadSigma("not commuting")
    mats = [s @ B if i == A_index else B for i, B in enumerate(space.basis)]
    return build_endo_space(mats, labels=space.labels + ("sigma_A-deformed",))


def rescale_to_unit(A) -> tuple[np.ndarray, np.ndarray]:
    """A = S A0 with S = (-A^2)^{1/2} symmetric positive and A0^2 = -Id."""
    A = np.asarray(A, dtype=float)
    w, V = np.linalg.eigh(-0.5 * (A @ A + (A @ A).T))
    if w.min() <= 1e-12 * max(1.0, w.max()):
        raise Degenerate("A has a kernel")
    S = V @ np.diag(np.sqrt(w)) @ V.T
    A0 = V @ np.diag(1 / np.sqrt(w)) @ V.T @ A
    return S, A0


@dataclass
class UnitConjugator:
    sqrtD: np.ndarray
    S_hat: np.ndarray
    D: np.ndarray
    residuals: dict


def unit_endo_conjugator(A0, B0, F_list=(), tol: float = STRUCT_TOL) -> UnitConjugator:
    """Orthogonal sqrt(D) with sqrt(D) B0 sqrt(D)^-1 = S_hat A0.

    E = -A0 B0 is orthogonal and commutes with every F.  sqrt(D) is the spectral
    function of E taking exp(i a) to exp(i a/2) on |a| < pi and the -1
    eigenspace (where B0 = -A0) to 1.
    """
    A0 = np.asarray(A0, dtype=float)
    B0 = np.asarray(B0, dtype=float)
    I = np.eye(A0.shape[0])
    if np.abs(A0 @ A0 + I).max() > tol or np.abs(B0 @ B0 + I).max() > tol:
        raise NotUnit("A0 and B0 must square to -Id")
    for F in F_list:
        if np.abs(A0 @ F + F @ A0).max() > tol or np.abs(B0 @ F + F @ B0).max() > tol:
            raise NotAnticommuting("an F fails to anticommute with A0 or B0")
    E = -A0 @ B0
    # symmetric and skew parts: E = S + S*C
    S = 0.5 * (E + E.T)
    T, U = linalg.schur(E.astype(complex), output="complex")
    lam = np.diag(T)
    ang = np.angle(lam)
    half = np.where(np.abs(lam + 1) < 1e-8, 1.0 + 0j, np.exp(0.5j * ang))
    sqrtD = np.real(U @ np.diag(half) @ U.conj().T)
    D = sqrtD @ sqrtD
    S_hat = -D @ B0 @ A0
    res = {
        "conjugation": float(np.abs(sqrtD @ B0 @ sqrtD.T - S_hat @ A0).max()),
        "S_hat_symmetric": float(np.abs(S_hat - S_hat.T).max()),
        "S_hat_involution": float(np.abs(S_hat @ S_hat - I).max()),
        "S_hat_commutes": float(max([np.abs(S_hat @ A0 - A0 @ S_hat).max()]
                                    + [np.abs(S_hat @ F - F @ S_hat).max() for F in F_list])),
        "sqrtD_commutes": float(max([np.abs(sqrtD @ F - F @ sqrtD).max() for F in F_list], default=0.0)),
        "sqrtD_orthogonal": float(np.abs(sqrtD.T @ sqrtD - I).max()),
        "symmetric_part_commutes": float(np.abs(S @ (E - S) - (E - S) @ S).max()),
    }
    return UnitConjugator(sqrtD=sqrtD, S_hat=S_hat, D=D, residuals=res)


def quaternionic_conjugator(A, F, sigma, tol: float = STRUCT_TOL) -> np.ndarray:
    """Orthogonal Q with Q A Q^-1 = sigma A and Q F Q^-1 = F.

    A, F non-degenerate and anticommuting; sigma an involution commuting with
    both.  Q is the unit part of F on the -1 eigenspace of sigma and the
    identity elsewhere.
    """
    A = np.asarray(A, dtype=float)
    F = np.asarray(F, dtype=float)
    s = np.asarray(sigma, dtype=float)
    if np.abs(A @ F + F @ A).max() > tol:
        raise NotAnticommuting("A and F do not anticommute")
    if max(np.abs(s @ A - A @ s).max(), np.abs(s @ F - F @ s).max()) > tol:
        raise BadSigma("not commuting")
    _, F0 = rescale_to_unit(F)
    P_minus = 0.5 * (np.eye(len(s)) - s)
    return (np.eye(len(s)) - P_minus) + F0 @ P_minus


# --- spectral comparison ---------------------------------------------------------

@dataclass
class EquivalenceReport:
    passed: bool
    deviation: float
    n_samples: int


def verify_spectral_equivalence(s1: EndoSpace, s2: EndoSpace, C_map=None, n_samples: int = 50,
                                rng=None, tol: float = EIG_TOL) -> EquivalenceReport:
    """Compare singular values of J_Z and J'_{C(Z)} on random unit Z."""
    if s1.k != s2.k or s1.l != s2.l:
        raise DimensionMismatch(f"({s1.k},{s1.l}) vs ({s2.k},{s2.l})")
    rng = np.random.default_rng(rng)
    C = np.eye(s1.l) if C_map is None else np.asarray(C_map, dtype=float)
    dev = 0.0
    for _ in range(n_samples):
        Z = rng.standard_normal(s1.l)
        Z /= np.linalg.norm(Z)
        a = np.linalg.svd(s1.J(Z), compute_uv=False)
        b = np.linalg.svd(s2.J(C @ Z), compute_uv=False)
        dev = max(dev, float(np.abs(np.sort(a) - np.sort(b)).max()))
    return EquivalenceReport(passed=dev <= tol, deviation=dev, n_samples=n_samples)


def lie_closure_dimension(mats, tol: float = EIG_TOL) -> int:
    """Dimension of the matrix Lie algebra generated under commutators."""
    n = mats[0].shape[0]
    basis: list[np.ndarray] = []

    def add(m) -> bool:
        v = m.ravel()
        if basis:
            Bm = np.stack(basis, axis=1)
            v = v - Bm @ (Bm.T @ v)
            v = v - Bm @ (Bm.T @ v)
        nv = np.linalg.norm(v)
        if nv <= tol * max(1.0, np.linalg.norm(m)):
            return False
        basis.append(v / nv)
        return True

    frontier = [np.asarray(m, dtype=float) for m in mats if add(np.asarray(m, dtype=float))]
    gens = list(frontier)
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                c = x @ g - g @ x
                if add(c):
                    new.append(c)
        frontier = new
        if len(basis) > n * n:
            break
    return len(basis)


@dataclass
class NonconjugacyReport:
    verdict: str
    fingerprints: tuple
    differing: list


def _fingerprint(space: EndoSpace) -> dict:
    sq = sum(B @ B for B in space.basis)
    Hv = -sq
    Hz = np.array([[np.trace(Ba.T @ Bb) for Bb in space.basis] for Ba in space.basis])
    return {
        "lie_dimension": lie_closure_dimension(list(space.basis)),
        "sum_of_squares": np.sort(np.linalg.eigvalsh(0.5 * (sq + sq.T))),
        "H_v": np.sort(np.linalg.eigvalsh(Hv)),
        "H_z": np.sort(np.linalg.eigvalsh(Hz)),
    }


def nonconjugacy_certificate(s1: EndoSpace, s2: EndoSpace, tol: float = EIG_TOL) -> NonconjugacyReport:
    """Compare conjugation invariants; never claims conjugacy."""
    if s1.k != s2.k or s1.l != s2.l:
        raise DimensionMismatch(f"({s1.k},{s1.l}) vs ({s2.k},{s2.l})")
    f1, f2 = _fingerprint(s1.orthonormalized()), _fingerprint(s2.orthonormalized())
    diff = []
    for key in f1:
        a, b = np.atleast_1d(f1[key]), np.atleast_1d(f2[key])
        if a.shape != b.shape or np.abs(a - b).max() > tol * max(1.0, np.abs(a).max()):
            diff.append(key)
    return NonconjugacyReport("DISTINGUISHED" if diff else "INCONCLUSIVE", (f1, f2), diff)


def random_orthogonal(n: int, rng=None) -> np.ndarray:
    from scipy.stats import special_ortho_group
    rng = np.random.default_rng(rng)
    return special_ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
