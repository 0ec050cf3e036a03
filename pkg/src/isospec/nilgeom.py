"""The 2-step nilpotent metric Lie group attached to an endomorphism space.

Algebra vectors are flat arrays of length k + l: the X-part first, then the
Z-part.  All formulas are pointwise and closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .endospace import DimensionMismatch, EndoSpace
from .liealg import MetricLieAlgebra, curvature_operator_from_tensor


@dataclass(frozen=True, eq=False)
class MetricGroup:
    space: EndoSpace

    def __post_init__(self):
        object.__setattr__(self, "space", self.space.orthonormalized())

    @property
    def k(self) -> int:
        return self.space.k

    @property
    def l(self) -> int:
        return self.space.l

    @property
    def n(self) -> int:
        return self.k + self.l

    def J(self, Z) -> np.ndarray:
        return self.space.J(Z)

    def split(self, U):
        U = np.asarray(U, dtype=float)
        return U[: self.k], U[self.k:]

    def join(self, x=None, z=None) -> np.ndarray:
        x = np.zeros(self.k) if x is None else np.asarray(x, dtype=float)
        z = np.zeros(self.l) if z is None else np.asarray(z, dtype=float)
        return np.concatenate([x, z])

    def zbracket(self, X, Y) -> np.ndarray:
        """Z-vector [X, Y] with components <J_a X, Y>."""
        return np.einsum("aij,j,i->a", self.space.basis, X, Y)

    @cached_property
    def algebra(self) -> MetricLieAlgebra:
        n, k = self.n, self.k
        C = np.zeros((n, n, n))
        C[:k, :k, k:] = np.einsum("aji->ija", self.space.basis)
        return MetricLieAlgebra(C)


@dataclass(frozen=True)
class AlgVector:
    x: np.ndarray
    z: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.x, float), np.asarray(self.z, float)])


def _flat(U) -> np.ndarray:
    return U.flat if isinstance(U, AlgVector) else np.asarray(U, dtype=float)


def bracket(g: MetricGroup, U, V) -> np.ndarray:
    (X1, _), (X2, _) = g.split(_flat(U)), g.split(_flat(V))
    return g.join(z=g.zbracket(X1, X2))


def invariant_frame(g: MetricGroup, X, Z=None) -> np.ndarray:
    """Columns are the left-invariant fields X_1..X_k, Z_1..Z_l in (x, z) coordinates."""
    X = np.asarray(X, dtype=float)
    F = np.eye(g.n)
    # X_i = d_i + 1/2 sum_a <J_a X, E_i> d_a
    F[g.k:, : g.k] = 0.5 * np.einsum("aij,j->ai", g.space.basis, X)
    return F


def coordinate_metric(g: MetricGroup, X) -> np.ndarray:
    """Left-invariant metric tensor in the (x, z) coordinates at a point with X-part X."""
    X = np.asarray(X, dtype=float)
    JX = np.einsum("aij,j->ai", g.space.basis, X)  # row a: J_a X
    G = np.eye(g.n)
    G[: g.k, : g.k] += 0.25 * JX.T @ JX
    G[: g.k, g.k:] = -0.5 * JX.T
    G[g.k:, : g.k] = -0.5 * JX
    return G


def nabla(g: MetricGroup, P, Q) -> np.ndarray:
    """Levi-Civita derivative of invariant fields, by the case table."""
    X1, Z1 = g.split(_flat(P))
    X2, Z2 = g.split(_flat(Q))
    x = -0.5 * g.J(Z2) @ X1 - 0.5 * g.J(Z1) @ X2
    z = 0.5 * g.zbracket(X1, X2)
    return g.join(x, z)


def riemann(g: MetricGroup, U, V, W) -> np.ndarray:
    """R(U, V) W assembled from the case formulas of the nilpotent curvature."""
    X1, Z1 = g.split(_flat(U))
    X2, Z2 = g.split(_flat(V))
    X3, Z3 = g.split(_flat(W))
    J, br = g.J, g.zbracket

    def R_xx_x(X, Y, Xs):
        return 0.5 * J(br(X, Y)) @ Xs - 0.25 * J(br(Y, Xs)) @ X + 0.25 * J(br(X, Xs)) @ Y

    def R_xx_z(X, Y, Z):
        return -0.25 * br(X, J(Z) @ Y) + 0.25 * br(Y, J(Z) @ X)

    def R_xz_x(X, Z, Y):
        return -0.25 * br(X, J(Z) @ Y)

    def R_xz_z(X, Z, Zs):
        return -0.25 * J(Z) @ J(Zs) @ X

    def R_zz_x(Z, Zs, X):
        return -0.25 * J(Zs) @ J(Z) @ X + 0.25 * J(Z) @ J(Zs) @ X

    x = R_xx_x(X1, X2, X3) + R_xz_z(X1, Z2, Z3) - R_xz_z(X2, Z1, Z3) + R_zz_x(Z1, Z2, X3)
    z = R_xx_z(X1, X2, Z3) + R_xz_x(X1, Z2, X3) - R_xz_x(X2, Z1, X3)
    return g.join(x, z)


def riemann_tensor(g: MetricGroup) -> np.ndarray:
    """R[i, j, k] = R(e_i, e_j) e_k from the case formulas."""
    E = np.eye(g.n)
    R = np.zeros((g.n,) * 4)
    for i in range(g.n):
        for j in range(i + 1, g.n):
            for k in range(g.n):
                R[i, j, k] = riemann(g, E[i], E[j], E[k])
                R[j, i, k] = -R[i, j, k]
    return R


def curvature_operator(g: MetricGroup) -> np.ndarray:
    """Symmetric matrix <R(e_i, e_j) e_k, e_l> on 2-vectors, i<j and k<l lexicographic."""
    return curvature_operator_from_tensor(riemann_tensor(g))


def sectional_curvature(g: MetricGroup, U, V) -> float:
    U, V = _flat(U), _flat(V)
    den = U @ U * (V @ V) - (U @ V) ** 2
    return float(riemann(g, U, V, V) @ U / den)


def H_tensors(g: MetricGroup) -> tuple[np.ndarray, np.ndarray]:
    """H_v(X, X*) = sum_a <J_a X, J_a X*>, H_z(Z, Z*) = sum_i <J_Z E_i, J_Z* E_i>."""
    B = g.space.basis
    Hv = np.einsum("aji,ajk->ik", B, B)
    Hz = np.einsum("aij,bij->ab", B, B)
    return Hv, Hz


def ricci_matrix(g: MetricGroup) -> np.ndarray:
    Hv, Hz = H_tensors(g)
    Ric = np.zeros((g.n, g.n))
    Ric[: g.k, : g.k] = -0.5 * Hv
    Ric[g.k:, g.k:] = 0.25 * Hz
    return Ric


def ricci(g: MetricGroup, U, V) -> float:
    return float(_flat(U) @ ricci_matrix(g) @ _flat(V))


@dataclass
class IsometryReport:
    passed: bool
    residual: float


def verify_isometry(g1: MetricGroup, g2: MetricGroup, pair, tol: float = 1e-9) -> IsometryReport:
    """Check A J_Z A^-1 = J'_{C(Z)} on basis vectors Z."""
    if (g1.k, g1.l) != (g2.k, g2.l):
        raise DimensionMismatch(f"({g1.k},{g1.l}) vs ({g2.k},{g2.l})")
    A, C = (np.asarray(m, dtype=float) for m in pair)
    res = 0.0
    for a, Za in enumerate(np.eye(g1.l)):
        res = max(res, float(np.abs(A @ g1.J(Za) @ A.T - g2.J(C @ Za)).max()))
    for M in (A, C):
        res = max(res, float(np.abs(M.T @ M - np.eye(len(M))).max()))
    return IsometryReport(res <= tol, res)


@dataclass(frozen=True)
class ConjugatorPair:
    A_map: np.ndarray
    C_map: np.ndarray

    def __iter__(self):
        return iter((self.A_map, self.C_map))
