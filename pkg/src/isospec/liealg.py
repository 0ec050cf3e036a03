"""Metric Lie algebras given by structure constants in an orthonormal basis.

Used as an independent route to the connection and curvature of left-invariant
metrics: Koszul formula for the connection, then the commutator formula
R(U,V)W = nabla_U nabla_V W - nabla_V nabla_U W - nabla_[U,V] W.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class MetricLieAlgebra:
    """C[i, j] = [e_i, e_j] expressed in the orthonormal basis e."""

    C: np.ndarray

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    def bracket(self, U, V) -> np.ndarray:
        return np.einsum("i,j,ijk->k", U, V, self.C)

    @cached_property
    def Gamma(self) -> np.ndarray:
        """Gamma[i, j] = nabla_{e_i} e_j by the Koszul formula."""
        C = self.C
        # <nabla_i e_j, e_k> = 1/2 (C_ijk - C_jki + C_kij)
        return 0.5 * (C - np.einsum("jki->ijk", C) + np.einsum("kij->ijk", C))

    def nabla(self, U, V) -> np.ndarray:
        return np.einsum("i,j,ijk->k", U, V, self.Gamma)

    @cached_property
    def R(self) -> np.ndarray:
        """R[i, j, k] = R(e_i, e_j) e_k."""
        G, C = self.Gamma, self.C
        # nabla_i (nabla_j e_k) = sum_m G[j,k,m] G[i,m]
        t1 = np.einsum("jkm,imn->ijkn", G, G)
        t2 = np.einsum("ikm,jmn->ijkn", G, G)
        t3 = np.einsum("ijm,mkn->ijkn", C, G)
        return t1 - t2 - t3

    def riemann(self, U, V, W) -> np.ndarray:
        return np.einsum("i,j,k,ijkn->n", U, V, W, self.R)

    def curvature_operator(self) -> np.ndarray:
        """Matrix <R(e_i, e_j) e_k, e_l> on the lexicographic basis i<j, k<l."""
        return curvature_operator_from_tensor(self.R)

    def ricci_matrix(self) -> np.ndarray:
        """Ric(e_j, e_k) = sum_i <R(e_i, e_j) e_k, e_i>."""
        return np.einsum("ijki->jk", self.R)


def pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def curvature_operator_from_tensor(R: np.ndarray) -> np.ndarray:
    n = R.shape[0]
    P = pairs(n)
    idx_i = np.array([p[0] for p in P])
    idx_j = np.array([p[1] for p in P])
    return R[idx_i[:, None], idx_j[:, None], idx_i[None, :], idx_j[None, :]]
