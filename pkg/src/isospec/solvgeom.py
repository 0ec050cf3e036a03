"""Solvable extension SN of a 2-step nilpotent group.

Algebra vectors have length k + l + 1: X-part, Z-part, then the T-component.
Points of the half-space model are (x, z, t) with t > 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import nilgeom
from .liealg import MetricLieAlgebra, curvature_operator_from_tensor, pairs
from .nilgeom import MetricGroup
from .spectra import SpectrumReport, compare_spectra, eigs_sym


class BlockNotInvariant(RuntimeError):
    def __init__(self, residual: float):
        super().__init__(f"subspace not invariant (residual {residual:.3g})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class SolvGroup:
    nil: MetricGroup
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("scaling factor c must be positive")

    @property
    def k(self) -> int:
        return self.nil.k

    @property
    def l(self) -> int:
        return self.nil.l

    @property
    def n(self) -> int:
        return self.nil.n + 1

    def split(self, U):
        U = np.asarray(U, dtype=float)
        return U[: self.k], U[self.k: self.k + self.l], float(U[-1])

    def join(self, x=None, z=None, t=0.0) -> np.ndarray:
        return np.concatenate([self.nil.join(x, z), [t]])

    @cached_property
    def algebra(self) -> MetricLieAlgebra:
        n, k = self.n, self.k
        C = np.zeros((n, n, n))
        C[: n - 1, : n - 1, : n - 1] = self.nil.algebra.C
        for i in range(n - 1):
            w = 0.5 * self.c if i < k else self.c
            C[n - 1, i, i] = w
            C[i, n - 1, i] = -w
        return MetricLieAlgebra(C)


@dataclass(frozen=True)
class SolvPoint:
    x: np.ndarray
    z: np.ndarray
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")


def multiply(g: SolvGroup, p: SolvPoint, q: SolvPoint) -> SolvPoint:
    """(X + t^1/2 X', Z + t Z' + 1/2 t^1/2 [X, X'], t t')."""
    s = np.sqrt(p.t)
    x = np.asarray(p.x, float) + s * np.asarray(q.x, float)
    z = np.asarray(p.z, float) + p.t * np.asarray(q.z, float) + 0.5 * s * g.nil.zbracket(p.x, q.x)
    return SolvPoint(x, z, p.t * q.t)


def inverse(g: SolvGroup, p: SolvPoint) -> SolvPoint:
    return SolvPoint(-np.asarray(p.x, float) / np.sqrt(p.t), -np.asarray(p.z, float) / p.t, 1.0 / p.t)


def identity(g: SolvGroup) -> SolvPoint:
    return SolvPoint(np.zeros(g.k), np.zeros(g.l), 1.0)


def solv_frame(g: SolvGroup, p: SolvPoint) -> np.ndarray:
    """Columns Y_i = t^1/2 X_i, V_a = t Z_a, T = c t d_t in (x, z, t) coordinates."""
    F = np.zeros((g.n, g.n))
    F[:-1, :-1] = nilgeom.invariant_frame(g.nil, p.x)
    F[:, : g.k] *= np.sqrt(p.t)
    F[:, g.k: g.k + g.l] *= p.t
    F[-1, -1] = g.c * p.t
    return F


def coordinate_metric(g: SolvGroup, p: SolvPoint) -> np.ndarray:
    F = solv_frame(g, p)
    Finv = np.linalg.inv(F)
    return Finv.T @ Finv


def nabla_c(g: SolvGroup, P, Q) -> np.ndarray:
    """Covariant derivative of invariant fields by the solvable case table."""
    X1, Z1, T1 = g.split(P)
    X2, Z2, T2 = g.split(Q)
    c = g.c
    out = np.zeros(g.n)
    out[:-1] = nilgeom.nabla(g.nil, g.nil.join(X1, Z1), g.nil.join(X2, Z2))
    out[-1] = c * (0.5 * X1 @ X2 + Z1 @ Z2)
    # nabla_X T = -(c/2) X, nabla_Z T = -c Z; nabla_T = 0
    out[: g.k] += -0.5 * c * T2 * X1
    out[g.k: g.k + g.l] += -c * T2 * Z1
    return out


def _wedge(U, V) -> np.ndarray:
    """Coordinates of U ^ V on the lexicographic basis e_i ^ e_j, i < j."""
    n = len(U)
    W = np.outer(U, V) - np.outer(V, U)
    iu = np.triu_indices(n, 1)
    return W[iu]


def curvature_operator_c(g: SolvGroup) -> np.ndarray:
    """Curvature operator on 2-vectors of s from the solvable case formulas.

    Entry ((i,j),(k,l)) is <R(e_i, e_j) e_k, e_l>, lexicographic i < j.
    """
    n, k, l, c = g.n, g.k, g.l, g.c
    E = np.eye(n)
    RN = nilgeom.riemann_tensor(g.nil)
    n0 = n - 1
    T = E[-1]

    def nilpart(i, j):
        W = np.zeros((n, n))
        if i < n0 and j < n0:
            W[:n0, :n0] = RN[i, j]
        return W[np.triu_indices(n, 1)]

    def xvec(v):
        return np.concatenate([v, np.zeros(l + 1)])

    def zvec(v):
        return np.concatenate([np.zeros(k), v, [0.0]])

    def J(zc):
        return g.nil.J(zc)

    rows = []
    for i, j in pairs(n):
        Ui, Uj = E[i], E[j]
        kind = ("x" if i < k else "z" if i < n0 else "t") + ("x" if j < k else "z" if j < n0 else "t")
        if kind == "xx":
            # R_c(X* ^ X) with X* = e_i, X = e_j
            br = g.nil.zbracket(Ui[:k], Uj[:k])
            r = nilpart(i, j) - 0.5 * c * _wedge(zvec(br), T) + 0.25 * c * c * _wedge(Ui, Uj)
        elif kind == "xz":
            Z = Uj[k:n0]
            r = nilpart(i, j) - 0.25 * c * _wedge(xvec(J(Z) @ Ui[:k]), T) + 0.5 * c * c * _wedge(Ui, Uj)
        elif kind == "zz":
            r = nilpart(i, j) + c * c * _wedge(Ui, Uj)
        elif kind in ("xt", "zt"):
            X, Z = Ui[:k], Ui[k:n0]
            r = np.zeros(n * (n - 1) // 2)
            # the J_a X ^ e_a coefficient is c/4; the printed c/2 breaks symmetry with the X ^ Z row
            for a in range(l):
                r += 0.25 * c * _wedge(xvec(J(np.eye(l)[a]) @ X), zvec(np.eye(l)[a]))
            JZ = J(Z)
            for p, q in pairs(k):
                r -= 0.5 * c * JZ[q, p] * _wedge(E[p], E[q])
            r += c * c * _wedge(xvec(0.25 * X) + zvec(Z), T)
        else:
            raise AssertionError(kind)
        rows.append(r)
    return np.array(rows)


def riemann_tensor_c(g: SolvGroup) -> np.ndarray:
    """Independent route: R(e_i, e_j) e_k from the connection commutator."""
    return g.algebra.R


def curvature_operator_oracle(g: SolvGroup) -> np.ndarray:
    return curvature_operator_from_tensor(g.algebra.R)


def ricci_matrix_c(g: SolvGroup) -> np.ndarray:
    """Ricci matrix in the orthonormal basis (X, Z, T) by the block shifts."""
    c, k, l = g.c, g.k, g.l
    R = np.zeros((g.n, g.n))
    R[:-1, :-1] = nilgeom.ricci_matrix(g.nil)
    R[:k, :k] -= c * c * (k / 4 + l / 2) * np.eye(k)
    R[k:k + l, k:k + l] -= c * c * (k / 2 + l) * np.eye(l)
    R[-1, -1] = -c * c * (k / 4 + l)
    return R


def ricci_c(g: SolvGroup, U, V) -> float:
    return float(np.asarray(U, float) @ ricci_matrix_c(g) @ np.asarray(V, float))


def laplacian_coefficients(g: SolvGroup, p: SolvPoint) -> dict:
    """Coefficients of the Laplacian at p in (x, z, t) coordinates.

    The second-order part is the inverse metric; the only first-order term
    is c^2 (1 - k/2 - l) t d_t.
    """
    F = solv_frame(g, p)
    return {
        "second_order": F @ F.T,
        "first_order": np.concatenate([np.zeros(g.k + g.l), [g.c ** 2 * (1 - g.k / 2 - g.l) * p.t]]),
    }


# --- isotonality -----------------------------------------------------------------

def copy_structure(space) -> tuple[int, int, int]:
    """(n, a, b) from the labels written by the (a, b) constructions."""
    a = b = None
    for lab in space.labels:
        m = re.fullmatch(r"([ab])=(\d+)", str(lab))
        if m:
            if m.group(1) == "a":
                a = int(m.group(2))
            else:
                b = int(m.group(2))
    if a is None or b is None:
        raise ValueError("space carries no (a, b) copy structure")
    return space.k // (a + b), a, b


@dataclass
class IsotonalReport:
    blocks1: dict
    blocks2: dict
    invariance_residual: float
    total1: SpectrumReport
    total2: SpectrumReport
    set_verdict: object
    multiset_verdict: object
    block_verdicts: dict = field(default_factory=dict)
    reflection: dict = field(default_factory=dict)
    split_G_residual: float = 0.0


def _blocks(group, n_copy: int, a: int, b: int) -> dict[str, list[int]]:
    """Index lists (into the lexicographic pair basis) of the invariant subspaces.

    In the solvable case v ^ z is coupled to n ^ t through J_Z X ^ T, so G is
    merged with Dg + (n ^ t) into the block "DgG".
    """
    solv = isinstance(group, SolvGroup)
    k, l = group.k, group.l

    def copy_of(i):
        return i // n_copy

    def part(i):
        if i < k:
            return "a" if copy_of(i) < a else "b"
        if i < k + l:
            return "z"
        return "t"

    out: dict[str, list[int]] = {"F": [], "DgPerp": [], "G": [], "Dg": []}
    for idx, (i, j) in enumerate(pairs(group.n)):
        pi_, pj = part(i), part(j)
        if {pi_, pj} == {"a", "b"}:
            out["F"].append(idx)
        elif pi_ in "ab" and pj in "ab":
            out["Dg" if copy_of(i) == copy_of(j) else "DgPerp"].append(idx)
        elif pi_ in "ab" and pj == "z":
            out["G"].append(idx)
        else:
            out["Dg"].append(idx)
    if solv:
        out["DgG"] = sorted(out.pop("G") + out.pop("Dg"))
    return out


def _mixed_boxes(group, n_copy, a, b) -> tuple[list[list[int]], list[list[int]]]:
    """Boxes v_r ^ v_s (r < s): those in F and those in Dg-perp."""
    k = group.k
    P = pairs(group.n)
    F, Dp = [], []
    for r in range(a + b):
        for s in range(r + 1, a + b):
            idx = [m for m, (i, j) in enumerate(P) if i < k and j < k
                   and {i // n_copy, j // n_copy} == {r, s}]
            (F if (r < a) != (s < a) else Dp).append(idx)
    return F, Dp


def _off_block(M, ids) -> float:
    others = np.setdiff1d(np.arange(len(M)), ids)
    return float(np.abs(M[np.ix_(ids, others)]).max(initial=0.0))


def isotonal_decomposition(g1, g2, tol: float = 1e-9, cluster_tol: float = 1e-7) -> IsotonalReport:
    """Block spectra of the curvature operators on the invariant subspaces."""
    res = 0.0
    split_g = 0.0
    blocks, totals, mixed = [], [], []
    for g in (g1, g2):
        solv = isinstance(g, SolvGroup)
        space = g.nil.space if solv else g.space
        n_copy, a, b = copy_structure(space)
        M = curvature_operator_c(g) if solv else nilgeom.curvature_operator(g)
        M = 0.5 * (M + M.T)
        idx = _blocks(g, n_copy, a, b)
        spectra = {}
        for key, ids in idx.items():
            ids = np.array(ids, dtype=int)
            if len(ids) == 0:
                continue
            res = max(res, _off_block(M, ids))
            spectra[key] = eigs_sym(M[np.ix_(ids, ids)], tol=cluster_tol, label=key)
        if solv:
            G = [m for m, (i, j) in enumerate(pairs(g.n)) if i < g.k <= j < g.k + g.l]
            split_g = max(split_g, _off_block(M, np.array(G)))
        Fb, Db = _mixed_boxes(g, n_copy, a, b)
        for box in Fb + Db:
            res = max(res, _off_block(M, np.array(box)))
        mixed.append(([eigs_sym(M[np.ix_(bx, bx)]).raw for bx in Fb],
                      [eigs_sym(M[np.ix_(bx, bx)]).raw for bx in Db]))
        blocks.append(spectra)
        totals.append(eigs_sym(M, tol=cluster_tol, label="total"))
    if res > tol:
        raise BlockNotInvariant(res)
    block_verdicts = {key: compare_spectra(blocks[0][key], blocks[1][key], "set")
                      for key in blocks[0] if key in blocks[1]}
    return IsotonalReport(
        blocks1=blocks[0], blocks2=blocks[1], invariance_residual=res,
        total1=totals[0], total2=totals[1],
        set_verdict=compare_spectra(totals[0], totals[1], "set", tol=1e-8),
        multiset_verdict=compare_spectra(totals[0], totals[1], "multiset", tol=1e-8),
        block_verdicts=block_verdicts,
        reflection=_reflection_test(mixed),
        split_G_residual=split_g,
    )


def _reflection_test(mixed) -> dict:
    """Least-squares centre q with F-box spectrum q + lambda and Dg-perp-box spectrum q - lambda.

    Reports the fitted centre, its residual, and the residual of reflecting
    about 0 instead.
    """
    Fs = [f for m in mixed for f in m[0]]
    Ds = [d for m in mixed for d in m[1]]
    if not Fs or not Ds:
        return {}
    f = np.sort(Fs[0])
    d = np.sort(Ds[0])[::-1]
    center = float(np.mean(f + d) / 2)
    return {"center": center,
            "residual": float(np.abs(f + d - 2 * center).max()),
            "zero_center_residual": float(np.abs(f + d).max()),
            "box_consistency": float(max(np.abs(np.sort(x) - f).max() for x in Fs)
                                     + max(np.abs(np.sort(x)[::-1] - d).max() for x in Ds))}
