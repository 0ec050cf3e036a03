"""Polynomials in k real variables with complex coefficients.

Two representations are used.  GradedPoly is a sparse exponent -> coefficient
map for user-facing values.  MonomialSpace holds, per degree, the ordered list
of monomials and the sparse matrices of multiplication by x_j, the partial
derivatives, the Laplacian and the directional derivatives D_F, acting on dense
coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb, lgamma, pi

import numpy as np
from scipy import sparse

PRUNE = 1e-14


class NotHomogeneous(ValueError):
    pass


@dataclass
class GradedPoly:
    """Sparse polynomial: exponent tuple -> complex coefficient."""

    k: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {tuple(int(e) for e in m): complex(c) for m, c in self.coeffs.items()
                       if abs(c) > PRUNE}
        for m in self.coeffs:
            if len(m) != self.k:
                raise ValueError("exponent length does not match k")

    @classmethod
    def zero(cls, k: int) -> "GradedPoly":
        return cls(k, {})

    @classmethod
    def constant(cls, k: int, c: complex) -> "GradedPoly":
        return cls(k, {(0,) * k: c})

    @classmethod
    def linear(cls, w) -> "GradedPoly":
        w = np.asarray(w)
        k = len(w)
        return cls(k, {tuple(int(i == j) for i in range(k)): w[j] for j in range(k)})

    @classmethod
    def norm_squared(cls, k: int) -> "GradedPoly":
        return cls(k, {tuple(2 * int(i == j) for i in range(k)): 1.0 for j in range(k)})

    @property
    def degrees(self) -> list[int]:
        return sorted({sum(m) for m in self.coeffs})

    @property
    def degree(self) -> int:
        return max(self.degrees, default=0)

    def component(self, d: int) -> "GradedPoly":
        return GradedPoly(self.k, {m: c for m, c in self.coeffs.items() if sum(m) == d})

    def is_homogeneous(self) -> bool:
        return len(self.degrees) <= 1

    def __add__(self, other: "GradedPoly") -> "GradedPoly":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return GradedPoly(self.k, out)

    def __neg__(self) -> "GradedPoly":
        return GradedPoly(self.k, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other: "GradedPoly") -> "GradedPoly":
        return self + (-other)

    def __mul__(self, other) -> "GradedPoly":
        if not isinstance(other, GradedPoly):
            return GradedPoly(self.k, {m: c * other for m, c in self.coeffs.items()})
        out: dict = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return GradedPoly(self.k, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "GradedPoly":
        out = GradedPoly.constant(self.k, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> "GradedPoly":
        return GradedPoly(self.k, {m: np.conj(c) for m, c in self.coeffs.items()})

    def __call__(self, X) -> complex:
        X = np.asarray(X, dtype=complex)
        return complex(sum(c * np.prod(X ** np.array(m)) for m, c in self.coeffs.items()))

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def diff(self, j: int) -> "GradedPoly":
        out = {}
        for m, c in self.coeffs.items():
            if m[j]:
                mm = list(m)
                mm[j] -= 1
                out[tuple(mm)] = c * m[j]
        return GradedPoly(self.k, out)

    def laplacian(self) -> "GradedPoly":
        out = GradedPoly.zero(self.k)
        for j in range(self.k):
            out = out + self.diff(j).diff(j)
        return out

    def to_dense(self, d: int) -> np.ndarray:
        ms = monomial_space(self.k)
        idx = ms.index(d)
        v = np.zeros(len(ms.monomials(d)), dtype=complex)
        for m, c in self.coeffs.items():
            if sum(m) != d:
                raise NotHomogeneous(f"term of degree {sum(m)} in degree-{d} request")
            v[idx[m]] = c
        return v

    @classmethod
    def from_dense(cls, k: int, d: int, v) -> "GradedPoly":
        mons = monomial_space(k).monomials(d)
        return cls(k, {m: c for m, c in zip(mons, np.asarray(v)) if abs(c) > PRUNE})


class MonomialSpace:
    """Cached monomial bases and sparse operator matrices for fixed k."""

    def __init__(self, k: int):
        self.k = k
        self._mons: dict[int, list[tuple]] = {}
        self._index: dict[int, dict] = {}
        self._cache: dict = {}

    def monomials(self, d: int) -> list[tuple]:
        if d < 0:
            return []
        if d not in self._mons:
            mons = []
            for combo in combinations_with_replacement(range(self.k), d):
                e = [0] * self.k
                for i in combo:
                    e[i] += 1
                mons.append(tuple(e))
            self._mons[d] = mons
        return self._mons[d]

    def index(self, d: int) -> dict:
        if d not in self._index:
            self._index[d] = {m: i for i, m in enumerate(self.monomials(d))}
        return self._index[d]

    def dim(self, d: int) -> int:
        return comb(self.k + d - 1, d) if d >= 0 else 0

    def exponents(self, d: int) -> np.ndarray:
        return np.array(self.monomials(d), dtype=int).reshape(-1, self.k)

    def mulx(self, j: int, d: int) -> sparse.csr_matrix:
        """Multiplication by x_j: degree d -> d + 1."""
        key = ("mul", j, d)
        if key not in self._cache:
            idx = self.index(d + 1)
            rows, cols = [], []
            for c, m in enumerate(self.monomials(d)):
                mm = list(m)
                mm[j] += 1
                rows.append(idx[tuple(mm)])
                cols.append(c)
            self._cache[key] = sparse.csr_matrix(
                (np.ones(len(rows)), (rows, cols)), shape=(self.dim(d + 1), self.dim(d)))
        return self._cache[key]

    def dx(self, j: int, d: int) -> sparse.csr_matrix:
        """Partial derivative in x_j: degree d -> d - 1."""
        key = ("dx", j, d)
        if key not in self._cache:
            if d == 0:
                self._cache[key] = sparse.csr_matrix((0, 1))
            else:
                idx = self.index(d - 1)
                rows, cols, vals = [], [], []
                for c, m in enumerate(self.monomials(d)):
                    if m[j]:
                        mm = list(m)
                        mm[j] -= 1
                        rows.append(idx[tuple(mm)])
                        cols.append(c)
                        vals.append(m[j])
                self._cache[key] = sparse.csr_matrix(
                    (vals, (rows, cols)), shape=(self.dim(d - 1), self.dim(d)))
        return self._cache[key]

    def lap(self, d: int) -> sparse.csr_matrix:
        """Euclidean Laplacian: degree d -> d - 2."""
        key = ("lap", d)
        if key not in self._cache:
            if d < 2:
                self._cache[key] = sparse.csr_matrix((max(self.dim(d - 2), 0), self.dim(d)))
            else:
                self._cache[key] = sum(self.dx(j, d - 1) @ self.dx(j, d) for j in range(self.k)).tocsr()
        return self._cache[key]

    def norm2(self, d: int) -> sparse.csr_matrix:
        """Multiplication by |X|^2: degree d -> d + 2."""
        key = ("norm2", d)
        if key not in self._cache:
            self._cache[key] = sum(self.mulx(j, d + 1) @ self.mulx(j, d) for j in range(self.k)).tocsr()
        return self._cache[key]

    def directional(self, F, d: int) -> sparse.csr_matrix:
        """D_F: p -> sum_i (F X)_i d_i p, degree preserving."""
        F = np.asarray(F)
        out = sparse.csr_matrix((self.dim(d), self.dim(d)), dtype=F.dtype)
        if d == 0:
            return out
        for i in range(self.k):
            for j in range(self.k):
                if F[i, j] != 0:
                    out = out + F[i, j] * (self.mulx(j, d - 1) @ self.dx(i, d))
        return out.tocsr()

    def multiply_quadratic(self, S, d: int) -> sparse.csr_matrix:
        """Multiplication by X^T S X for symmetric S: degree d -> d + 2."""
        S = np.asarray(S)
        out = sparse.csr_matrix((self.dim(d + 2), self.dim(d)), dtype=S.dtype)
        for i in range(self.k):
            for j in range(self.k):
                if S[i, j] != 0:
                    out = out + S[i, j] * (self.mulx(i, d + 1) @ self.mulx(j, d))
        return out.tocsr()

    def substitution(self, R, d: int) -> np.ndarray:
        """Dense matrix of p -> p(R X) on degree d, built by x^a = x_i x^(a - e_i)."""
        R = np.asarray(R)
        if d == 0:
            return np.ones((1, 1), dtype=R.dtype)
        prev = self.substitution(R, d - 1)
        lin = [sum(R[i, j] * self.mulx(j, d - 1) for j in range(self.k)) for i in range(self.k)]
        idx = self.index(d - 1)
        out = np.zeros((self.dim(d), self.dim(d)), dtype=np.result_type(R, float))
        for c, m in enumerate(self.monomials(d)):
            i = next(t for t, e in enumerate(m) if e)
            mm = list(m)
            mm[i] -= 1
            out[:, c] = lin[i] @ prev[:, idx[tuple(mm)]]
        return out

    def fischer_weights(self, d: int) -> np.ndarray:
        """alpha! for each monomial; the Fischer product is diagonal with these weights."""
        from scipy.special import factorial
        return np.prod(factorial(self.exponents(d)), axis=1)

    def sphere_moments(self, d: int) -> np.ndarray:
        """Integral of x^alpha over the unit sphere for each degree-d monomial."""
        E = self.exponents(d)
        return sphere_moment(E, self.k)


@lru_cache(maxsize=None)
def monomial_space(k: int) -> MonomialSpace:
    return MonomialSpace(k)


def sphere_moment(E, k: int) -> np.ndarray:
    """Surface integral of prod x_i^{e_i} over S^{k-1}: 2 prod G((e_i+1)/2) / G((|e|+k)/2), zero for odd e_i."""
    from scipy.special import gammaln
    E = np.atleast_2d(np.asarray(E))
    even = np.all(E % 2 == 0, axis=1)
    logv = np.log(2.0) + gammaln((E + 1) / 2).sum(axis=1) - gammaln((E.sum(axis=1) + k) / 2)
    return np.where(even, np.exp(logv), 0.0)


def sphere_area(k: int) -> float:
    return float(2 * np.exp(k / 2 * np.log(pi) - lgamma(k / 2)))


def sphere_inner(p: GradedPoly, q: GradedPoly) -> complex:
    """Integral of p * conj(q) over the unit sphere, by exact moments."""
    total = 0j
    for m1, c1 in p.coeffs.items():
        for m2, c2 in q.coeffs.items():
            e = np.array(m1) + np.array(m2)
            total += c1 * np.conj(c2) * sphere_moment(e[None, :], p.k)[0]
    return total
