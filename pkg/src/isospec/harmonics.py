"""Spherical harmonics on the X-space and the intertwining operators.

Homogeneous polynomials are dense coefficient vectors over the monomials of
a MonomialSpace.  Harmonic spaces H^(q) carry a real basis orthonormal for
the surface L2 product of the unit sphere; operators are returned as matrices
in those bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
from scipy import linalg

from .endospace import NotUnit, _complex_structure_basis
from .polys import GradedPoly, MonomialSpace, NotHomogeneous, monomial_space, sphere_area
from .spectra import conjugation_residual

UNIT_TOL = 1e-10


class UnexpectedEigenvalue(RuntimeError):
    pass


class SingularTruncation(ValueError):
    pass


class UnsupportedPair(ValueError):
    pass


def harmonic_dimension(k: int, q: int) -> int:
    return comb(k + q - 1, q) - (comb(k + q - 3, q - 2) if q >= 2 else 0)


def _check_unit(A0) -> np.ndarray:
    A0 = np.asarray(A0, dtype=float)
    if np.abs(A0 @ A0 + np.eye(len(A0))).max() > UNIT_TOL or np.abs(A0 + A0.T).max() > UNIT_TOL:
        raise NotUnit("A0 is not a unit skew endomorphism")
    return A0


# --- Theta calculus ---------------------------------------------------------------

def theta(Q, A0) -> GradedPoly:
    """Theta_Q(X) = <Q + i A0 Q, X>."""
    A0 = _check_unit(A0)
    Q = np.asarray(Q, dtype=float)
    return GradedPoly.linear(Q + 1j * (A0 @ Q))


def theta_bar(Q, A0) -> GradedPoly:
    return theta(Q, A0).conj()


def d_op_apply(F, p: GradedPoly) -> GradedPoly:
    """Directional derivative of p along the linear field X -> F X."""
    F = np.asarray(F)
    out = GradedPoly.zero(p.k)
    for i in range(p.k):
        row = GradedPoly.linear(F[i])
        out = out + row * p.diff(i)
    return out


def laplacian(p: GradedPoly) -> GradedPoly:
    return p.laplacian()


# --- harmonic projection ------------------------------------------------------------

def recursion_coefficients(k: int, r: int) -> np.ndarray:
    """B_0 = 1, 2s(k + 2r - 2s - 2) B_s + B_{s-1} = 0."""
    B = [1.0]
    for s in range(1, r // 2 + 1):
        B.append(-B[-1] / (2 * s * (k + 2 * r - 2 * s - 2)))
    return np.array(B)


def printed_recursion_coefficients(r: int) -> np.ndarray:
    """The dimension-free recursion 2s(2(s + r) - 1) B_s + B_{s-1} = 0, kept for comparison."""
    B = [1.0]
    for s in range(1, r // 2 + 1):
        B.append(-B[-1] / (2 * s * (2 * (s + r) - 1)))
    return np.array(B)


def _project_dense(ms: MonomialSpace, v: np.ndarray, r: int, B: np.ndarray) -> np.ndarray:
    out = B[0] * v
    lap = v
    for s in range(1, len(B)):
        lap = ms.lap(r - 2 * s + 2) @ lap
        term = lap
        for j in range(s):
            term = ms.norm2(r - 2 * s + 2 * j) @ term
        out = out + B[s] * term
    return out


def harmonic_project(p: GradedPoly, coefficients=None) -> GradedPoly:
    """h_(r)(p) = sum_s B_s |X|^{2s} Delta^s p for homogeneous p of degree r."""
    if not p.is_homogeneous():
        raise NotHomogeneous("harmonic projection needs a homogeneous polynomial")
    r = p.degree
    B = recursion_coefficients(p.k, r) if coefficients is None else np.asarray(coefficients)
    ms = monomial_space(p.k)
    return GradedPoly.from_dense(p.k, r, _project_dense(ms, p.to_dense(r), r, B))


def harmonic_project_dense(k: int, v, r: int) -> np.ndarray:
    return _project_dense(monomial_space(k), np.asarray(v), r, recursion_coefficients(k, r))


def _lap_power(ms: MonomialSpace, v: np.ndarray, d: int, j: int) -> np.ndarray:
    for s in range(j):
        v = ms.lap(d - 2 * s) @ v
    return v


def _cjj(k: int, m: int, j: int) -> float:
    """Delta^j (|X|^{2j} h) = c h for h harmonic of degree m."""
    return float(np.prod([2 * s * (2 * s + 2 * m + k - 2) for s in range(1, j + 1)]))


def spherical_components(k: int, v, d: int) -> dict[int, np.ndarray]:
    """Harmonic h_m with p = sum_j |X|^{2j} h_{d-2j}, as dense vectors keyed by m."""
    ms = monomial_space(k)
    v = np.asarray(v)
    out = {}
    for j in range(d // 2 + 1):
        m = d - 2 * j
        out[m] = harmonic_project_dense(k, _lap_power(ms, v, d, j), m) / _cjj(k, m, j)
    return out


def T_apply(p: GradedPoly) -> dict[int, GradedPoly]:
    """Decompose a homogeneous polynomial, viewed on the sphere, into harmonics per degree."""
    if not p.is_homogeneous():
        raise NotHomogeneous("T_apply needs a homogeneous lift")
    r = p.degree
    return {m: GradedPoly.from_dense(p.k, m, h) for m, h in spherical_components(p.k, p.to_dense(r), r).items()}


def T_invert(parts: dict[int, GradedPoly], r: int) -> GradedPoly:
    """Homogeneous degree-r lift sum |X|^{r-m} h_m of harmonic components."""
    if not parts:
        raise SingularTruncation("no components")
    k = next(iter(parts.values())).k
    out = GradedPoly.zero(k)
    for m, h in parts.items():
        if (r - m) % 2 or m > r:
            raise SingularTruncation(f"degree {m} does not fit in a degree-{r} lift")
        out = out + h * GradedPoly.norm_squared(k) ** ((r - m) // 2)
    return out


def sphere_restrict_equal(p: GradedPoly, q: GradedPoly, tol: float = 1e-9) -> float:
    """Distance between p and q as sphere functions, via their harmonic decompositions."""
    parts = []
    for f in (p, q):
        acc: dict[int, np.ndarray] = {}
        for d in f.degrees:
            for m, h in spherical_components(f.k, f.component(d).to_dense(d), d).items():
                acc[m] = acc.get(m, 0) + h
        parts.append(acc)
    keys = set(parts[0]) | set(parts[1])
    return max((float(np.abs(parts[0].get(m, 0) - parts[1].get(m, 0)).max(initial=0.0))
                for m in keys), default=0.0)


# --- harmonic bases -----------------------------------------------------------------

def fischer_to_sphere(k: int, q: int) -> float:
    """For harmonics of degree q: integral over S^{k-1} of |h|^2 = this factor times the Fischer norm."""
    return sphere_area(k) / float(np.prod([k + 2 * i for i in range(q)]))


@dataclass
class HarmonicBasis:
    """Sphere-orthonormal real bases of H^(q), q <= r_max, for X-dimension k."""

    k: int
    r_max: int
    _bases: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.ms = monomial_space(self.k)

    def basis(self, q: int) -> np.ndarray:
        """Columns: coefficient vectors of an orthonormal basis of H^(q)."""
        if q not in self._bases:
            w = np.sqrt(self.ms.fischer_weights(q))
            L = self.ms.lap(q).toarray() / w[None, :]
            if L.shape[0] == 0:
                Y = np.eye(len(w))
            else:
                Y = linalg.null_space(L, rcond=1e-10)
            B = Y / w[:, None] / np.sqrt(fischer_to_sphere(self.k, q))
            if B.shape[1] != harmonic_dimension(self.k, q):
                raise SingularTruncation(f"rank decision failed in degree {q}")
            self._bases[q] = B
        return self._bases[q]

    def dim(self, q: int) -> int:
        return self.basis(q).shape[1]

    def coords(self, h, q: int) -> np.ndarray:
        """Coordinates of a harmonic coefficient vector (or GradedPoly)."""
        if isinstance(h, GradedPoly):
            h = h.to_dense(q)
        w = self.ms.fischer_weights(q)
        return self.basis(q).T @ (fischer_to_sphere(self.k, q) * w * np.asarray(h))

    def poly(self, coords, q: int) -> np.ndarray:
        return self.basis(q) @ np.asarray(coords)

    def operator(self, M, q_in: int, q_out: int | None = None) -> np.ndarray:
        """Matrix of a polynomial map (dense or sparse on coefficient vectors) between harmonic spaces."""
        q_out = q_in if q_out is None else q_out
        w = self.ms.fischer_weights(q_out)
        return self.basis(q_out).T @ (fischer_to_sphere(self.k, q_out) * w[:, None] * (M @ self.basis(q_in)))


def zonal_kernel(q: int, Qu, basis: HarmonicBasis) -> GradedPoly:
    """H_(q)(Qu, .) = sum_j eta_j(Qu) eta_j(.)."""
    B = basis.basis(q)
    Qu = np.asarray(Qu, dtype=float)
    E = basis.ms.exponents(q)
    vals = np.prod(Qu[None, :] ** E, axis=1) @ B
    return GradedPoly.from_dense(basis.k, q, B @ vals)


@dataclass
class HqSplit:
    eigenvalues: np.ndarray
    spaces: dict
    residual: float


def d_op_matrix(basis: HarmonicBasis, F, q: int) -> np.ndarray:
    return basis.operator(basis.ms.directional(F, q), q)


def hq_split(q: int, A0, basis: HarmonicBasis, tol: float = 1e-9) -> HqSplit:
    """Eigen-splitting of H^(q) under D_{A0}; eigenvalue (2s - q) i labels H^(s, q-s)."""
    A0 = _check_unit(A0)
    D = d_op_matrix(basis, A0, q)
    w, V = linalg.eigh(1j * D)
    lam = -w  # D v = -i w v with w eigenvalue of i D, so D has eigenvalue i(-w)
    s_vals = (lam + q) / 2
    s_round = np.round(s_vals)
    res = float(np.abs(s_vals - s_round).max(initial=0.0)) * 2
    if res > tol:
        raise UnexpectedEigenvalue(f"eigenvalue off the (2s - q) i lattice by {res:.3g}")
    spaces = {int(s): V[:, s_round == s] for s in np.unique(s_round)}
    return HqSplit(eigenvalues=1j * lam, spaces=spaces, residual=res)


# --- intertwining operators -------------------------------------------------------

def kappa_frame(A0, A0p, tol: float = UNIT_TOL) -> np.ndarray:
    """Orthogonal R with R^T Q_m = Q_m and R^T A0 Q_m = A0' Q_m for a real frame Q_m.

    The frame lies in the eigenspaces of sigma = -A0' A0, which must be a
    symmetric involution (A0 and A0' commute).  Then R A0' R^T = A0.
    """
    A0, A0p = _check_unit(A0), _check_unit(A0p)
    sigma = -A0p @ A0
    if np.abs(sigma - sigma.T).max() > tol or np.abs(sigma @ sigma - np.eye(len(sigma))).max() > tol:
        raise UnsupportedPair("A0 and A0' do not commute; no frame adapted to both")
    w, V = linalg.eigh(sigma)
    cols = []
    for sign in (-1.0, 1.0):
        Vs = V[:, np.abs(w - sign) < 1e-6]
        if Vs.shape[1] == 0:
            continue
        # A0 restricted to the eigenspace, in the orthonormal coordinates Vs
        C = _complex_structure_basis(Vs.T @ A0 @ Vs)
        cols.append(Vs @ C[:, 0::2])
    Q = np.concatenate(cols, axis=1)
    R = Q @ Q.T + (A0 @ Q) @ (A0p @ Q).T
    return R


def kappa_star_matrix(k: int, d: int, R) -> np.ndarray:
    """Substitution p -> p(R X) on degree-d coefficient vectors."""
    return monomial_space(k).substitution(R, d)


def kappa_star(p: GradedPoly, A0, A0p) -> GradedPoly:
    """Rewrite p in the Theta coordinates of A0 and reinterpret in those of A0'."""
    R = kappa_frame(A0, A0p)
    out = GradedPoly.zero(p.k)
    for d in p.degrees:
        out = out + GradedPoly.from_dense(p.k, d, kappa_star_matrix(p.k, d, R) @ p.component(d).to_dense(d))
    return out


def kappa(h: GradedPoly, r: int, A0, A0p) -> GradedPoly:
    """kappa = T' o kappa* o T^-1 on H^(r); returns the degree-r harmonic component."""
    lifted = T_invert({r: h}, r) if h.coeffs else h
    moved = kappa_star(lifted, A0, A0p)
    parts = T_apply(moved.component(r)) if moved.coeffs else {r: moved}
    return parts.get(r, GradedPoly.zero(h.k))


def kappa_matrix(basis: HarmonicBasis, R, q: int) -> np.ndarray:
    return basis.operator(kappa_star_matrix(basis.k, q, R), q)


def mult_project_operator(basis: HarmonicBasis, S, r: int) -> dict[int, np.ndarray]:
    """psi in H^(r) -> components in H^(r+2), H^(r), H^(r-2) of X^T S X psi (degrees <= r_max kept)."""
    ms = basis.ms
    prod = ms.multiply_quadratic(S, r) @ basis.basis(r)
    out = {}
    for j, m in enumerate((r + 2, r, r - 2)):
        if m < 0 or m > basis.r_max:
            continue
        comp = _lap_power(ms, prod, r + 2, j)
        comp = harmonic_project_dense(basis.k, comp, m) / _cjj(basis.k, m, j)
        w = ms.fischer_weights(m)
        out[m] = basis.basis(m).T @ (fischer_to_sphere(basis.k, m) * w[:, None] * comp)
    return out


def cd_form(space, c, d) -> np.ndarray:
    """Symmetric matrix of X -> <J_c X, J_d X>."""
    Jc, Jd = space.J(c), space.J(d)
    S = Jc.T @ Jd
    return 0.5 * (S + S.T)


# --- certificates ----------------------------------------------------------------

@dataclass
class IntertwiningReport:
    residuals: dict  # family -> max residual
    per_degree: dict  # (family, r) -> residual
    tolerance: float

    @property
    def passed(self) -> dict:
        return {f: r <= self.tolerance for f, r in self.residuals.items()}

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_text(self) -> str:
        lines = [f"tolerance: {self.tolerance:.3g}"]
        for f, r in self.residuals.items():
            lines.append(f"{f}: {r:.3e} {'PASS' if r <= self.tolerance else 'FAIL'}")
        lines.append("per_degree:")
        for (f, q), r in sorted(self.per_degree.items()):
            lines.append(f"  {f} r={q}: {r:.3e}")
        return "\n".join(lines) + "\n"


def _anticommutator_unit(space, A=None) -> tuple[np.ndarray, np.ndarray]:
    """(coordinates of A, matrix of A) with A the first basis element by default."""
    z = np.zeros(space.l)
    z[0 if A is None else A] = 1.0
    return z, space.J(z)


def verify_intertwining(space, space_p, r_max: int = 6, A_index: int = 0, tol: float = 1e-8,
                        families=("spherical_laplacian", "D_A", "D_perp", "M_cd", "JA_norm"),
                        basis: HarmonicBasis | None = None) -> IntertwiningReport:
    """kappa-conjugation residuals of the boundary-Laplacian operator families.

    kappa acts on H^(q) as the substitution by the frame map R of the two
    anticommutators, which is also T' kappa* T^-1 since both T and T' are the
    spherical decomposition.  M_cd is compressed to degrees <= r_max.
    """
    if (space.k, space.l) != (space_p.k, space_p.l):
        raise UnsupportedPair("dimension mismatch")
    k, l = space.k, space.l
    basis = basis or HarmonicBasis(k, r_max)
    zA, A = _anticommutator_unit(space, A_index)
    _, Ap = _anticommutator_unit(space_p, A_index)
    # rescale to unit for the frame; the scale enters the |J_A X|^2 family only
    sA = np.sqrt(max(-np.trace(A @ A) / k, 1e-300))
    sAp = np.sqrt(max(-np.trace(Ap @ Ap) / k, 1e-300))
    R = kappa_frame(A / sA, Ap / sAp, tol=1e-6)
    perp = [e for e in np.eye(l) if e @ zA == 0]
    K = {q: kappa_matrix(basis, R, q) for q in range(r_max + 1)}
    per: dict = {}

    def rec(name, q, val):
        per[(name, q)] = max(per.get((name, q), 0.0), val)

    for q in range(r_max + 1):
        if "spherical_laplacian" in families:
            L = -q * (q + k - 2) * np.eye(basis.dim(q))
            rec("spherical_laplacian", q, conjugation_residual(L, L, K[q]))
        if "D_A" in families:
            rec("D_A", q, conjugation_residual(d_op_matrix(basis, A, q), d_op_matrix(basis, Ap, q), K[q]))
        if "D_perp" in families:
            for z in perp:
                rec("D_perp", q, conjugation_residual(d_op_matrix(basis, space.J(z), q),
                                                      d_op_matrix(basis, space_p.J(z), q), K[q]))
        if "M_cd" in families:
            for a in range(l):
                for b in range(a, l):
                    e = np.eye(l)
                    M1 = mult_project_operator(basis, cd_form(space, e[a], e[b]), q)
                    M2 = mult_project_operator(basis, cd_form(space_p, e[a], e[b]), q)
                    rec("M_cd", q, _graded_residual(M1, M2, K[q], K))
        if "JA_norm" in families:
            M1 = mult_project_operator(basis, A.T @ A, q)
            M2 = mult_project_operator(basis, Ap.T @ Ap, q)
            rec("JA_norm", q, _graded_residual(M1, M2, K[q], K))
    fams = {}
    for (f, q), v in per.items():
        fams[f] = max(fams.get(f, 0.0), v)
    return IntertwiningReport(residuals=fams, per_degree=per, tolerance=tol)


def _graded_residual(M, Mp, K_in, K_out) -> float:
    """|K_out M - M' K_in| / (|M| + |M'|) summed over the target degrees of graded maps."""
    num = sum(np.linalg.norm(K_out[m] @ M[m] - Mp[m] @ K_in) ** 2 for m in M)
    den = np.sqrt(sum(np.linalg.norm(M[m]) ** 2 for m in M)) + np.sqrt(sum(np.linalg.norm(Mp[m]) ** 2 for m in Mp))
    if den == 0:
        return 0.0
    return float(np.sqrt(num) / den)


def fiberwise_certificate(space, space_p, beta, r_max: int = 4,
                          basis: HarmonicBasis | None = None) -> dict:
    """For fixed beta, conjugate L(beta) = D_{J_beta} + 1/4 M_{beta beta} by the substitution O_beta.

    O_beta is orthogonal with O_beta^T J_beta O_beta = J'_beta (canonical
    complex-structure frames); requires J_beta^2 = -|beta|^2 on both sides.
    """
    beta = np.asarray(beta, dtype=float)
    nb = np.linalg.norm(beta)
    Jb, Jbp = space.J(beta) / nb, space_p.J(beta) / nb
    P, Pp = _complex_structure_basis(Jb), _complex_structure_basis(Jbp)
    O = P @ Pp.T  # O^T Jb O = Jb'
    basis = basis or HarmonicBasis(space.k, r_max)
    res = 0.0
    for q in range(r_max + 1):
        # (D_F p)(O X) = D_{O^T F O}(p o O)(X), so p -> p o O carries D_{Jb} to D_{Jb'}
        K = basis.operator(monomial_space(space.k).substitution(O, q), q)
        L1 = nb * d_op_matrix(basis, Jb, q)
        L2 = nb * d_op_matrix(basis, Jbp, q)
        M1 = mult_project_operator(basis, 0.25 * cd_form(space, beta, beta), q)
        M2 = mult_project_operator(basis, 0.25 * cd_form(space_p, beta, beta), q)
        Ks = {m: basis.operator(monomial_space(space.k).substitution(O, m), m) for m in M1}
        res = max(res, conjugation_residual(L1, L2, K), _graded_residual(M1, M2, K, Ks))
    return {"beta": beta, "residual": res, "orthogonal_map": O}


@dataclass
class SolvableIntertwiningReport:
    points: int
    bundle_residual: float  # max coefficient mismatch between the two boundary Laplacians
    residuals: dict  # family -> max residual over points with a nonzero coefficient
    tolerance: float

    @property
    def all_passed(self) -> bool:
        return self.bundle_residual <= self.tolerance and all(r <= self.tolerance for r in self.residuals.values())

    def to_text(self) -> str:
        lines = [f"points: {self.points}", f"tolerance: {self.tolerance:.3g}",
                 f"bundle_residual: {self.bundle_residual:.3e}"]
        for f, r in self.residuals.items():
            lines.append(f"{f}: {r:.3e} {'PASS' if r <= self.tolerance else 'FAIL'}")
        return "\n".join(lines) + "\n"


_FAMILY_WEIGHT = {"spherical_laplacian": "S_X", "D_A": "D", "D_perp": "D", "M_cd": "gram", "JA_norm": "gram"}


def solvable_intertwining(space, space_p, s: float = 1.0, n_points: int = 20, seed: int = 0,
                          r_max: int = 6, c: float = 1.0, tol: float = 1e-8,
                          base: IntertwiningReport | None = None) -> SolvableIntertwiningReport:
    """Angular-family residuals on the radius-s geodesic spheres of the solvable extensions.

    At each sampled boundary point the angular part of the boundary Laplacian
    is a combination of the kappa-certified families with scalar weights.  The
    weights and the Gram spectra of both groups are compared point by point;
    each family contributes its kappa residual wherever its weight is nonzero.
    """
    from . import hypersurface as hs
    from .nilgeom import MetricGroup
    from .solvgeom import SolvGroup

    g1, g2 = SolvGroup(MetricGroup(space), c), SolvGroup(MetricGroup(space_p), c)
    profile = hs.geodesic_sphere_profile(s)
    base = base or verify_intertwining(space, space_p, r_max=r_max, tol=tol)
    bundle = 0.0
    res = {f: 0.0 for f in base.residuals}
    for p in hs.sample_geodesic_sphere(g1, s, n_points, seed):
        p = hs.snap_to_surface(profile, p)
        b1 = hs.boundary_laplacian_fields(g1, profile, p)
        b2 = hs.boundary_laplacian_fields(g2, profile, p)
        for key, w in b1.weights.items():
            bundle = max(bundle, abs(w - b2.weights[key]))
        bundle = max(bundle, float(np.abs(np.linalg.eigvalsh(b1.gram) - np.linalg.eigvalsh(b2.gram)).max()),
                     float(np.abs(b1.nu_Z - b2.nu_Z).max()), abs(b1.nu_t - b2.nu_t))
        for f, r in base.residuals.items():
            if abs(b1.weights[_FAMILY_WEIGHT[f]]) > 0:
                res[f] = max(res[f], r)
    return SolvableIntertwiningReport(points=n_points, bundle_residual=bundle, residuals=res, tolerance=tol)
