"""Sphere-type hypersurfaces |X|^2 = D(|Z|^2[, t]) in N and SN.

Closed-form normals and second fundamental forms sit next to a frame
oracle: the level-set Hessian in the left-invariant orthonormal frame,
using Koszul Christoffel symbols and exact derivatives of the frame
coefficients.  Intrinsic curvature is assembled from the Gauss equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp
from scipy import linalg

from .liealg import MetricLieAlgebra
from .nilgeom import MetricGroup
from .solvgeom import SolvGroup

RIM_EPS = 1e-8
SURFACE_TOL = 1e-10


class OffSurface(ValueError):
    pass


class RimPoint(ValueError):
    pass


class NotTangent(ValueError):
    pass


class OutsideBall(ValueError):
    pass


class NotAnticommutator(ValueError):
    pass


class NotEigenvector(ValueError):
    pass


class WrongGroupFamily(ValueError):
    pass


class NotInDistribution(ValueError):
    pass


TAU, TT = sp.symbols("tau t", real=True)


@dataclass(frozen=True, eq=False)
class Profile:
    """|X|^2 = D(tau) (nilpotent) or D(tau, t) (solvable), tau = |Z|^2."""

    kind: str
    expr: sp.Expr

    def __post_init__(self):
        if self.kind not in ("nilpotent", "solvable"):
            raise ValueError("kind must be 'nilpotent' or 'solvable'")

    @cached_property
    def _funcs(self) -> dict:
        e = sp.sympify(self.expr)
        ders = {
            "D": e,
            "D_tau": sp.diff(e, TAU),
            "D_tautau": sp.diff(e, TAU, 2),
            "D_t": sp.diff(e, TT),
            "D_tt": sp.diff(e, TT, 2),
            "D_taut": sp.diff(e, TAU, TT),
        }
        return {name: sp.lambdify((TAU, TT), d, "numpy") for name, d in ders.items()}

    def derivatives(self, tau: float, t: float = 1.0) -> dict:
        return {name: float(f(tau, t)) for name, f in self._funcs.items()}

    def __call__(self, tau: float, t: float = 1.0) -> float:
        return float(self._funcs["D"](tau, t))


def polynomial_profile(coeffs: dict, kind: str = "nilpotent") -> Profile:
    """sum c_(i,j) tau^i t^j from {(i, j): c}."""
    return Profile(kind, sum(sp.nsimplify(c) * TAU ** i * TT ** j for (i, j), c in coeffs.items()))


def euclidean_profile(R2: float) -> Profile:
    return Profile("nilpotent", sp.nsimplify(R2) - TAU)


def geodesic_sphere_profile(s: float) -> Profile:
    """D(tau, t) = 4((e^s + e^-s + 2) t - tau)^(1/2) - 4(t + 1)."""
    if not s > 0:
        raise ValueError("radius must be positive")
    a = sp.Float(np.exp(s) + np.exp(-s) + 2, 30)
    return Profile("solvable", 4 * sp.sqrt(a * TT - TAU) - 4 * (TT + 1))


# --- points and frames --------------------------------------------------------------

@dataclass(frozen=True)
class SurfacePoint:
    X: np.ndarray
    Z: np.ndarray
    t: float = 1.0


def _solv(g) -> bool:
    return isinstance(g, SolvGroup)


def _nil(g) -> MetricGroup:
    return g.nil if _solv(g) else g


def _algebra(g) -> MetricLieAlgebra:
    return g.algebra


def check_point(g, profile: Profile, p: SurfacePoint, tol: float = SURFACE_TOL) -> dict:
    d = profile.derivatives(float(p.Z @ p.Z), p.t)
    if d["D"] < RIM_EPS:
        raise RimPoint(f"D = {d['D']:.3g} at the rim")
    res = abs(p.X @ p.X - d["D"])
    if res > tol * max(1.0, d["D"]):
        raise OffSurface(f"level-set residual {res:.3g}")
    return d


def point_on_surface(g, profile: Profile, X_dir, Z, t: float = 1.0) -> SurfacePoint:
    """Scale X_dir so that |X|^2 = D(|Z|^2, t)."""
    Z = np.asarray(Z, dtype=float)
    D = profile(float(Z @ Z), t)
    if D < RIM_EPS:
        raise RimPoint(f"D = {D:.3g}")
    X = np.asarray(X_dir, dtype=float)
    return SurfacePoint(X / np.linalg.norm(X) * np.sqrt(D), Z, t)


def _coords(g, p: SurfacePoint) -> np.ndarray:
    parts = [p.X, p.Z] + ([np.array([p.t])] if _solv(g) else [])
    return np.concatenate(parts)


def frame(g, p: SurfacePoint) -> np.ndarray:
    """Columns: invariant orthonormal fields in coordinates at p."""
    nil = _nil(g)
    F = np.eye(nil.n)
    F[nil.k:, : nil.k] = 0.5 * np.einsum("aij,j->ai", nil.space.basis, p.X)
    if not _solv(g):
        return F
    Fs = np.zeros((g.n, g.n))
    Fs[:-1, :-1] = F
    Fs[:, : g.k] *= np.sqrt(p.t)
    Fs[:, g.k: g.k + g.l] *= p.t
    Fs[-1, -1] = g.c * p.t
    return Fs


def frame_derivative(g, p: SurfacePoint) -> np.ndarray:
    """dF[a, b, j] = d_a F[b, j] (coordinate derivative of the frame coefficients)."""
    nil = _nil(g)
    k, l = nil.k, nil.l
    n = g.n
    dF = np.zeros((n, n, n))
    B = nil.space.basis
    # d_{x_m} F[k + a, i] = 1/2 B[a, i, m]
    dF[:k, k:k + l, :k] = 0.5 * np.einsum("aim->mai", B)
    if _solv(g):
        dF[:, :, : k] *= np.sqrt(p.t)
        F0 = frame(g, p)
        dF[-1, :, : k] = F0[:, : k] / (2 * p.t)
        dF[-1, :, k: k + l] = F0[:, k: k + l] / p.t
        dF[-1, -1, -1] = g.c
    return dF


def _level_function_derivatives(g, profile: Profile, p: SurfacePoint, d: dict):
    """Coordinate gradient and Hessian of f = |X|^2 - D(|Z|^2, t)."""
    k, l = g.k, g.l
    n = g.n
    Z = p.Z
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    grad[:k] = 2 * p.X
    grad[k:k + l] = -2 * d["D_tau"] * Z
    hess[:k, :k] = 2 * np.eye(k)
    hess[k:k + l, k:k + l] = -2 * d["D_tau"] * np.eye(l) - 4 * d["D_tautau"] * np.outer(Z, Z)
    if _solv(g):
        grad[-1] = -d["D_t"]
        hess[-1, -1] = -d["D_tt"]
        hess[k:k + l, -1] = hess[-1, k:k + l] = -2 * d["D_taut"] * Z
    return grad, hess


@dataclass
class SurfaceFrameData:
    """Frame-oracle data at a surface point (all in the invariant orthonormal frame)."""

    nu: np.ndarray
    grad_norm: float
    hessian: np.ndarray  # covariant Hessian of f in the frame
    tangent: np.ndarray  # columns: orthonormal tangent basis
    derivs: dict

    @property
    def second_form(self) -> np.ndarray:
        """M on the whole algebra: <nabla_U grad f, V> / |grad f|."""
        return self.hessian / self.grad_norm


def frame_hessian(g, p: SurfacePoint, grad_c, hess_c, F=None, dF=None):
    """Frame gradient E_j f and covariant Hessian E_i E_j f - (nabla_{E_i} E_j) f.

    grad_c, hess_c are the coordinate gradient and Hessian of f at p.
    """
    F = frame(g, p) if F is None else F
    dF = frame_derivative(g, p) if dF is None else dF
    Ef = F.T @ grad_c
    # E_i E_j f = F_ai F_bj d_ab f + F_ai dF[a, b, j] d_b f
    EEf = F.T @ hess_c @ F + np.einsum("ai,abj,b->ij", F, dF, grad_c)
    Gamma = _algebra(g).Gamma  # Gamma[i, j] = nabla_{e_i} e_j
    H = EEf - np.einsum("ijm,m->ij", Gamma, Ef)
    return Ef, H


def frame_data(g, profile: Profile, p: SurfacePoint) -> SurfaceFrameData:
    d = check_point(g, profile, p)
    F = frame(g, p)
    dF = frame_derivative(g, p)
    grad_c, hess_c = _level_function_derivatives(g, profile, p, d)
    Ef, H = frame_hessian(g, p, grad_c, hess_c, F, dF)
    nrm = float(np.linalg.norm(Ef))
    nu = Ef / nrm
    T = linalg.null_space(nu[None, :])
    return SurfaceFrameData(nu=nu, grad_norm=nrm, hessian=H, tangent=T, derivs=d)


# --- closed forms ---------------------------------------------------------------------

def normal(g, profile: Profile, p: SurfacePoint) -> np.ndarray:
    """Unit normal as an algebra element, by the closed formulas."""
    d = check_point(g, profile, p)
    nil = _nil(g)
    X, Z = p.X, p.Z
    Dp = d["D_tau"]
    JZX = nil.J(Z) @ X
    if not _solv(g):
        C = (4 * X @ X + Dp ** 2 * (JZX @ JZX + 4 * Z @ Z)) ** -0.5
        return np.concatenate([C * (2 * X - Dp * JZX), -2 * C * Dp * Z])
    t, c = p.t, g.c
    C = (t * (4 * X @ X + Dp ** 2 * (JZX @ JZX)) + t ** 2 * (4 * (Z @ Z) * Dp ** 2 + c ** 2 * d["D_t"] ** 2)) ** -0.5
    return np.concatenate([C * np.sqrt(t) * (2 * X - Dp * JZX), -2 * C * t * Dp * Z, [-c * C * t * d["D_t"]]])


def normal_constant_C(g, profile: Profile, p: SurfacePoint) -> float:
    d = check_point(g, profile, p)
    nil = _nil(g)
    JZX = nil.J(p.Z) @ p.X
    Dp = d["D_tau"]
    if not _solv(g):
        return float((4 * p.X @ p.X + Dp ** 2 * (JZX @ JZX + 4 * p.Z @ p.Z)) ** -0.5)
    t, c = p.t, g.c
    return float((t * (4 * p.X @ p.X + Dp ** 2 * (JZX @ JZX))
                  + t ** 2 * (4 * (p.Z @ p.Z) * Dp ** 2 + c ** 2 * d["D_t"] ** 2)) ** -0.5)


def _z_frame(Z: np.ndarray) -> np.ndarray:
    """Orthonormal basis e_0 = Z/|Z|, e_1, ... of the Z-space (columns)."""
    l = len(Z)
    nz = np.linalg.norm(Z)
    if nz == 0:
        return np.eye(l)
    e0 = Z / nz
    rest = linalg.null_space(e0[None, :])
    return np.column_stack([e0, rest])


def second_form_nil_closed(g: MetricGroup, profile: Profile, p: SurfacePoint) -> dict:
    """The three bilinear forms of the nilpotent closed formulas, as matrices.

    Returns MXX (k x k), MZZ (l x l), MXZ (k x l) with
    M(X1, X2) = X1^T MXX X2, M(Z1, Z2) = Z1^T MZZ Z2, M(X, Z) = X^T MXZ Z.
    """
    d = check_point(g, profile, p)
    X, Z = p.X, p.Z
    C = normal_constant_C(g, profile, p)
    Dp, Dpp = d["D_tau"], d["D_tautau"]
    E = _z_frame(Z)
    dvec = np.full(g.l, 0.5 * Dp)
    dvec[0] = 0.5 * Dp + (Z @ Z) * Dpp
    JX = np.stack([g.J(E[:, b]) @ X for b in range(g.l)])  # rows J_b X
    MXX = C * (2 * np.eye(g.k) - np.einsum("b,bi,bj->ij", dvec, JX, JX))
    MZZ = -2 * C * (Dp * np.eye(g.l) + 2 * Dpp * np.outer(Z, Z))
    JZX = g.J(Z) @ X
    nuX = C * (2 * X - Dp * JZX)
    w = nuX + 2 * C * Dp * X
    # M(X~, Z~) = -1/2 <J_{Z~} w, X~> - 2 C D'' <J_Z X, X~> <Z, Z~>
    MXZ = -0.5 * np.stack([g.J(e) @ w for e in np.eye(g.l)], axis=1) - 2 * C * Dpp * np.outer(JZX, Z)
    return {"MXX": MXX, "MZZ": MZZ, "MXZ": MXZ, "C": C}


def second_fundamental_form(g, profile: Profile, p: SurfacePoint, U, V, tol: float = 1e-9) -> float:
    """M(U, V) = <nabla_U nu, V> for tangent U, V."""
    fd = frame_data(g, profile, p)
    U, V = np.asarray(U, float), np.asarray(V, float)
    for W in (U, V):
        if abs(W @ fd.nu) > tol * max(1.0, np.linalg.norm(W)):
            raise NotTangent(f"<W, nu> = {W @ fd.nu:.3g}")
    return float(U @ fd.second_form @ V)


def weingarten(g, profile: Profile, p: SurfacePoint) -> np.ndarray:
    """Matrix of B in the orthonormal tangent basis returned by frame_data."""
    fd = frame_data(g, profile, p)
    return fd.tangent.T @ fd.second_form @ fd.tangent


# --- Gauss equation ------------------------------------------------------------------

@dataclass
class IntrinsicCurvature:
    tangent: np.ndarray
    ricci: np.ndarray  # in the tangent basis
    scalar: float
    scalar_gauss: float  # kappa - 2 Ric(nu, nu) + (Tr B)^2 - Tr B^2
    B: np.ndarray
    nu: np.ndarray


def intrinsic_curvature(g, profile: Profile, p: SurfacePoint, tangent=None) -> IntrinsicCurvature:
    """Ricci and scalar curvature of the hypersurface by the Gauss equation.

    The Ricci tensor is summed from the intrinsic Riemann tensor
    R~(V, Y, W, U) = R(V, Y, W, U) + M(Y, W) M(V, U) - M(V, W) M(Y, U); the
    scalar curvature is also assembled by the trace formula.
    """
    fd = frame_data(g, profile, p)
    T = fd.tangent if tangent is None else np.asarray(tangent, dtype=float)
    R = _algebra(g).R
    Rq = np.einsum("ijkm->ijkm", R)
    M = fd.second_form
    Rt = np.einsum("ijkm,ia,jb,kc,md->abcd", Rq, T, T, T, T)
    Mt = T.T @ M @ T
    Rt = Rt + np.einsum("bc,ad->abcd", Mt, Mt) - np.einsum("ac,bd->abcd", Mt, Mt)
    ric = np.einsum("abca->bc", Rt)
    ric_amb = _algebra(g).ricci_matrix()
    kappa = float(np.trace(ric_amb))
    nu = fd.nu
    scal_gauss = kappa - 2 * float(nu @ ric_amb @ nu) + float(np.trace(Mt)) ** 2 - float(np.trace(Mt @ Mt))
    return IntrinsicCurvature(tangent=T, ricci=ric, scalar=float(np.trace(ric)), scalar_gauss=scal_gauss,
                              B=Mt, nu=nu)


def induced_ricci(g, profile: Profile, p: SurfacePoint, U, V) -> float:
    """r~(U, V) = r(U, V) - <R(nu, U) V, nu> + <U, ((Tr B) B - B^2) V>."""
    fd = frame_data(g, profile, p)
    U, V = np.asarray(U, float), np.asarray(V, float)
    alg = _algebra(g)
    nu = fd.nu
    T = fd.tangent
    Mt = T.T @ fd.second_form @ T
    Bop = T @ ((np.trace(Mt) * Mt - Mt @ Mt) @ T.T)
    return float(U @ alg.ricci_matrix() @ V - alg.riemann(nu, U, V) @ nu + U @ Bop @ V)


def scalar_curvature(g, profile: Profile, p: SurfacePoint) -> float:
    return intrinsic_curvature(g, profile, p).scalar


def normal_curvature_terms_closed(g: MetricGroup, nu_X, nu_Z, U, V) -> float:
    """<R(nu, U) V, nu> for nu = nu_X + nu_Z and U, V split into X- and Z-parts."""
    k = g.k
    UX, UZ = U[:k], U[k:]
    VX, VZ = V[:k], V[k:]
    JnX = np.stack([g.J(e) @ nu_X for e in np.eye(g.l)])  # rows J_a nu_X
    JnuZ = g.J(nu_Z)
    xx = -0.75 * float((JnX @ UX) @ (JnX @ VX)) + 0.25 * float((JnuZ @ UX) @ (JnuZ @ VX))

    def xz(X, Zt):
        return 0.5 * float((JnuZ @ g.J(Zt) @ X - 0.5 * g.J(Zt) @ JnuZ @ X) @ nu_X)

    zz = 0.25 * float((g.J(UZ) @ nu_X) @ (g.J(VZ) @ nu_X))
    return xx + xz(UX, VZ) + xz(VX, UZ) + zz


# --- full closed-form Hessian of the level function ------------------------------------

def second_form_closed(g, profile: Profile, p: SurfacePoint) -> np.ndarray:
    """C * Hess(|X|^2 - D) in the invariant frame, assembled blockwise by hand.

    Nilpotent groups are the t = 1, no-T specialization.  On tangent vectors
    this is the second fundamental form.
    """
    d = check_point(g, profile, p)
    nil = _nil(g)
    k, l = nil.k, nil.l
    X, Z = p.X, p.Z
    solv = _solv(g)
    t = p.t if solv else 1.0
    c = g.c if solv else 0.0
    rt = np.sqrt(t)
    Dt_, Dtau, Dtt_, Dtautau, Dtaut = d["D_t"], d["D_tau"], d["D_tt"], d["D_tautau"], d["D_taut"]
    JX = np.stack([nil.J(e) @ X for e in np.eye(l)])  # rows J_a X
    JZX = nil.J(Z) @ X
    G = 2 * X - Dtau * JZX
    n = g.n
    H = np.zeros((n, n))
    H[:k, :k] = (t * (2 * np.eye(k) - Dtautau * np.outer(JZX, JZX) - 0.5 * Dtau * JX.T @ JX)
                 + 0.5 * c ** 2 * t * Dt_ * np.eye(k))
    for a in range(l):
        col = (-t ** 1.5 * (2 * Dtautau * Z[a] * JZX + Dtau * JX[a])
               - 0.5 * rt * nil.J(np.eye(l)[a]) @ G)
        H[:k, k + a] = H[k + a, :k] = col
    H[k:k + l, k:k + l] = -4 * t ** 2 * Dtautau * np.outer(Z, Z) + (c ** 2 * t * Dt_ - 2 * t ** 2 * Dtau) * np.eye(l)
    if solv:
        H[:k, -1] = H[-1, :k] = -c * t ** 1.5 * Dtaut * JZX + 0.5 * c * rt * G
        H[k:k + l, -1] = H[-1, k:k + l] = -2 * c * t * (t * Dtaut + Dtau) * Z
        H[-1, -1] = -c ** 2 * t * (Dt_ + t * Dtt_)
    return normal_constant_C(g, profile, p) * H


def t_vector(g: SolvGroup, profile: Profile, p: SurfacePoint, printed: bool = False) -> np.ndarray:
    """Unit tangent in span{X0, T}: (c t^(1/2) D_t X0 + 2 D^(1/2) T), normalized.

    printed=True uses c t D_t for the X0 coefficient, which is tangent only at t = 1.
    """
    d = check_point(g, profile, p)
    X0 = p.X / np.linalg.norm(p.X)
    a = g.c * (p.t if printed else np.sqrt(p.t)) * d["D_t"]
    v = np.concatenate([a * X0, np.zeros(g.l), [2 * np.sqrt(d["D"])]])
    return v / np.linalg.norm(v)


def printed_solv_cases(g: SolvGroup, profile: Profile, p: SurfacePoint, Xt, Zt, Xt2=None, Zt2=None) -> dict:
    """The seven case formulas for M_S as printed, evaluated on given X- and Z-vectors.

    Xt, Xt2 are X-vectors orthogonal to nu_X; Zt, Zt2 are Z-vectors orthogonal to Z.
    The nilpotent M uses the solvable C.  Returns {case: value}.
    """
    d = check_point(g, profile, p)
    nil = g.nil
    X, Z = p.X, p.Z
    t, c = p.t, g.c
    Xt2 = Xt if Xt2 is None else Xt2
    Zt2 = Zt if Zt2 is None else Zt2
    C = normal_constant_C(g, profile, p)
    D, Dt_, Dtau = d["D"], d["D_t"], d["D_tau"]
    tau = float(Z @ Z)
    X0 = X / np.linalg.norm(X)
    Z0 = Z / np.sqrt(tau) if tau > 0 else np.eye(g.l)[0]
    E = _z_frame(Z)
    dvec = np.full(g.l, 0.5 * Dtau)
    dvec[0] = 0.5 * Dtau + tau * d["D_tautau"]
    JX = np.stack([nil.J(E[:, b]) @ X for b in range(g.l)])
    MXX = C * (2 * np.eye(g.k) - np.einsum("b,bi,bj->ij", dvec, JX, JX))
    w = C * (2 * X - Dtau * nil.J(Z) @ X) + 2 * C * Dtau * X
    M_XZ = lambda x, z: -0.5 * float(nil.J(z) @ w @ x)
    N = (4 * D + (c * t * Dt_) ** 2) ** -0.5
    P = 2 * c * C * t * N
    Pst = 0.5 * c * C * N * t ** 1.5 * np.sqrt(tau) * np.sqrt(D) * Dtau * Dt_
    tv = t_vector(g, profile, p, printed=True)
    tX, tT = float(np.linalg.norm(tv[:g.k])), abs(float(tv[-1]))
    JZ0X0 = nil.J(Z0) @ X0
    return {
        "XX": float(t * Xt @ MXX @ Xt2 + 0.5 * c ** 2 * C * t * Dt_ * (Xt @ Xt2)),
        "XZ": float(np.sqrt(t) * M_XZ(Xt, Zt)),
        "Xt": float(P * (t * Dt_ * (1 + 0.25 * c ** 2 * Dt_) * (X0 @ Xt) - D * np.sqrt(tau) * d["D_taut"] * (JZ0X0 @ Xt))),
        "ZZ": float(C * t * (c ** 2 - 2 * Dtau) * (Zt @ Zt2)),
        "Zt": float(Pst * (JZ0X0 @ (nil.J(Zt) @ X0))),
        "tt": float(C * (2 * t * (1 + 0.25 * c ** 2 * Dt_) * tX ** 2 - c * D * np.sqrt(t) * tX * tT
                         - c ** 2 * (t * Dt_ + t ** 2 * d["D_tt"]) * tT ** 2)),
    }


# --- Hopf hulls ----------------------------------------------------------------------

def hull_span(g, X0: np.ndarray, Z0: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning {X0, J_Z0 X0, Z0 (, T)} in the algebra."""
    nil = _nil(g)
    cols = []
    for x in (X0, nil.J(Z0) @ X0):
        v = np.zeros(g.n)
        v[: nil.k] = x
        cols.append(v)
    v = np.zeros(g.n)
    v[nil.k: nil.k + nil.l] = Z0
    cols.append(v)
    if _solv(g):
        v = np.zeros(g.n)
        v[-1] = 1.0
        cols.append(v)
    Q, _ = np.linalg.qr(np.column_stack(cols))
    return Q


def span_closure_residual(g, Q: np.ndarray) -> float:
    """Max norm of the component of nabla_U V outside span(Q), U, V in span(Q)."""
    Gamma = _algebra(g).Gamma
    P = np.eye(g.n) - Q @ Q.T
    nab = np.einsum("ijm,ia,jb->abm", Gamma, Q, Q)
    return float(np.abs(nab @ P).max())


@dataclass
class HopfHullReport:
    lambda0: float
    lambda_perp: float | None
    closure_residual: float
    normal_residual: float
    samples: list
    total_geodesic: bool

    def to_text(self) -> str:
        lp = "n/a" if self.lambda_perp is None else f"{self.lambda_perp:.6g}"
        return (f"lambda0={self.lambda0:.6g} lambda_perp={lp} closure={self.closure_residual:.3e} "
                f"normal={self.normal_residual:.3e} total_geodesic={self.total_geodesic}")


def hopf_hull(g, profile: Profile, Z0, X0, n_samples: int = 12, t_values=(1.0,), tol: float = 1e-8,
              require_anticommutator: bool = True) -> HopfHullReport:
    """Sample the Hopf hull through X0 over the line s Z0 and certify total geodesicity.

    The certificate: span{X, J_Z X, Z (, T)} is closed under the Levi-Civita
    connection and contains the normal at every sampled hull point.  Both
    together make the hull totally geodesic in the surface.
    """
    from .endospace import is_anticommutator
    nil = _nil(g)
    Z0 = np.asarray(Z0, float)
    X0 = np.asarray(X0, float)
    if abs(np.linalg.norm(Z0) - 1) > 1e-12 or abs(np.linalg.norm(X0) - 1) > 1e-12:
        raise ValueError("Z0 and X0 must be unit vectors")
    if require_anticommutator and not is_anticommutator(nil.space, Z0):
        raise NotAnticommutator("Z0 is not an anticommutator")
    L0 = nil.J(Z0) @ nil.J(Z0)
    lam0 = float(X0 @ L0 @ X0)
    if np.linalg.norm(L0 @ X0 - lam0 * X0) > 1e-9:
        raise NotEigenvector("X0 is not an eigenvector of J_Z0^2")
    perp = linalg.null_space(Z0[None, :])
    Lp = sum(nil.J(e) @ nil.J(e) for e in perp.T) if perp.size else np.zeros((nil.k, nil.k))
    lam_p = float(X0 @ Lp @ X0)
    lam_perp = lam_p if np.linalg.norm(Lp @ X0 - lam_p * X0) < 1e-9 else None
    Q = hull_span(g, X0, Z0)
    closure = span_closure_residual(g, Q)
    Y0 = nil.J(Z0) @ X0 / np.sqrt(-lam0) if lam0 < 0 else X0
    samples = []
    nres = 0.0
    for t in (t_values if _solv(g) else (1.0,)):
        s_max = _z_extent(profile, t)
        for s in np.linspace(0.0, s_max, n_samples + 2)[1:-1]:
            phi = 2 * np.pi * len(samples) / max(1, n_samples)
            try:
                pt = point_on_surface(g, profile, np.cos(phi) * X0 + np.sin(phi) * Y0, s * Z0, t)
            except RimPoint:
                continue
            nu = frame_data(g, profile, pt).nu
            r = float(np.linalg.norm(nu - Q @ (Q.T @ nu)))
            nres = max(nres, r)
            samples.append((s, t, phi))
    return HopfHullReport(lam0, lam_perp, closure, nres, samples, bool(closure <= tol and nres <= tol))


def _z_extent(profile: Profile, t: float = 1.0) -> float:
    """Largest |Z| with D(|Z|^2, t) > 0, by bisection on a bracket found by doubling."""
    if profile(0.0, t) <= 0:
        return 0.0
    hi = 1.0
    while profile(hi ** 2, t) > 0 and hi < 1e6:
        hi *= 2
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        try:
            val = profile(mid ** 2, t)
        except (ValueError, ZeroDivisionError):
            val = -1.0
        if np.isfinite(val) and val > 0:
            lo = mid
        else:
            hi = mid
    return lo


# --- scalar curvature on Hopf hulls of Heisenberg-type groups ---------------------------

def _sqrt(x):
    return sp.sqrt(x) if isinstance(x, sp.Basic) else np.sqrt(x)


@dataclass
class HopfTerms:
    kappa: object
    minus_2ric: object
    trB: object
    trB2: object

    @property
    def scalar(self):
        return self.kappa + self.minus_2ric + self.trB ** 2 - self.trB2


def hopf_terms_closed(tau, D, Dp, Dpp, k: int, l: int) -> HopfTerms:
    """The four Gauss-equation terms on a Hopf hull of a Heisenberg-type group.

    Works on floats and on sympy expressions.  The normal and the second
    form restricted to span{X, J_Z X, Z} are written in the orthonormal
    triple (X, J_0 X, e_0)/norms; the Frobenius norm of the full form uses
    <J_a X, J_b X> = delta_ab |X|^2.
    """
    s = _sqrt(tau)
    rD = _sqrt(D)
    C2 = 1 / (4 * D + tau * Dp ** 2 * (D + 4))
    C = _sqrt(C2)
    d0 = Dp / 2 + tau * Dpp
    e = 2 * tau * Dpp  # D'' part of the Hessian of D(|Z|^2) along Z
    # M on the hull triple and nu in it (both carry one factor C)
    m = [[2, 0, -rD * s * Dp / 2], [0, 2 - d0 * D, -rD * (1 + Dp + e)],
         [-rD * s * Dp / 2, -rD * (1 + Dp + e), -2 * (Dp + e)]]
    v = [2 * rD, -s * Dp * rD, -2 * s * Dp]
    mv = [sum(m[i][j] * v[j] for j in range(3)) for i in range(3)]
    vmv = C2 * C * sum(v[i] * mv[i] for i in range(3))
    mv2 = C2 * C2 * sum(x * x for x in mv)
    trM = C * (2 * k - D * (d0 + (l - 1) * Dp / 2) - 2 * Dp * l - 2 * e)
    frob = C2 * (4 * k - 4 * D * (d0 + (l - 1) * Dp / 2) + D ** 2 * (d0 ** 2 + (l - 1) * Dp ** 2 / 4)
                 + 4 * Dp ** 2 * (l - 1) + 4 * (Dp + e) ** 2
                 + (l - 1) * D * ((2 + 2 * Dp) ** 2 + tau * Dp ** 2) / 2
                 + D * ((2 + 2 * Dp + 2 * e) ** 2 + tau * Dp ** 2) / 2)
    trB = trM - vmv
    trB2 = frob - 2 * mv2 + vmv ** 2
    nuX2 = C2 * (4 * D + tau * D * Dp ** 2)
    nuZ2 = C2 * 4 * Dp ** 2 * tau
    ric_nu = -sp.Rational(l, 2) * nuX2 + sp.Rational(k, 4) * nuZ2 if isinstance(tau, sp.Basic) else -l / 2 * nuX2 + k / 4 * nuZ2
    kappa = -sp.Rational(k * l, 4) if isinstance(tau, sp.Basic) else -k * l / 4
    return HopfTerms(kappa=kappa, minus_2ric=-2 * ric_nu, trB=trB, trB2=trB2)


def hopf_terms_printed(tau, D, Dp, Dpp, k: int, l: int, lam0: float = -1.0, lam_perp: float | None = None,
                       trL_perp: float | None = None) -> HopfTerms:
    """The four terms exactly as printed (the stray t read as tau)."""
    lam_perp = -(l - 1) if lam_perp is None else lam_perp
    trL_perp = -k * (l - 1) if trL_perp is None else trL_perp
    Om = 4 / (4 - lam0 * tau * Dp ** 2)
    C2 = 1 / (4 * D - lam0 * tau * D * Dp ** 2 + 4 * tau)
    C = _sqrt(C2)
    kappa = (lam0 + trL_perp) / 4
    m2r = C2 * (-4 * D * lam_perp + lam0 * tau * (-4 * D + Dp ** 2 * (2 + D * (lam_perp + lam0))))
    e = lam0 * D * (Dp / 2 + tau * Dpp) * Om
    trB = C * (2 * (k - 1 - Dp * (l - 1)) + D * (lam_perp * Dp / 2 + lam0 * (Dp / 2 + tau * Dpp) * Om))
    trB2 = C2 * (4 * (k - 1 + Dp ** 2 * (l - 1)) + lam_perp * D * (2 * (Dp - (1 + Dp) ** 2) + lam0 * tau / 2)
                 + 4 * e + e ** 2)
    return HopfTerms(kappa=kappa, minus_2ric=m2r, trB=trB, trB2=trB2)


def hopf_terms_oracle(g: MetricGroup, profile: Profile, Z0, X0, tau: float) -> HopfTerms:
    """The same four terms from the frame oracle at the hull point (D^(1/2) X0, tau^(1/2) Z0)."""
    p = point_on_surface(g, profile, X0, np.sqrt(tau) * np.asarray(Z0, float))
    fd = frame_data(g, profile, p)
    T = fd.tangent
    B = T.T @ fd.second_form @ T
    ric = _algebra(g).ricci_matrix()
    return HopfTerms(kappa=float(np.trace(ric)), minus_2ric=-2 * float(fd.nu @ ric @ fd.nu),
                     trB=float(np.trace(B)), trB2=float(np.trace(B @ B)))


@dataclass
class HopfCurvature:
    expr: sp.Expr
    derivative: sp.Expr
    degenerate: bool
    sample_tau: np.ndarray
    derivative_values: np.ndarray
    margin: float

    def __call__(self, tau):
        return sp.lambdify(TAU, self.expr, "numpy")(tau)

    def to_text(self) -> str:
        if self.degenerate:
            return "hopf curvature: degenerate profile (D' = 0 identically)"
        return (f"hopf curvature: {len(self.sample_tau)} samples, min |kappa'| = {self.margin:.3e}, "
                f"nonzero at all samples: {self.margin > 0}")


def hopf_curvature(profile: Profile, n_samples: int = 50, t: float | None = None) -> HopfCurvature:
    """Scalar curvature of the surface given by D on the 3-dimensional Heisenberg group.

    For solvable profiles pass t to freeze the t-argument.
    """
    expr = profile.expr if t is None else profile.expr.subs(TT, t)
    D = sp.sympify(expr)
    Dp = sp.diff(D, TAU)
    degenerate = sp.simplify(Dp) == 0
    terms = hopf_terms_closed(TAU, D, Dp, sp.diff(D, TAU, 2), 2, 1)
    kap = sp.simplify(terms.scalar)
    der = sp.diff(kap, TAU)
    ext = _z_extent(Profile("nilpotent", D), 1.0) ** 2
    grid = ext * (np.arange(1, n_samples + 1) - 0.5) / n_samples if ext > 0 else np.zeros(0)
    f = sp.lambdify(TAU, der, "numpy")
    vals = np.array([float(f(x)) for x in grid]) if grid.size else np.zeros(0)
    margin = float(np.abs(vals).min()) if vals.size and not degenerate else 0.0
    return HopfCurvature(expr=kap, derivative=der, degenerate=bool(degenerate), sample_tau=grid,
                         derivative_values=vals, margin=margin)


# --- Cayley transform and geodesic spheres -------------------------------------------

def _require_heisenberg_type(g):
    nil = _nil(g)
    if not nil.space.is_heisenberg_type(1e-10):
        raise WrongGroupFamily("the Cayley transform needs a Heisenberg-type group")
    return nil


def cayley(g: SolvGroup, X, Z, u: float):
    """Ball point (X, Z, u), |X|^2 + |Z|^2 + u^2 < 1, to SolvPoint-coordinates (X', Z', t)."""
    from .solvgeom import SolvPoint
    nil = _require_heisenberg_type(g)
    X = np.asarray(X, float)
    Z = np.asarray(Z, float)
    r2 = float(X @ X + Z @ Z + u * u)
    if r2 >= 1:
        raise OutsideBall(f"r^2 = {r2:.6g}")
    q = (1 - u) ** 2 + Z @ Z
    Xp = 2 * ((1 - u) * X + nil.J(Z) @ X) / q
    return SolvPoint(Xp, 2 * Z / q, (1 - r2) / q)


def cayley_inverse(g: SolvGroup, point) -> tuple[np.ndarray, np.ndarray, float]:
    """Inverse of cayley, in closed form for Heisenberg-type J."""
    nil = _require_heisenberg_type(g)
    Xp, Zp, tp = np.asarray(point.x, float), np.asarray(point.z, float), float(point.t)
    m = tp + Xp @ Xp / 4
    q = 1 / (((1 + m) / 2) ** 2 + Zp @ Zp / 4)
    w = (1 + m) * q / 2
    Z = Zp * q / 2
    X = (w * Xp - nil.J(Z) @ Xp) / 2
    return X, Z, 1 - w


def geodesic_sphere_residual(g: SolvGroup, s: float, point) -> float:
    """|X|^2 - D(|Z|^2, t) for the geodesic sphere of radius s (relative to 1 + |X|^2)."""
    prof = geodesic_sphere_profile(s)
    x, z, t = np.asarray(point.x), np.asarray(point.z), float(point.t)
    return float((x @ x - prof(float(z @ z), t)) / (1 + x @ x))


def ball_radius_for(s: float, c: float = 1.0) -> float:
    """Euclidean ball radius whose Cayley image is the geodesic sphere of radius s.

    On the t-axis the image of (0, 0, u) is t = (1 + u)/(1 - u) and arc length
    is log(t)/c, so u = tanh(c s / 2).
    """
    return float(np.tanh(c * s / 2))


def t_axis_intersections(s: float) -> tuple[float, float]:
    """Roots of t^2 - (e^s + e^-s) t + 1 = 0, where the sphere meets X = Z = 0."""
    b = np.exp(s) + np.exp(-s)
    disc = np.sqrt(b * b - 4)
    return float((b - disc) / 2), float((b + disc) / 2)


def sample_geodesic_sphere(g: SolvGroup, s: float, n: int, seed: int = 0) -> list[SurfacePoint]:
    """Seeded points on the radius-s sphere: uniform ball-sphere directions pushed through cayley."""
    rng = np.random.default_rng(seed)
    rho = ball_radius_for(s, g.c)
    out = []
    while len(out) < n:
        v = rng.normal(size=g.k + g.l + 1)
        v *= rho / np.linalg.norm(v)
        pt = cayley(g, v[: g.k], v[g.k: g.k + g.l], float(v[-1]))
        if pt.x @ pt.x < 1e-3:
            continue
        out.append(SurfacePoint(np.asarray(pt.x, float), np.asarray(pt.z, float), float(pt.t)))
    return out


def snap_to_surface(profile: Profile, p: SurfacePoint) -> SurfacePoint:
    """Rescale X so that |X|^2 = D exactly."""
    D = profile(float(p.Z @ p.Z), p.t)
    if D < RIM_EPS:
        raise RimPoint(f"D = {D:.3g}")
    return SurfacePoint(p.X * np.sqrt(D) / np.linalg.norm(p.X), p.Z, p.t)


# --- tensor L ------------------------------------------------------------------------

def _require_quaternionic(g):
    nil = _nil(g)
    if nil.l != 3 or nil.k % 4 or not nil.space.is_heisenberg_type(1e-10):
        raise WrongGroupFamily("expected an H_3^(a,b) group (l = 3, Heisenberg type)")
    return nil


def distribution_fields(g, profile: Profile, p: SurfacePoint):
    """Coordinate vector fields spanning rho + z~ (+ t) near p, with exact Jacobians.

    Returns (values, jacobians): values[i] is the field at p, jacobians[i] its
    coordinate Jacobian.  rho: (J_a X) d_X; z~: z_a d_b - z_b d_a; t: the
    field (D_t / 2|X|^2) X d_X + d_t, tangent to the level set.
    """
    nil = _nil(g)
    k, l = nil.k, nil.l
    n = g.n
    vals, jacs = [], []
    for a in range(l):
        Ja = nil.J(np.eye(l)[a])
        v = np.zeros(n)
        v[:k] = Ja @ p.X
        Jm = np.zeros((n, n))
        Jm[:k, :k] = Ja
        vals.append(v)
        jacs.append(Jm)
    for a in range(l):
        for b in range(a + 1, l):
            v = np.zeros(n)
            v[k + b] = p.Z[a]
            v[k + a] = -p.Z[b]
            Jm = np.zeros((n, n))
            Jm[k + b, k + a] = 1.0
            Jm[k + a, k + b] = -1.0
            vals.append(v)
            jacs.append(Jm)
    if _solv(g):
        d = profile.derivatives(float(p.Z @ p.Z), p.t)
        x2 = float(p.X @ p.X)
        phi = d["D_t"] / (2 * x2)
        v = np.zeros(n)
        v[:k] = phi * p.X
        v[-1] = 1.0
        Jm = np.zeros((n, n))
        Jm[:k, :k] = phi * np.eye(k) - d["D_t"] / x2 ** 2 * np.outer(p.X, p.X)
        Jm[:k, k:k + l] = np.outer(p.X, d["D_taut"] * p.Z / x2)
        Jm[:k, -1] = d["D_tt"] / (2 * x2) * p.X
        vals.append(v)
        jacs.append(Jm)
    return vals, jacs


def k_basis(g, p: SurfacePoint) -> np.ndarray:
    """Orthonormal X-vectors perpendicular to X and every J_a X (the distribution K)."""
    nil = _nil(g)
    A = np.column_stack([p.X] + [nil.J(e) @ p.X for e in np.eye(nil.l)])
    return linalg.null_space(A.T)


def tensor_L_fields(g, profile: Profile, p: SurfacePoint) -> np.ndarray:
    """L on pairs of spanning fields: out[i, j] = K-coordinates of [F_i, F_j]."""
    check_point(g, profile, p)
    vals, jacs = distribution_fields(g, profile, p)
    K = k_basis(g, p)
    k = _nil(g).k
    m = len(vals)
    out = np.zeros((m, m, K.shape[1]))
    for i in range(m):
        for j in range(i + 1, m):
            br = jacs[j] @ vals[i] - jacs[i] @ vals[j]
            out[i, j] = K.T @ br[:k]
            out[j, i] = -out[i, j]
    return out


def tensor_L(g, profile: Profile, p: SurfacePoint, U, V, tol: float = 1e-9) -> np.ndarray:
    """Projection onto K of the bracket of U, V in rho + z~ (+ t) (coordinate vectors at p)."""
    _require_quaternionic(g)
    vals, _ = distribution_fields(g, profile, p)
    F = np.column_stack(vals)
    coef = []
    for W in (np.asarray(U, float), np.asarray(V, float)):
        a, *_ = np.linalg.lstsq(F, W, rcond=None)
        if np.linalg.norm(F @ a - W) > tol * max(1.0, np.linalg.norm(W)):
            raise NotInDistribution(f"residual {np.linalg.norm(F @ a - W):.3g}")
        coef.append(a)
    Lf = tensor_L_fields(g, profile, p)
    return np.einsum("i,j,ijm->m", coef[0], coef[1], Lf)


def tensor_L_norm(g, profile: Profile, p: SurfacePoint) -> float:
    _require_quaternionic(g)
    return float(np.abs(tensor_L_fields(g, profile, p)).max())


# --- Ricci matrices in the adapted basis --------------------------------------------

def _xv(g, x):
    v = np.zeros(g.n)
    v[: _nil(g).k] = x
    return v


def _zv(g, z):
    nil = _nil(g)
    v = np.zeros(g.n)
    v[nil.k: nil.k + nil.l] = z
    return v


def adapted_basis(g, profile: Profile, p: SurfacePoint) -> tuple[np.ndarray, dict]:
    """Orthonormal tangent basis {K.., E_i, P, E_j, E_k, j, k (, t)} and index slices.

    i = Z/|Z| (right-handed i, j, k), E_i = J_i(nu_X)/|.|, E_j = J_j X0,
    E_k = J_k X0, K spans the X-vectors orthogonal to X and rho.  P is the
    remaining tangent direction in span{X0, J_i X0, Z0 (, T)}; on solvable
    groups t is the tangent unit vector in span{X0, T} made orthogonal to E_i.
    """
    nil = _require_quaternionic(g)
    fd = frame_data(g, profile, p)
    nu = fd.nu
    nz = np.linalg.norm(p.Z)
    if nz < 1e-12:
        raise ValueError("adapted basis needs Z != 0")
    X0 = p.X / np.linalg.norm(p.X)
    i = p.Z / nz
    j = linalg.null_space(i[None, :])[:, 0]
    kk = np.cross(i, j)
    Ei = _xv(g, nil.J(i) @ nu[: nil.k])
    Ei /= np.linalg.norm(Ei)
    Ej, Ek = _xv(g, nil.J(j) @ X0), _xv(g, nil.J(kk) @ X0)
    K = [_xv(g, c) for c in k_basis(g, p).T]
    cols = K + [Ei]
    extra = [_xv(g, X0), _xv(g, nil.J(i) @ X0), _zv(g, i)]
    if _solv(g):
        tv = t_vector(g, profile, p)
        tv = tv - (tv @ Ei) * Ei
        tv /= np.linalg.norm(tv)
        extra.append(np.eye(g.n)[-1])
    W = np.column_stack(extra)
    W = W - np.outer(nu, nu @ W) - np.outer(Ei, Ei @ W)
    if _solv(g):
        W = W - np.outer(tv, tv @ W)
    U, sv, _ = np.linalg.svd(W, full_matrices=False)
    P = U[:, 0]
    cols.append(P)
    cols += [Ej, Ek, _zv(g, j), _zv(g, kk)]
    if _solv(g):
        cols.append(tv)
    B = np.column_stack(cols)
    nK = len(K)
    idx = {"K": slice(0, nK), "Ei": nK, "P": nK + 1, "L": slice(nK + 2, nK + 4), "z": slice(nK + 4, nK + 6)}
    if _solv(g):
        idx["t"] = nK + 6
    return B, idx


@dataclass
class RicciBlocks:
    matrix: np.ndarray
    basis: np.ndarray
    index: dict
    eps: float  # K eigenvalue
    E_ll: float
    E_LL: float
    E_zz: float
    A: float
    B: float
    structure_residual: float
    criterion: float
    route_residual: float  # full Gauss Riemann sum vs the closed Ricci formula
    printed: dict | None = None

    def to_text(self) -> str:
        lines = [f"eps={self.eps:.10g} E_ll={self.E_ll:.10g} E_LL={self.E_LL:.10g} E_zz={self.E_zz:.10g}",
                 f"A={self.A:.10g} B={self.B:.10g} criterion={self.criterion:.6e}",
                 f"structure_residual={self.structure_residual:.3e} route_residual={self.route_residual:.3e}"]
        if self.printed:
            lines.append("printed vs oracle: " + ", ".join(
                f"{name}: {val:.6g} ({val - getattr(self, name):+.3e})" for name, val in self.printed.items()))
        return "\n".join(lines)


def _structure(r: np.ndarray, idx: dict) -> tuple[float, float]:
    """Off-pattern size and the K eigenvalue for the adapted-basis Ricci matrix."""
    n = r.shape[0]
    allowed = np.zeros((n, n), dtype=bool)
    K = idx["K"]
    nK = K.stop
    eps = float(np.mean(np.diag(r)[K])) if nK else float("nan")
    dev = np.abs(r[K, K] - eps * np.eye(nK)).max() if nK else 0.0
    allowed[K, K] = True
    grp = [idx["Ei"], idx["P"]] + ([idx["t"]] if "t" in idx else [])
    for a in grp:
        for b in grp:
            allowed[a, b] = True
    L, z = idx["L"], idx["z"]
    Lz = list(range(L.start, L.stop)) + list(range(z.start, z.stop))
    for a in Lz:
        for b in Lz:
            allowed[a, b] = True
    rLL, rzz, rLz = r[L, L], r[z, z], r[L, z]
    dev = max(dev, abs(rLL[0, 1]), abs(rLL[0, 0] - rLL[1, 1]), abs(rzz[0, 1]), abs(rzz[0, 0] - rzz[1, 1]),
              abs(rLz[0, 0] - rLz[1, 1]), abs(rLz[0, 1] + rLz[1, 0]))
    off = np.abs(np.where(allowed, 0.0, r)).max()
    return float(max(dev, off)), eps


def _ricci_in_basis(g, profile, p, B):
    ic = intrinsic_curvature(g, profile, p, tangent=B)
    alt = np.array([[induced_ricci(g, profile, p, B[:, a], B[:, b]) for b in range(B.shape[1])]
                    for a in range(B.shape[1])])
    return ic.ricci, float(np.abs(ic.ricci - alt).max())


def printed_h3_scalars(tau: float, D: float, Dp: float, Dpp: float, k: int) -> dict:
    """The named scalars of the adapted-basis Ricci matrix as printed, read literally.

    Omega = 4 (4 + |Z|^2 D')^-1 and d_0 = D'/2 + D'' as printed there; C from the
    nilpotent normal with |J_Z X|^2 = tau D.
    """
    C2 = 1 / (4 * D + Dp ** 2 * (tau * D + 4 * tau))
    C = np.sqrt(C2)
    Om = 4 / (4 + tau * Dp)
    d0 = Dp / 2 + Dpp
    rD = np.sqrt(D)
    eps = -1.5 + 2 * C2 * (2 * (k - 2) - D * Dp - d0 * D * Om)
    E_ll = C2 * (4 + (3 * D - 4) / Om - d0 * D * (2 * (k - 3) + D * (d0 - Dp)) * Om + 2 * (d0 * D) ** 2 * Om ** 2)
    E_LL = C2 * (4 + (6 * D - 4) / Om - 0.5 * D * Dp * (2 * (k - 3) - 0.5 * D * Dp) + 0.5 * D ** 2 * Dp * d0 * Om)
    E_zz = k / 4 + 1.5 - 2 * C2 * (0.5 * D / Om - (1 + Dp) * (2 * (k - 2) - Dp * (D - 2)) - D * (Dp + 1) * d0 * Om)
    A = C2 * rD * ((3 / C - rD) / (8 * Om) + 6 / C + D * (1 + Dp) * d0 * Om
                   - (2 * rD * Dp * (Dp + 2) + (1 + Dp) * (2 * (k - 1) - D * Dp)))
    Bv = C2 * rD / C * Dp * np.sqrt(tau) * (k + 2 - 0.5 * D * Dp - 0.5 * D * d0 * Om)
    return {"eps": eps, "E_ll": E_ll, "E_LL": E_LL, "E_zz": E_zz, "A": A, "B": Bv}


def ricci_matrix_h3(g: MetricGroup, profile: Profile, p: SurfacePoint) -> RicciBlocks:
    """Ricci matrix of the surface in the adapted basis of an H_3^(a,b) group."""
    if _solv(g):
        raise WrongGroupFamily("use solv_ricci_matrix on solvable extensions")
    _require_quaternionic(g)
    B, idx = adapted_basis(g, profile, p)
    r, route = _ricci_in_basis(g, profile, p, B)
    res, eps = _structure(r, idx)
    L, z = idx["L"], idx["z"]
    E_ll = float(r[idx["Ei"], idx["Ei"]] - eps)
    E_LL = float(r[L, L][0, 0] - eps)
    E_zz = float(r[z, z][0, 0] - eps)
    A, Bv = float(r[L, z][0, 0]), float(r[L, z][1, 0])
    d = profile.derivatives(float(p.Z @ p.Z))
    printed = printed_h3_scalars(float(p.Z @ p.Z), d["D"], d["D_tau"], d["D_tautau"], g.k)
    return RicciBlocks(matrix=r, basis=B, index=idx, eps=eps, E_ll=E_ll, E_LL=E_LL, E_zz=E_zz, A=A, B=Bv,
                       structure_residual=res, criterion=(A ** 2 + Bv ** 2 - E_LL * E_zz) ** 2,
                       route_residual=route, printed=printed)


@dataclass
class SolvRicciBlocks:
    matrix: np.ndarray
    basis: np.ndarray
    index: dict
    sigma: float
    coupling: np.ndarray  # (E_i, P, t) block minus sigma
    lt_determinant: float  # S_ll S_tt - S_lt^2 on (E_i, t)
    margin: float  # min |sigma - other eigenvalues|
    structure_residual: float
    route_residual: float

    def to_text(self) -> str:
        return (f"sigma={self.sigma:.10g} margin={self.margin:.6e} S_ll*S_tt-S_lt^2={self.lt_determinant:.6e} "
                f"structure_residual={self.structure_residual:.3e} route_residual={self.route_residual:.3e}")


def solv_ricci_matrix(g: SolvGroup, profile: Profile, p: SurfacePoint) -> SolvRicciBlocks:
    """Ricci matrix of the surface in the adapted basis of an SH_3^(a,b) group."""
    if not _solv(g):
        raise WrongGroupFamily("expected a solvable extension")
    _require_quaternionic(g)
    B, idx = adapted_basis(g, profile, p)
    r, route = _ricci_in_basis(g, profile, p, B)
    res, sigma = _structure(r, idx)
    grp = [idx["Ei"], idx["P"], idx["t"]]
    S = r[np.ix_(grp, grp)] - sigma * np.eye(3)
    K = idx["K"]
    mask = np.ones(r.shape[0], dtype=bool)
    mask[K] = False
    others = np.linalg.eigvalsh(r[np.ix_(mask, mask)])
    return SolvRicciBlocks(matrix=r, basis=B, index=idx, sigma=sigma, coupling=S,
                           lt_determinant=float(S[0, 0] * S[2, 2] - S[0, 2] ** 2),
                           margin=float(np.abs(others - sigma).min()), structure_residual=res,
                           route_residual=route)


# --- boundary Laplacian -------------------------------------------------------------

@dataclass
class LaplacianBundle:
    """Pointwise coefficient data of the boundary Laplacian on a sphere-type surface."""

    nu: np.ndarray  # unit normal (algebra)
    nu_Z: np.ndarray  # Euclidean unit normal of the Z-section, zero if undefined or torus-type
    gram: np.ndarray  # <J_a X, J_b X>
    D_dirs: np.ndarray  # J_a, stacked; D_a p = <J_a X, grad p>
    weights: dict  # scalar weights of the angular terms
    nu_t: float | None = None


def boundary_laplacian_fields(g, profile: Profile, p: SurfacePoint, torus: bool = False) -> LaplacianBundle:
    """Coefficients of every term of the boundary Laplacian at p.

    weights: S_X (X-sphere Laplacian), S_Z (Z-section Laplacian), gram (the
    1/4 <J_a X, J_b X> term), D (the D_a term), and on solvable groups tt
    (c^2 t^2) and t1 (c^2 (1 - k/2 - l) t).  The Z-section weight is t^2
    there, matching the ambient Laplacian.
    """
    d = check_point(g, profile, p)
    nil = _nil(g)
    basis = nil.space.basis
    JX = np.einsum("aij,j->ai", basis, p.X)
    grad = 2 * d["D_tau"] * p.Z
    nz = np.linalg.norm(grad)
    nu_Z = np.zeros(nil.l) if (torus or nz < 1e-14) else grad / nz
    nu = normal(g, profile, p)
    if _solv(g):
        t, c = p.t, g.c
        w = {"S_X": t, "S_Z": t ** 2, "gram": t / 4, "D": t, "tt": c ** 2 * t ** 2,
             "t1": c ** 2 * (1 - nil.k / 2 - nil.l) * t}
        return LaplacianBundle(nu=nu, nu_Z=nu_Z, gram=JX @ JX.T, D_dirs=basis.copy(), weights=w,
                               nu_t=float(nu[-1]))
    w = {"S_X": 1.0, "S_Z": 1.0, "gram": 0.25, "D": 1.0}
    return LaplacianBundle(nu=nu, nu_Z=nu_Z, gram=JX @ JX.T, D_dirs=basis.copy(), weights=w)


def coordinate_symbols(g) -> list:
    nil = _nil(g)
    syms = list(sp.symbols(f"x0:{nil.k}", real=True)) + list(sp.symbols(f"z0:{nil.l}", real=True))
    if _solv(g):
        syms.append(sp.Symbol("t", positive=True))
    return syms


def _derivs(g, f, p: SurfacePoint):
    syms = coordinate_symbols(g)
    pt = _coords(g, p)
    sub = dict(zip(syms, pt))
    grad = np.array([float(sp.diff(f, s).subs(sub)) for s in syms])
    hess = np.array([[float(sp.diff(f, a, b).subs(sub)) for b in syms] for a in syms])
    return grad, hess


def ambient_laplacian(g, p: SurfacePoint, grad, hess) -> float:
    """Laplacian of the ambient metric from coordinate derivatives."""
    F = frame(g, p)
    out = float(np.sum(F @ F.T * hess))
    if _solv(g):
        out += g.c ** 2 * (1 - g.k / 2 - g.l) * p.t * float(grad[-1])
    return out


@dataclass
class BoundaryLaplacian:
    tangential: float  # sum over tangent ON basis of Hess f - M f'
    normal_form: float  # Delta f - f'' - (Tr B) f'
    f_prime: float
    f_second: float


def boundary_laplacian(g, profile: Profile, p: SurfacePoint, f) -> BoundaryLaplacian:
    """Surface Laplacian of the restriction of f (sympy, in coordinate_symbols) at p, two ways."""
    fd = frame_data(g, profile, p)
    grad, hess = _derivs(g, f, p)
    Ef, H = frame_hessian(g, p, grad, hess)
    T = fd.tangent
    Mt = T.T @ fd.second_form @ T
    fp = float(fd.nu @ Ef)
    fpp = float(fd.nu @ H @ fd.nu)
    tang = float(np.trace(T.T @ H @ T) - np.trace(Mt) * fp)
    nform = ambient_laplacian(g, p, grad, hess) - fpp - float(np.trace(Mt)) * fp
    return BoundaryLaplacian(tangential=tang, normal_form=nform, f_prime=fp, f_second=fpp)
