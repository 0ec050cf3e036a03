"""Acceptance gate: one PASS/FAIL line per criterion, collected in the terminal summary.

Criteria 1, 2 and 4 contain a clause that does not hold; those tests are strict
xfail and the attainable parts are asserted in companion tests.
"""
import numpy as np
import pytest

from isospec import endospace as es
from isospec import harmonics as H
from isospec import hypersurface as hs
from isospec import nilgeom as ng
from isospec import solvgeom as sg
from isospec import spectra as S
from isospec.nilgeom import MetricGroup
from isospec.polys import GradedPoly, monomial_space
from isospec.solvgeom import SolvGroup

TOL = 1e-8
PERP_FREE = ("spherical_laplacian", "D_A", "M_cd", "JA_norm")


def report(record, n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    record("acceptance", line)
    print("\n" + line)
    return ok


@pytest.fixture(scope="module")
def pair():
    return es.clifford_space(3, 1, 1), es.clifford_space(3, 2, 0)


@pytest.fixture(scope="module")
def certificate(pair):
    return H.verify_intertwining(*pair, r_max=6, tol=TOL)


def scaled_control(space, factor=1.1):
    mats = [M.astype(float) for M in space.basis]
    mats[0] = factor * mats[0]
    return es.build_endo_space(mats)


# --- 1. intertwining certificate -------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="no invertible kappa conjugates D_perp: degree-1 intertwiners have rank <= 5 < 8")
def test_criterion_1_intertwining(pair, certificate, record_property):
    control = H.verify_intertwining(pair[0], scaled_control(pair[1]), r_max=6, tol=TOL)
    ok = certificate.all_passed and control.residuals["JA_norm"] >= 1e-2
    report(record_property, 1, ok, " ".join(f"{f}={r:.2e}" for f, r in certificate.residuals.items()))
    assert ok


def test_criterion_1_attainable_part(pair, certificate):
    for f in PERP_FREE:
        assert certificate.residuals[f] <= TOL, f
    control = H.verify_intertwining(pair[0], scaled_control(pair[1]), r_max=6, tol=TOL,
                                    families=("JA_norm", "M_cd"))
    assert control.residuals["JA_norm"] >= 1e-2


def test_criterion_1_obstruction(pair):
    # linear maps K on H^(1) = (R^8)* with K F^T = F'^T K for every basis endomorphism
    s, sp_ = pair
    k = s.k
    M = np.vstack([np.kron(np.eye(k), F.T) - np.kron(Fp, np.eye(k)) for F, Fp in zip(s.basis, sp_.basis)])
    from scipy.linalg import null_space
    N = null_space(M)
    rng = np.random.default_rng(0)
    ranks = [np.linalg.matrix_rank((N @ rng.normal(size=N.shape[1])).reshape(k, k)) for _ in range(10)]
    assert max(ranks) < k


# --- 2. solvable variant -------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="inherits the D_perp obstruction of criterion 1")
def test_criterion_2_solvable(pair, certificate, record_property):
    rep = H.solvable_intertwining(*pair, s=1.0, n_points=20, base=certificate, tol=TOL)
    report(record_property, 2, rep.all_passed, f"bundle={rep.bundle_residual:.2e} D_perp={rep.residuals['D_perp']:.2e}")
    assert rep.all_passed


def test_criterion_2_attainable_part(pair, certificate):
    rep = H.solvable_intertwining(*pair, s=1.0, n_points=20, base=certificate, tol=TOL)
    assert rep.bundle_residual <= TOL
    for f in PERP_FREE:
        assert rep.residuals[f] <= TOL, f


# --- 3. reduced-operator isospectrality ------------------------------------------------

def test_criterion_3_reduced_operators(record_property):
    s1, s2 = es.clifford_space(3, 1, 0), es.clifford_space(3, 0, 1)
    beta = np.array([0.3, 0.2, 0.1])
    J1, J2 = s1.J(beta), s2.J(beta)
    O = S.orthogonal_conjugator(J1, J2)
    rep = S.compare_reduced(J1, J2, beta, N=20, n_eigs=10, conjugator=O)
    ok = rep.exact_residual <= TOL and rep.passed
    report(record_property, 3, ok, f"exact={rep.exact_residual:.2e} max|diff|/cauchy="
                  f"{np.max(rep.difference / np.maximum(rep.cauchy, 1e-300)):.2e}")
    assert ok


# --- 4. isotonality --------------------------------------------------------------------

def _groups(spec):
    return [MetricGroup(es.clifford_space(3, a, b)) for a, b in spec]


@pytest.mark.xfail(strict=True, reason="N3^(1,3) and N3^(2,2) spectra differ as sets (Hausdorff 0.2857)")
def test_criterion_4_isotonality(record_property):
    g13, g22 = _groups([(1, 3), (2, 2)])
    rep = sg.isotonal_decomposition(g13, g22)
    sub = sg.isotonal_decomposition(SolvGroup(_groups([(4, 0)])[0], 1.0), SolvGroup(g22, 1.0))
    ok = (rep.set_verdict.passed and not rep.multiset_verdict.passed
          and sub.set_verdict.relation in ("subtonal", "isotonal") and rep.invariance_residual <= 1e-9)
    report(record_property, 4, ok, f"hausdorff={rep.set_verdict.distance:.4f} sub={sub.set_verdict.relation}")
    assert ok


def test_criterion_4_attainable_part():
    g13, g22 = _groups([(1, 3), (2, 2)])
    rep = sg.isotonal_decomposition(g13, g22)
    assert rep.invariance_residual <= 1e-9
    assert not rep.multiset_verdict.passed
    sub = sg.isotonal_decomposition(SolvGroup(_groups([(4, 0)])[0], 1.0), SolvGroup(g22, 1.0))
    assert sub.invariance_residual <= 1e-9


# --- 5. constructive unit conjugator ---------------------------------------------------

def random_unit_instance(rng):
    copies = int(rng.integers(1, 4))
    Li, Lj, Lk = (es.left_mult(u).astype(float) for u in ((0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)))
    theta = rng.uniform(-np.pi, np.pi, size=copies)
    A0 = np.kron(np.eye(copies), Li)
    B0 = sum(np.kron(np.diag(np.eye(copies)[c]), np.cos(t) * Li + np.sin(t) * Lj) for c, t in enumerate(theta))
    return A0, B0, [np.kron(np.eye(copies), Lk)]


def test_criterion_5_unit_conjugator(record_property):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        uc = es.unit_endo_conjugator(*random_unit_instance(rng))
        worst = max(worst, max(uc.residuals.values()))
    ok = worst <= 1e-9
    report(record_property, 5, ok, f"max identity residual over 100 instances={worst:.2e}")
    assert ok


# --- 6. curvature sanity -----------------------------------------------------------------

def test_criterion_6_curvature_sanity(rng, record_property):
    checks = []
    for l, a, b in ((1, 1, 0), (3, 1, 1), (3, 2, 0), (7, 1, 0)):
        g = MetricGroup(es.clifford_space(l, a, b))
        Zs = [np.concatenate([np.zeros(g.k), rng.normal(size=g.l)]) for _ in range(3)]
        checks.append(np.abs(ng.riemann(g, *Zs)).max() == 0)
        w = np.sort(np.linalg.eigvalsh(ng.ricci_matrix(g)))
        checks.append(np.abs(w - np.sort([-l / 2] * g.k + [g.k / 4] * l)).max() <= 1e-10)
    heis = MetricGroup(es.clifford_space(1, 1, 0))
    checks.append(abs(ng.sectional_curvature(heis, [1, 0, 0], [0, 1, 0]) + 0.75) <= 1e-12)
    sh = SolvGroup(MetricGroup(es.clifford_space(3, 1, 0)), 1.0)
    checks.append(np.abs(np.linalg.eigvalsh(sg.ricci_matrix_c(sh)) + 4).max() <= 1e-10)
    ok = all(checks)
    report(record_property, 6, ok, f"{sum(checks)}/{len(checks)} checks")
    assert ok


# --- 7. harmonic machinery -----------------------------------------------------------------

def test_criterion_7_harmonics(rng, h3_11, record_property):
    checks = []
    for k in (4, 8):
        ms = monomial_space(k)
        basis = H.HarmonicBasis(k, 6)
        for q in range(7):
            rank = np.linalg.matrix_rank(ms.lap(q).toarray()) if q >= 2 else 0
            checks.append(H.harmonic_dimension(k, q) == ms.dim(q) - rank == basis.dim(q))
    lap_res = 0.0
    for k, d in ((4, 6), (8, 4), (5, 5)):
        n = monomial_space(k).dim(d)
        p = GradedPoly.from_dense(k, d, rng.normal(size=n))
        lap_res = max(lap_res, H.harmonic_project(p).laplacian().max_abs())
    checks.append(lap_res <= 1e-10)
    A0 = h3_11.basis[0].astype(float)
    basis8 = H.HarmonicBasis(8, 4)
    split_res = 0.0
    for q in range(5):
        sp_ = H.hq_split(q, A0, basis8)
        s = np.round((sp_.eigenvalues.imag + q) / 2)
        split_res = max(split_res, np.abs(sp_.eigenvalues - (2 * s - q) * 1j).max())
    checks.append(split_res <= 1e-9)
    p = GradedPoly.from_dense(4, 4, rng.normal(size=monomial_space(4).dim(4)))
    printed = H.harmonic_project(p, coefficients=H.printed_recursion_coefficients(4)).laplacian().max_abs()
    checks.append(printed > 1e-3)
    ok = all(checks)
    report(record_property, 7, ok, f"laplacian={lap_res:.1e} split={split_res:.1e} printed recursion laplacian={printed:.2e}")
    assert ok


# --- 8. geodesic-sphere geometry ----------------------------------------------------------

def test_criterion_8_geodesic_sphere(rng, record_property):
    s20 = SolvGroup(MetricGroup(es.clifford_space(3, 2, 0)), 1.0)
    s11 = SolvGroup(MetricGroup(es.clifford_space(3, 1, 1)), 1.0)
    sphere = hs.geodesic_sphere_profile(1.0)
    trip = 0.0
    for _ in range(50):
        v = rng.normal(size=12)
        v *= rng.uniform(0, 0.99) / np.linalg.norm(v)
        X, Z, u = hs.cayley_inverse(s11, hs.cayley(s11, v[:8], v[8:11], v[11]))
        trip = max(trip, np.abs(X - v[:8]).max(), np.abs(Z - v[8:11]).max(), abs(u - v[11]))
    lo, hi = hs.t_axis_intersections(1.0)
    axis = max(abs(lo - np.exp(-1.0)), abs(hi - np.exp(1.0)))
    pts = [hs.snap_to_surface(sphere, p) for p in hs.sample_geodesic_sphere(s20, 1.0, 30, seed=8)]
    kap = np.array([hs.scalar_curvature(s20, sphere, p) for p in pts])
    rel_std = np.std(kap) / abs(np.mean(kap))
    L20 = max(hs.tensor_L_norm(s20, sphere, p) for p in pts[:10])
    pts11 = [hs.snap_to_surface(sphere, p) for p in hs.sample_geodesic_sphere(s11, 1.0, 10, seed=8)]
    L11 = min(hs.tensor_L_norm(s11, sphere, p) for p in pts11)
    pure = hs.snap_to_surface(sphere, hs.SurfacePoint(np.eye(8)[0] * 0.3, np.array([0.2, 0.1, 0.0]), 1.0))
    L_pure = hs.tensor_L_norm(s11, sphere, pure)
    ok = trip <= 1e-10 and axis <= 1e-10 and rel_std <= 1e-7 and L20 <= 1e-9 and L11 > 1e-3 and L_pure <= 1e-9
    report(record_property, 8, ok, f"roundtrip={trip:.1e} axis={axis:.1e} rel_std={rel_std:.1e} "
                  f"L(2,0)={L20:.1e} min L(1,1)={L11:.3f} L(pure)={L_pure:.1e}")
    assert ok


# --- 9. Hopf-hull scalar curvature ----------------------------------------------------------

def test_criterion_9_hopf_closed_form(record_property):
    worst = 0.0
    profiles = (hs.euclidean_profile(2.0), hs.polynomial_profile({(0, 0): 1.5, (1, 0): -1.0, (2, 0): -0.2}))
    samples = [hs.hopf_curvature(prof, n_samples=50).sample_tau for prof in profiles]
    for l, a, b in ((1, 1, 0), (3, 1, 1), (3, 2, 0)):
        g = MetricGroup(es.clifford_space(l, a, b))
        for prof, taus in zip(profiles, samples):
            for tau in taus:
                d = prof.derivatives(tau)
                closed = hs.hopf_terms_closed(tau, d["D"], d["D_tau"], d["D_tautau"], g.k, g.l)
                oracle = hs.hopf_terms_oracle(g, prof, np.eye(g.l)[0], np.eye(g.k)[0], tau)
                worst = max(worst, abs(closed.scalar - oracle.scalar) / max(1.0, abs(oracle.scalar)))
    ok = worst <= 1e-8
    report(record_property, 9, ok, f"max relative scalar mismatch over 50 tau x 6 cases={worst:.2e}")
    assert ok
