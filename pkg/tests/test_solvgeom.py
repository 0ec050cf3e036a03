import numpy as np
import pytest
import sympy as sp
from numpy.testing import assert_allclose

from isospec import endospace as es
from isospec import nilgeom as ng
from isospec import solvgeom as sg
from isospec.liealg import pairs


def solv(l=3, a=1, b=0, c=1.0):
    return sg.SolvGroup(ng.MetricGroup(es.clifford_space(l, a, b)), c)


@pytest.fixture(scope="module", params=[(1, 1, 0, 1.0), (3, 1, 0, 1.0), (3, 1, 1, 0.7), (3, 2, 0, 1.3)])
def group(request):
    l, a, b, c = request.param
    return solv(l, a, b, c)


def rand_point(g, rng):
    return sg.SolvPoint(rng.standard_normal(g.k), rng.standard_normal(g.l), float(rng.uniform(0.3, 3)))


def as_vec(p):
    return np.concatenate([p.x, p.z, [p.t]])


def test_c_must_be_positive():
    with pytest.raises(ValueError):
        solv(c=0.0)
    with pytest.raises(ValueError):
        sg.SolvPoint(np.zeros(2), np.zeros(1), 0.0)


def test_group_law(group, rng):
    p, q, r = (rand_point(group, rng) for _ in range(3))
    e = sg.identity(group)
    assert_allclose(as_vec(sg.multiply(group, p, e)), as_vec(p), atol=1e-14)
    assert_allclose(as_vec(sg.multiply(group, e, p)), as_vec(p), atol=1e-14)
    lhs = sg.multiply(group, sg.multiply(group, p, q), r)
    rhs = sg.multiply(group, p, sg.multiply(group, q, r))
    assert_allclose(as_vec(lhs), as_vec(rhs), atol=1e-12)
    assert_allclose(as_vec(sg.multiply(group, p, sg.inverse(group, p))), as_vec(e), atol=1e-12)


def test_t1_restriction_is_nilpotent_product(group, rng):
    p, q = (sg.SolvPoint(rng.standard_normal(group.k), rng.standard_normal(group.l), 1.0) for _ in range(2))
    r = sg.multiply(group, p, q)
    assert r.t == 1.0
    assert_allclose(r.x, p.x + q.x)
    assert_allclose(r.z, p.z + q.z + 0.5 * group.nil.zbracket(p.x, q.x), atol=1e-14)


def test_frame_at_identity(group):
    F = sg.solv_frame(group, sg.identity(group))
    assert_allclose(F, np.diag([1.0] * (group.n - 1) + [group.c]))


def test_frame_orthonormal(group, rng):
    p = rand_point(group, rng)
    F = sg.solv_frame(group, p)
    assert_allclose(F.T @ sg.coordinate_metric(group, p) @ F, np.eye(group.n), atol=1e-12)


def test_frame_is_left_translate(group, rng):
    """d/ds p . c(s) at s = 0 for the one-parameter curves through the identity."""
    p = rand_point(group, rng)
    F = sg.solv_frame(group, p)
    h = 1e-5
    for j in range(group.n):
        def curve(s):
            x, z = np.zeros(group.k), np.zeros(group.l)
            t = 1.0
            if j < group.k:
                x[j] = s
            elif j < group.k + group.l:
                z[j - group.k] = s
            else:
                t = np.exp(group.c * s)
            return as_vec(sg.multiply(group, p, sg.SolvPoint(x, z, t)))
        d = (curve(h) - curve(-h)) / (2 * h)
        assert_allclose(d, F[:, j], atol=1e-8)


def test_frame_brackets(group, rng):
    """Lie brackets of the frame fields, by central differences, match the structure constants."""
    p = rand_point(group, rng)
    y = as_vec(p)
    h = 1e-5

    def frame_at(v):
        return sg.solv_frame(group, sg.SolvPoint(v[: group.k], v[group.k:-1], v[-1]))

    F = frame_at(y)
    dF = np.stack([(frame_at(y + h * e) - frame_at(y - h * e)) / (2 * h) for e in np.eye(group.n)])
    C = group.algebra.C
    for i in range(group.n):
        for j in range(group.n):
            br = np.einsum("k,kc->c", F[:, i], dF[:, :, j]) - np.einsum("k,kc->c", F[:, j], dF[:, :, i])
            assert_allclose(br, F @ C[i, j], atol=1e-7)
    # [T, X] = c/2 X, [T, Z] = c Z
    T = np.eye(group.n)[-1]
    X = np.eye(group.n)[0]
    Z = np.eye(group.n)[group.k]
    assert_allclose(group.algebra.bracket(T, X), 0.5 * group.c * X)
    assert_allclose(group.algebra.bracket(T, Z), group.c * Z)


def test_nabla_c_cases(group, rng):
    T = group.join(t=1.0)
    U = rng.standard_normal(group.n)
    assert_allclose(sg.nabla_c(group, T, U), 0, atol=1e-15)
    X = group.join(x=rng.standard_normal(group.k))
    assert_allclose(sg.nabla_c(group, X, T), -0.5 * group.c * X, atol=1e-15)


def test_nabla_c_matches_koszul(group, rng):
    U, V = rng.standard_normal((2, group.n))
    assert_allclose(sg.nabla_c(group, U, V), group.algebra.nabla(U, V), atol=1e-13)


def test_nabla_c_metric_and_torsion_free(group, rng):
    P, Q, R = rng.standard_normal((3, group.n))
    assert abs(sg.nabla_c(group, P, Q) @ R + Q @ sg.nabla_c(group, P, R)) <= 1e-10
    assert_allclose(sg.nabla_c(group, P, Q) - sg.nabla_c(group, Q, P), group.algebra.bracket(P, Q), atol=1e-10)


def test_curvature_operator_matches_commutator_oracle(group):
    M = sg.curvature_operator_c(group)
    assert np.abs(M - M.T).max() <= 1e-12
    assert_allclose(M, sg.curvature_operator_oracle(group), atol=1e-9)


def test_zz_row_shift(group, rng):
    """R_c(Z* ^ Z) = R(Z* ^ Z) + c^2 Z* ^ Z on the z-z rows."""
    M = sg.curvature_operator_c(group)
    MN = ng.curvature_operator(group.nil)
    P, PN = pairs(group.n), pairs(group.n - 1)
    for r, (i, j) in enumerate(P):
        if group.k <= i < group.n - 1 and group.k <= j < group.n - 1:
            rn = PN.index((i, j))
            nil_row = np.zeros(len(P))
            for cn, (p, q) in enumerate(PN):
                nil_row[P.index((p, q))] = MN[rn, cn]
            nil_row[r] += group.c ** 2
            assert_allclose(M[r], nil_row, atol=1e-12)


def test_ricci_c_blocks(group):
    c, k, l = group.c, group.k, group.l
    R = sg.ricci_matrix_c(group)
    assert R[-1, -1] == pytest.approx(-c * c * (k / 4 + l))
    assert_allclose(R, group.algebra.ricci_matrix(), atol=1e-12)
    assert_allclose(R[:k, k:], 0, atol=0)
    assert_allclose(R[k:k + l, -1], 0, atol=0)


def test_sh3_10_is_einstein():
    R = sg.ricci_matrix_c(solv(3, 1, 0, 1.0))
    assert_allclose(np.linalg.eigvalsh(R), -4.0, atol=1e-10)


def _laplace_beltrami(k, l, J, c):
    """First- and second-order coefficients of the Laplace-Beltrami operator (sympy)."""
    xs = sp.symbols(f"x0:{k}", real=True)
    zs = sp.symbols(f"z0:{l}", real=True)
    t = sp.Symbol("t", positive=True)
    cs = sp.nsimplify(c)
    coords = list(xs) + list(zs) + [t]
    n = k + l + 1
    F = sp.zeros(n, n)
    for i in range(k):
        F[i, i] = sp.sqrt(t)
        for a in range(l):
            # t^(1/2) X_i with X_i = d_i + 1/2 <J_a X, E_i> d_a
            F[k + a, i] = sp.sqrt(t) * sp.Rational(1, 2) * sum(J[a][i, j] * xs[j] for j in range(k))
    for a in range(l):
        F[k + a, k + a] = t
    F[n - 1, n - 1] = cs * t
    ginv = sp.simplify(F * F.T)
    sqrtg = 1 / sp.simplify(F.det())
    first = [sp.simplify(sum(sp.diff(sqrtg * ginv[i, j], coords[i]) for i in range(n)) / sqrtg) for j in range(n)]
    return coords, ginv, first


@pytest.mark.parametrize("l,c", [(1, 1.0), (1, 0.5), (3, 1.0)])
def test_laplacian_against_laplace_beltrami(l, c, rng):
    g = solv(l, 1, 0, c)
    J = [sp.Matrix(B.astype(int)) for B in g.nil.space.basis]
    coords, ginv, first = _laplace_beltrami(g.k, g.l, J, c)
    p = rand_point(g, rng)
    sub = dict(zip(coords, as_vec(p)))
    coef = sg.laplacian_coefficients(g, p)
    assert_allclose(np.array(ginv.subs(sub), dtype=float), coef["second_order"], atol=1e-12)
    assert_allclose(np.array([float(f.subs(sub)) for f in first]), coef["first_order"], atol=1e-12)
    # the Z-block of the principal part carries t^2
    zz = coef["second_order"][g.k:g.k + g.l, g.k:g.k + g.l]
    assert_allclose(np.diag(zz)[0], p.t ** 2 + 0.25 * p.t * np.sum((g.nil.space.basis[0] @ p.x) ** 2), atol=1e-12)


# --- isotonality -------------------------------------------------------------------

def nil(l, a, b):
    return ng.MetricGroup(es.clifford_space(l, a, b))


def test_isotonal_equal_pair_multiset_equal():
    rep = sg.isotonal_decomposition(nil(3, 1, 1), nil(3, 1, 1))
    assert rep.multiset_verdict.passed
    assert rep.invariance_residual <= 1e-9


def test_isotonal_13_vs_22_block_structure():
    rep = sg.isotonal_decomposition(nil(3, 1, 3), nil(3, 2, 2))
    assert rep.invariance_residual <= 1e-9
    for key in ("F", "DgPerp", "G"):
        assert rep.block_verdicts[key].relation == "isotonal"
    # frozen: the Dg block differs (see the decisions ledger)
    assert rep.block_verdicts["Dg"].relation == "different"
    assert rep.set_verdict.distance == pytest.approx(0.2857, abs=1e-4)
    assert not rep.multiset_verdict.passed


def test_isotonal_reflection_about_zero_on_nilpotent():
    rep = sg.isotonal_decomposition(nil(3, 1, 3), nil(3, 2, 2))
    assert rep.reflection["center"] == pytest.approx(0.0, abs=1e-12)
    assert rep.reflection["residual"] <= 1e-12


def test_isotonal_solvable_reflection_center_is_c2_over_4():
    rep = sg.isotonal_decomposition(solv(3, 2, 2, 1.0), solv(3, 1, 3, 1.0))
    assert rep.reflection["center"] == pytest.approx(0.25, abs=1e-12)
    assert rep.invariance_residual <= 1e-9


def test_isotonal_sh40_vs_sh22_not_subtonal():
    rep = sg.isotonal_decomposition(solv(3, 4, 0), solv(3, 2, 2))
    assert rep.set_verdict.relation in ("different", "supertonal")
    assert np.any(np.abs(rep.total1.values - 5.0) < 1e-9)
    assert not np.any(np.abs(rep.total2.values - 5.0) < 1e-6)


def test_copy_structure_from_labels():
    assert sg.copy_structure(es.clifford_space(3, 1, 3)) == (4, 1, 3)
    with pytest.raises(ValueError):
        sg.copy_structure(es.build_endo_space([[[0, 1], [-1, 0]]]))


def test_block_not_invariant_error_carries_residual():
    err = sg.BlockNotInvariant(0.25)
    assert err.residual == 0.25 and "0.25" in str(err)
