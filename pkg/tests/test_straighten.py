"""Straightening map, reflected coefficients, odd extension, certificates."""
import math

import numpy as np
import pytest

from freqlab import (
    CoefficientField,
    GraphDomain,
    Mollifier,
    QuadratureSpec,
    StraighteningMap,
    coefficient_A,
    conormal_jump,
    extend_field,
    map_G,
    modulus_certificate,
    plane_harmonic,
    radial_bump,
    separation_pairs,
    weak_residual,
)

RNG = np.random.default_rng(29)


def test_mollifier_certified_identities():
    for d in (2, 3):
        m = Mollifier(d)
        assert m.identity_mass == pytest.approx(1.0, abs=1e-12)
        assert m.identity_dilation == pytest.approx(-(d - 1), abs=1e-10)
        assert max(abs(g) for g in m.identity_grad) <= 1e-14


def test_mollifier_dimension_guard():
    with pytest.raises(ValueError):
        Mollifier(4)


def test_flat_map_is_identity(flat2):
    sm = StraighteningMap(flat2)
    x = RNG.uniform(-0.5, 0.5, size=(20, 1))
    s = RNG.uniform(0.0, 0.5, size=20)
    pts = map_G(sm, x, s)
    np.testing.assert_allclose(pts[:, 0], x[:, 0], atol=1e-15)
    np.testing.assert_allclose(pts[:, 1], s, atol=1e-15)
    A = coefficient_A(sm, x, s)
    np.testing.assert_allclose(A, np.broadcast_to(np.eye(2), A.shape),
                               atol=1e-14)


def test_jacobian_self_check_on_curved_map(qbump):
    sm = StraighteningMap(qbump)
    x = RNG.uniform(-0.3, 0.3, size=(8, 1))
    s = RNG.uniform(0.01, 0.3, size=8)
    # raises SelfCheckError if the analytic jacobian drifts from the
    # finite-difference probe
    sm.jacobian_DG(x, s, self_check=True)


def test_working_radius_flat_hits_cap(flat2):
    sm = StraighteningMap(flat2)
    w = sm.find_working_radius()
    assert w == pytest.approx(4.0 * flat2.R)


def test_working_radius_keeps_determinant_pinned():
    dom = GraphDomain.power_alpha(0.1, 0.5)
    sm = StraighteningMap(dom)
    w = sm.find_working_radius()
    assert 0.0 < w
    x = RNG.uniform(-w / 3, w / 3, size=(30, 1))
    s = RNG.uniform(0.0, w / 3, size=30)
    dets = sm.det_DG(x, s)
    assert np.all((dets >= 0.5) & (dets <= 1.5))


def test_coefficient_symmetric_elliptic(qbump):
    sm = StraighteningMap(qbump)
    coef = CoefficientField(sm)
    x = RNG.uniform(-0.3, 0.3, size=(40, 1))
    s = RNG.uniform(-0.3, 0.3, size=40)
    A = coef.matrix(x, s)
    np.testing.assert_allclose(A, np.transpose(A, (0, 2, 1)), atol=1e-15)
    lo, hi = coef.ellipticity(x, s)
    assert 0.9 < lo <= hi < 1.1  # gentle bump: near-identity coefficients


def test_coefficient_reflection_parity(qbump):
    sm = StraighteningMap(qbump)
    coef = CoefficientField(sm)
    x = RNG.uniform(-0.3, 0.3, size=(15, 1))
    s = RNG.uniform(0.01, 0.3, size=15)
    A_up = coef.matrix(x, s)
    A_dn = coef.matrix(x, -s)
    # even diagonal blocks, odd mixed column
    np.testing.assert_allclose(A_dn[:, 0, 0], A_up[:, 0, 0], atol=1e-15)
    np.testing.assert_allclose(A_dn[:, 1, 1], A_up[:, 1, 1], atol=1e-15)
    np.testing.assert_allclose(A_dn[:, 0, 1], -A_up[:, 0, 1], atol=1e-15)


def test_boundary_matrix_is_two_sided_limit(qbump):
    sm = StraighteningMap(qbump)
    coef = CoefficientField(sm)
    x = np.array([[0.2]])
    A0 = coef.boundary_matrix(x)
    for h in (1e-3, 1e-5):
        gap_up = np.max(np.abs(coef.matrix(x, [h]) - A0))
        gap_dn = np.max(np.abs(coef.matrix(x, [-h]) - A0))
        assert max(gap_up, gap_dn) <= 5.0 * h + 1e-10


def test_extension_odd_parity(qbump, mfs_qbump):
    sm = StraighteningMap(qbump)
    ext = extend_field(mfs_qbump, sm)
    x = RNG.uniform(-0.3, 0.3, size=(20, 1))
    s = RNG.uniform(0.01, 0.3, size=20)
    up = np.column_stack([x, s])
    dn = np.column_stack([x, -s])
    np.testing.assert_allclose(ext.value(dn), -ext.value(up), rtol=1e-13)
    g_up, g_dn = ext.gradient(up), ext.gradient(dn)
    np.testing.assert_allclose(g_dn[:, 0], -g_up[:, 0], rtol=1e-12)
    np.testing.assert_allclose(g_dn[:, 1], g_up[:, 1], rtol=1e-12)


def test_extension_pulls_back_the_field(qbump, mfs_qbump):
    sm = StraighteningMap(qbump)
    ext = extend_field(mfs_qbump, sm)
    x = RNG.uniform(-0.3, 0.3, size=(10, 1))
    s = RNG.uniform(0.05, 0.3, size=10)
    np.testing.assert_allclose(ext.value(np.column_stack([x, s])),
                               mfs_qbump.value(map_G(sm, x, s)), rtol=1e-13)


def test_weak_residual_small_for_solution(qbump, mfs_qbump):
    sm = StraighteningMap(qbump)
    ext = extend_field(mfs_qbump, sm)
    coef = CoefficientField(sm)
    # straddling but off-center in both chart and height: a mirror
    # symmetric bump is cancelled by parity and certifies nothing
    res = weak_residual(coef, ext, np.array([0.13, 0.012]), 0.04)
    assert abs(res) <= 1e-4


def test_weak_residual_mirror_symmetric_bump_says_nothing(qbump):
    # with the bump centered on the interface the up and down halves
    # cancel exactly for any integrand parity, even for a field that does
    # not solve the equation at all
    sm = StraighteningMap(qbump)
    ext = extend_field(plane_harmonic(2) + plane_harmonic(3), sm)
    coef = CoefficientField(sm)
    res = weak_residual(coef, ext, np.array([0.1, 0.0]), 0.05,
                        QuadratureSpec(radial=12, angular=12, tol=1e-6))
    assert abs(res) <= 1e-13


def test_conormal_flux_cancels_by_construction(qbump, mfs_qbump):
    # the reflected matrix is built so the two one-sided conormal fluxes
    # cancel identically, at every height, not just in the limit
    sm = StraighteningMap(qbump)
    ext = extend_field(mfs_qbump, sm)
    coef = CoefficientField(sm)
    x = np.linspace(-0.25, 0.25, 7)[:, None]
    for h in (0.05, 0.01, 0.002):
        assert conormal_jump(coef, ext, x, h) <= 1e-12


def test_radial_bump_support_and_gradient():
    val, grad = radial_bump(np.array([0.2, 0.1]), 0.3)
    outside = np.array([[0.2, 0.45], [1.0, 1.0]])
    np.testing.assert_allclose(val(outside), 0.0)
    np.testing.assert_allclose(grad(outside), 0.0)
    center = np.array([[0.2, 0.1]])
    assert val(center)[0] > 0
    np.testing.assert_allclose(grad(center), 0.0)
    # gradient consistent with values
    p = np.array([[0.3, 0.15]])
    h = 1e-7
    fd = (val(p + [h, 0.0]) - val(p - [h, 0.0])) / (2 * h)
    assert grad(p)[0, 0] == pytest.approx(fd[0], rel=1e-5)


def test_separation_pairs_ladder():
    pairs = separation_pairs(box=0.5, levels=4, per_level=6)
    assert len(pairs) == 4 * 6 * 2 * 3
    # deterministic construction
    again = separation_pairs(box=0.5, levels=4, per_level=6)
    for (a, b), (c, d) in zip(pairs, again):
        np.testing.assert_array_equal(a, c)
        np.testing.assert_array_equal(b, d)
    dists = [np.linalg.norm(a - b) for a, b in pairs]
    assert min(dists) < 0.25 * 0.25 ** 3 * 1.5
    assert max(dists) <= 0.25 * 1.5


def test_modulus_certificate_frozen_values():
    dom = GraphDomain.power_alpha(0.1, 0.5)
    coef = CoefficientField(StraighteningMap(dom))
    pairs = separation_pairs(box=0.5, levels=4, per_level=6)
    deep = separation_pairs(box=0.5, levels=16, per_level=6)
    c = modulus_certificate(coef, 0.5, pairs)
    assert c == pytest.approx(0.23742302263076334, rel=1e-12)
    # the matching exponent is stable under a 4x deeper zoom
    assert modulus_certificate(coef, 0.5, deep) == pytest.approx(c, rel=1e-12)
    # an overstated exponent blows up under the same zoom
    wrong = modulus_certificate(coef, 0.75, pairs)
    assert modulus_certificate(coef, 0.75, deep) / wrong == pytest.approx(
        63.800758231038294, rel=1e-9)
