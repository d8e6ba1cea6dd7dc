"""Slope moduli, graph domains, critical scale, admissibility."""
import math

import numpy as np
import pytest

from freqlab import (
    DiniParameter,
    GeometryError,
    GraphDomain,
    admissibility,
    critical_scale,
    dini_integral,
    nearest_boundary,
    normal_vector,
    smooth_theta,
)


def test_holder_modulus_closed_form_integral():
    theta = DiniParameter.holder(0.3, 0.5)
    # int_a^b C s^(alpha-1) ds = C (b^alpha - a^alpha) / alpha
    got = dini_integral(theta, 0.01, 0.81)
    want = 0.3 * (0.81 ** 0.5 - 0.01 ** 0.5) / 0.5
    assert got == pytest.approx(want, rel=1e-14)


def test_holder_modulus_integral_from_zero_converges():
    theta = DiniParameter.holder(1.0, 0.25)
    assert dini_integral(theta, 0.0, 1.0) == pytest.approx(4.0, rel=1e-14)


def test_tabulated_integral_matches_quadrature():
    theta = DiniParameter.tabulated([0.0, 0.5, 1.0, 2.0], [0.0, 0.2, 0.25, 0.25])
    a, b = 0.05, 1.7
    s = np.linspace(a, b, 400001)
    brute = np.trapezoid(theta(s) / s, s)
    assert theta.integral(a, b) == pytest.approx(brute, rel=1e-6)


def test_smoothed_modulus_sandwich():
    theta = DiniParameter.holder(0.2, 0.7)
    for r in [0.01, 0.1, 0.5]:
        sm = smooth_theta(theta, r)
        assert theta(r) <= sm <= theta(4.0 * r)


def test_smoothed_modulus_holder_closed_form():
    al, c, r = 0.6, 0.11, 0.23
    theta = DiniParameter.holder(c, al)
    want = c * (2.0 ** al - 1.0) ** 2 * r ** al / (al * math.log(2.0)) ** 2
    assert smooth_theta(theta, r) == pytest.approx(want, rel=1e-13)


def test_smoothed_modulus_tabulated_agrees_with_holder_grid():
    # sample a holder modulus onto a dense table; the quadrature-based
    # smoothing must reproduce the closed form
    al, c = 0.5, 0.15
    holder = DiniParameter.holder(c, al)
    radii = np.linspace(0.0, 8.0, 4000)
    tab = DiniParameter.tabulated(radii, c * radii ** al)
    for r in [0.05, 0.3, 1.2]:
        assert smooth_theta(tab, r) == pytest.approx(
            smooth_theta(holder, r), rel=2e-3)


def test_modulus_validation():
    with pytest.raises(ValueError):
        DiniParameter.holder(-1.0, 0.5)
    with pytest.raises(ValueError):
        DiniParameter.holder(1.0, 1.5)
    with pytest.raises(ValueError):
        DiniParameter.tabulated([0.0, 1.0], [0.1, 0.2])  # must start at 0
    with pytest.raises(ValueError):
        DiniParameter.tabulated([0.0, 1.0, 0.5], [0.0, 0.1, 0.2])


def test_flat_domain_geometry(flat2):
    x = np.array([[0.3], [-0.2]])
    assert np.all(flat2.phi(x) == 0.0)
    assert flat2.is_flat
    nv = normal_vector(flat2, np.array([0.1]))
    np.testing.assert_allclose(nv, [0.0, 1.0])
    foot, dist = nearest_boundary(flat2, np.array([0.4, 0.25]))
    np.testing.assert_allclose(foot, [0.4, 0.0], atol=1e-12)
    assert dist == pytest.approx(0.25)


def test_quadratic_bump_height_and_normal(qbump):
    a = 5e-4
    x = np.array([0.2])
    assert qbump.phi(x) == pytest.approx(a * 0.04)
    nv = normal_vector(qbump, x)
    grad = 2.0 * a * 0.2
    np.testing.assert_allclose(
        nv, np.array([-grad, 1.0]) / math.hypot(grad, 1.0), rtol=1e-12)
    assert nv @ nv == pytest.approx(1.0)


def test_contains_respects_graph(qbump):
    above = np.array([0.1, 0.5])
    below = np.array([0.1, -0.5])
    assert qbump.contains(above)
    assert not qbump.contains(below)


def test_nearest_boundary_on_curved_graph(qbump):
    p = np.array([0.15, 0.3])
    foot, dist = nearest_boundary(qbump, p)
    # foot lies on the graph and the connecting segment is normal to it
    assert foot[1] == pytest.approx(float(qbump.phi(foot[:1])), abs=1e-12)
    seg = p - foot
    tangent = np.array([1.0, float(qbump.grad_phi(foot[:1])[0])])
    assert abs(seg @ tangent) <= 1e-9 * np.linalg.norm(seg) * np.linalg.norm(tangent)
    assert dist == pytest.approx(np.linalg.norm(seg), rel=1e-12)


def test_critical_scale_flat_sentinel(flat2):
    cs = critical_scale(flat2, np.array([0.0, 0.2]))
    assert cs.status == "flat"
    assert cs.r_cs == np.inf


def test_critical_scale_solves_defining_equation():
    dom = GraphDomain.power_alpha(0.1, 0.5)
    p = np.array([0.0, 0.05])
    cs = critical_scale(dom, p)
    assert cs.status == "ok"
    assert cs.r_cs * smooth_theta(dom.dini, cs.r_cs) == pytest.approx(
        cs.dist, rel=1e-9)
    # closer points have smaller critical scale
    cs2 = critical_scale(dom, np.array([0.0, 0.01]))
    assert cs2.r_cs < cs.r_cs


def test_critical_scale_rejects_boundary_point(flat2):
    dom = GraphDomain.power_alpha(0.1, 0.5)
    with pytest.raises(GeometryError):
        critical_scale(dom, np.array([0.0, 0.0]))


def test_admissibility_thresholds():
    ok = admissibility(GraphDomain.quadratic_bump(5e-4))
    assert ok.admissible and ok.theta_ok and ok.dini_ok

    steep = admissibility(GraphDomain.quadratic_bump(0.5))
    assert not steep.admissible

    flat = admissibility(GraphDomain.flat())
    assert flat.theta_8R == 0.0 and flat.dini_16R == 0.0
