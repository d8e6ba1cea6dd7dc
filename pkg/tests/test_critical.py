"""Critical point detection, content estimates, the staged pipeline."""
import math

import numpy as np
import pytest

from freqlab import (
    GraphDomain,
    PipelineStageError,
    Region,
    certificate_grid,
    doubling_certificate,
    exact_polynomial,
    find_critical_points,
    minkowski_content,
    plane_harmonic,
    simon_fixture,
    theorem_pipeline,
)


def test_region_lattice_and_membership():
    reg = Region(np.array([0.1, -0.2]), 0.3)
    pts = reg.lattice(0.1)
    assert pts.shape[1] == 2
    assert np.all(np.abs(pts - reg.center) <= 0.3 + 1e-12)
    assert reg.contains(np.array([0.3, -0.4]), tol=0.0)
    assert not reg.contains(np.array([0.5, 0.0]), tol=0.0)
    assert reg.diameter == pytest.approx(0.6 * math.sqrt(2.0))


def test_detects_higher_order_zero_as_singular():
    est = find_critical_points(plane_harmonic(3), Region(np.zeros(2), 0.5),
                               spacing=0.1)
    assert len(est.points) == 1
    p = est.points[0]
    assert np.linalg.norm(p.location) <= 1e-8
    assert p.kind == "singular"
    assert p.grad_norm <= 1e-8 * est.grad_scale


def test_detects_simple_zero_between_lattice_seeds():
    # the region is chosen so no seed lands on the zero; the capture band
    # must still keep the nearby seeds (gradient grows linearly off the
    # zero, at the Hessian scale times the offset)
    est = find_critical_points(plane_harmonic(2),
                               Region(np.array([0.0, 0.3]), 0.35),
                               spacing=0.35 / 12.0)
    assert len(est.points) == 1
    assert np.linalg.norm(est.points[0].location) <= 1e-8


def test_classifies_nonvanishing_critical_point():
    u = plane_harmonic(2) + plane_harmonic(1, kind="re") \
        + plane_harmonic(1, kind="im")
    # grad (2xy + x + y) = (2y + 1, 2x + 1): zero at (-1/2, -1/2), where
    # the value is -1/2
    est = find_critical_points(u, Region(np.zeros(2), 0.8), spacing=0.15)
    assert len(est.points) == 1
    p = est.points[0]
    np.testing.assert_allclose(p.location, [-0.5, -0.5], atol=1e-9)
    assert p.kind == "critical"
    assert p.value == pytest.approx(-0.5, rel=1e-9)


def test_empty_region_yields_no_points():
    # constant-gradient field: no critical points anywhere
    est = find_critical_points(exact_polynomial(3, 1),
                               Region(np.zeros(3), 0.5), spacing=0.2)
    assert est.points == []


def test_shear_fixture_positions_and_classes():
    fx = simon_fixture(0.3)
    est = find_critical_points(fx.field, Region(np.zeros(3), 6.0), spacing=1.0)
    found = np.sort([p.location[2] for p in est.points])
    np.testing.assert_allclose(found, fx.critical_z(6.0), atol=1e-8)
    sing = set(np.round(fx.singular_z(6.0), 8))
    for p in est.points:
        assert (round(p.location[2], 8) in sing) == (p.kind == "singular")
        assert abs(p.location[0]) <= 1e-8 and abs(p.location[1]) <= 1e-8


def test_minkowski_content_of_a_line():
    # critical set of x*z in the cube is the segment {x = z = 0}, length 1;
    # count * r stays near twice the length across scales
    rows = minkowski_content(exact_polynomial(3, 2), Region(np.zeros(3), 0.5),
                             [0.1, 0.05, 0.025])
    assert [(row.count, row.flag) for row in rows] == [
        (19, "ok"), (36, "ok"), (70, "ok")]
    np.testing.assert_allclose([row.content for row in rows],
                               [1.9, 1.8, 1.75], rtol=1e-12)
    assert all(abs(row.content - 2.0) <= 0.3 for row in rows)


def test_minkowski_content_flags_degenerate_thresholds():
    rows = minkowski_content(exact_polynomial(3, 1),
                             Region(np.zeros(3), 0.5), [0.1])
    assert rows[0].flag == "empty" and rows[0].count == 0

    null = plane_harmonic(1) * 0.0
    rows = minkowski_content(null, Region(np.zeros(2), 0.5), [0.1])
    assert rows[0].flag == "full"


def test_certificate_grid_shape_and_determinism():
    g = certificate_grid(np.array([0.1, 0.2]), 0.3, 5, [])
    assert g.shape == (25, 2)
    np.testing.assert_array_equal(g, certificate_grid(np.array([0.1, 0.2]),
                                                      0.3, 5, []))
    # odd per-axis count places a node exactly at the box center
    assert np.any(np.all(g == np.array([0.1, 0.2]), axis=1))


def test_doubling_certificate_homogeneous_supremum():
    cert = doubling_certificate(plane_harmonic(2), np.zeros(2), [0.05])
    # centered mass of a degree-k homogeneous field scales as r^(d+2k)
    assert cert.sup_ratio == pytest.approx(64.0, rel=1e-12)
    assert cert.worst.r == 0.05


def test_pipeline_on_flat_reference(flat2):
    rep = theorem_pipeline(flat2, plane_harmonic(2), 1.0)
    assert rep.stages == ["admissibility", "doubling-u", "extension-doubling",
                          "holder", "critical-content"]
    assert rep.lambda_u == pytest.approx(16.49484536082474, rel=1e-9)
    # the extension sweep includes the origin, where the supremum 2^(d+2k)
    # is attained exactly
    assert rep.lambda_ext == pytest.approx(64.0, rel=1e-12)
    assert rep.holder_constant <= 1e-12  # constant coefficients
    assert [(p.location.tolist(), p.kind) for p in rep.estimate.points] == [
        ([0.0, 0.0], "singular")]
    assert rep.pullback_gap == 0.0
    assert [row.count for row in rep.content] == [3, 3]


def test_pipeline_rejects_inadmissible_domain():
    steep = GraphDomain.quadratic_bump(0.5)
    with pytest.raises(PipelineStageError) as err:
        theorem_pipeline(steep, plane_harmonic(2), 1.0)
    assert err.value.stage == "admissibility"
    assert err.value.report.stages == []
