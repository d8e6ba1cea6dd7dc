"""Ball, sphere, and boundary-patch quadrature against closed forms."""
import math

import numpy as np
import pytest

from freqlab import (
    GraphDomain,
    QuadratureError,
    QuadratureSpec,
    ball_integral,
    boundary_patch_integral,
    sphere_cap_integral,
)

ONES = lambda P: np.ones(P.shape[0])


def test_full_disc_area():
    res = ball_integral(None, [0.0, 0.0], 0.7, ONES)
    assert res.value == pytest.approx(math.pi * 0.49, rel=1e-10)
    assert res.converged
    assert res.error <= 1e-8 * max(1.0, abs(res.value)) * 10


def test_full_ball_volume_3d():
    res = ball_integral(None, [0.0, 0.0, 0.0], 0.5, ONES)
    assert res.value == pytest.approx(4.0 / 3.0 * math.pi * 0.125, rel=1e-8)


def test_annulus_area():
    res = ball_integral(None, [0.2, 0.1], 0.6, ONES, r_inner=0.3)
    assert res.value == pytest.approx(math.pi * (0.36 - 0.09), rel=1e-10)


def test_polynomial_moment_on_disc():
    # int_{B_r} x^2 dX = pi r^4 / 4
    res = ball_integral(None, [0.0, 0.0], 0.9, lambda P: P[:, 0] ** 2)
    assert res.value == pytest.approx(math.pi * 0.9 ** 4 / 4.0, rel=1e-10)


def test_half_disc_through_flat_boundary(flat2):
    # center on the boundary: the domain keeps the upper half only
    res = ball_integral(flat2, [0.0, 0.0], 0.4, ONES)
    assert res.value == pytest.approx(0.5 * math.pi * 0.16, rel=1e-8)


def test_clipped_disc_offset_center(flat2):
    # center at height h < r: circular segment area removed below the line
    r, h = 0.5, 0.2
    res = ball_integral(flat2, [0.3, h], r, ONES)
    seg = r * r * math.acos(h / r) - h * math.sqrt(r * r - h * h)
    assert res.value == pytest.approx(math.pi * r * r - seg, rel=1e-8)


def test_circle_length_and_clipped_arc(flat2):
    full = sphere_cap_integral(None, [0.0, 0.3], 0.25, ONES)
    assert full.value == pytest.approx(2.0 * math.pi * 0.25, rel=1e-10)

    r, h = 0.5, 0.2
    clipped = sphere_cap_integral(flat2, [0.0, h], r, ONES)
    want = r * 2.0 * (math.pi - math.acos(h / r))
    assert clipped.value == pytest.approx(want, rel=1e-8)


def test_sphere_area_3d():
    res = sphere_cap_integral(None, [0.0, 0.0, 0.0], 0.3, ONES)
    assert res.value == pytest.approx(4.0 * math.pi * 0.09, rel=1e-8)


def test_boundary_patch_flat_length(flat2):
    res = boundary_patch_integral(flat2, [0.0, 0.0], 0.35, ONES)
    assert res.value == pytest.approx(0.7, rel=1e-10)


def test_boundary_patch_weights_surface_measure(qbump):
    # against direct arclength quadrature of sqrt(1 + phi'^2)
    r = 0.3
    res = boundary_patch_integral(qbump, [0.0, 0.0], r, ONES)
    a = 5e-4

    def half_width():
        # chord endpoints where |(x, phi(x))| = r
        from scipy.optimize import brentq
        return brentq(lambda x: x * x + (a * x * x) ** 2 - r * r, 0.0, 2.0 * r)

    w = half_width()
    xs = np.linspace(-w, w, 200001)
    want = np.trapezoid(np.hypot(1.0, 2.0 * a * xs), xs)
    assert res.value == pytest.approx(want, rel=1e-8)


def test_error_estimate_brackets_truth():
    # a mildly oscillatory integrand; the reported estimate must cover
    # the actual deviation once converged
    f = lambda P: np.cos(3.0 * P[:, 0]) * np.exp(P[:, 1])
    res = ball_integral(None, [0.0, 0.0], 1.0, f, QuadratureSpec(tol=1e-10))
    fine = ball_integral(None, [0.0, 0.0], 1.0, f,
                         QuadratureSpec(radial=48, angular=64, tol=1e-13))
    assert abs(res.value - fine.value) <= max(res.error, 1e-12)


def test_unconverged_flagged():
    # max_depth 0 disables refinement: the kink cannot be resolved
    f = lambda P: np.abs(P[:, 0] - 0.123)
    spec = QuadratureSpec(radial=2, angular=2, tol=1e-14, max_depth=0)
    res = ball_integral(None, [0.0, 0.0], 1.0, f, spec)
    assert not res.converged


def test_dimension_guard():
    with pytest.raises(QuadratureError):
        ball_integral(None, [0.0, 0.0, 0.0, 0.0], 0.5, ONES)


def test_float_protocol():
    res = ball_integral(None, [0.0, 0.0], 1.0, ONES)
    assert float(res) == res.value
