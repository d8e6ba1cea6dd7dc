"""Frequency quotients, derivative decomposition, doubling, variation."""
import math

import numpy as np
import pytest

from freqlab import (
    DegenerateNormalizationError,
    FrequencyError,
    GraphDomain,
    boundary_frequency,
    derivative_terms,
    doubling_ratios,
    err_beta,
    fd_frequency_derivative,
    frequency_report,
    pinch,
    plane_harmonic,
    spatial_variation_check,
    sphere_comparison,
)


def _mixture(rng):
    w = rng.uniform(0.3, 1.0, size=3)
    return (plane_harmonic(1) * w[0] + plane_harmonic(2) * w[1]
            + plane_harmonic(3) * w[2])


def test_report_quotients_consistent(flat2):
    rep = frequency_report(plane_harmonic(3), flat2, np.zeros(2), 0.4)
    assert rep.energy > 0 and rep.height_sphere > 0
    assert rep.n_sphere == pytest.approx(
        rep.radius * rep.energy / rep.height_sphere, rel=1e-15)
    assert rep.n_centered == pytest.approx(
        rep.radius * rep.energy / rep.height_centered, rel=1e-15)
    # boundary data vanishes at the origin, so the quotients coincide
    assert rep.n_sphere == pytest.approx(rep.n_centered, rel=1e-12)


def test_homogeneous_frequency_equals_degree(flat2):
    for k in (1, 2, 3, 4):
        for r in (0.1, 0.5, 1.0):
            rep = frequency_report(plane_harmonic(k), flat2, np.zeros(2), r)
            assert rep.n_sphere == pytest.approx(k, abs=1e-10)
            rep_i = frequency_report(plane_harmonic(k), None, np.zeros(2), r)
            assert rep_i.n_centered == pytest.approx(k, abs=1e-10)


def test_constant_field_rejected():
    one = plane_harmonic(1) * 0.0 + plane_harmonic(2) * 0.0

    class Shifted:
        dimension = 2
        value = lambda self, P: one.value(P) + 1.0
        _value = value
        _gradient = lambda self, P: one.gradient(P)
        gradient = _gradient

    with pytest.raises(DegenerateNormalizationError):
        frequency_report(Shifted(), None, np.zeros(2), 0.3)


def test_interior_monotonicity_seeded():
    rng = np.random.default_rng(5)
    u = _mixture(rng)
    for _ in range(15):
        X = rng.uniform(-0.3, 0.3, size=2)
        r1, r2 = sorted(rng.uniform(0.05, 0.4, size=2))
        if r2 - r1 < 1e-3:
            continue
        n1 = frequency_report(u, None, X, r1).n_centered
        n2 = frequency_report(u, None, X, r2).n_centered
        assert n1 <= n2 + 1e-10


def test_derivative_identity_interior():
    rng = np.random.default_rng(17)
    u = _mixture(rng)
    X = np.array([0.05, 0.3])
    terms = derivative_terms(u, None, X, 0.2)
    assert terms.interior
    # interior windows carry no boundary flux, no center-flux defect, and
    # no moving-edge correction
    assert terms.r_boundary == 0.0
    assert terms.err_r == 0.0
    assert terms.cap_edge == 0.0
    assert terms.r_height >= -1e-12
    fd = fd_frequency_derivative(u, None, X, 0.2)
    assert terms.n_prime_model == pytest.approx(fd, rel=1e-4, abs=1e-8)


def test_derivative_identity_clipped_window(flat2):
    # center above the boundary but closer than the radius: every term of
    # the decomposition is active, including the moving-edge correction
    u = _mixture(np.random.default_rng(23))
    X = np.array([0.1, 0.04])
    r = 0.25
    terms = derivative_terms(u, flat2, X, r)
    assert not terms.interior
    assert terms.cap_edge != 0.0
    fd = fd_frequency_derivative(u, flat2, X, r)
    gap = abs(terms.n_prime_model - fd) / (abs(fd) + 1e-2)
    assert gap <= 1e-2


def test_dropping_edge_correction_breaks_identity(flat2):
    # the three smooth terms alone do not reproduce dN/dr on clipped
    # windows; the edge term is load-bearing
    u = _mixture(np.random.default_rng(23))
    X = np.array([0.1, 0.04])
    r = 0.25
    terms = derivative_terms(u, flat2, X, r)
    fd = fd_frequency_derivative(u, flat2, X, r)
    partial = (terms.r_height + terms.r_boundary
               + terms.report.n_centered * terms.err_r)
    assert abs(partial - fd) > 10.0 * abs(terms.n_prime_model - fd)


def test_boundary_flux_term_nonnegative(flat2):
    rng = np.random.default_rng(31)
    u = _mixture(rng)
    for _ in range(10):
        X = np.array([rng.uniform(-0.3, 0.3), 0.0])
        terms = derivative_terms(u, flat2, X, rng.uniform(0.1, 0.3))
        assert terms.r_boundary >= -1e-9


def test_doubling_homogeneous_exact():
    for k, d_plus_2k in [(1, 4), (2, 6), (3, 8)]:
        rep = doubling_ratios(plane_harmonic(k), None, np.zeros(2), 0.05)
        assert rep.ratio == pytest.approx(2.0 ** d_plus_2k, rel=1e-10)
        assert rep.exponent == pytest.approx(d_plus_2k, abs=1e-10)


def test_doubling_guards(flat2):
    u = plane_harmonic(2)
    with pytest.raises(FrequencyError):
        doubling_ratios(u, None, np.zeros(2), 0.05, a=100.0)
    with pytest.raises(FrequencyError):
        # a*rho beyond R/8 with a domain present
        doubling_ratios(u, flat2, np.zeros(2), 0.1, a=2.0)


def test_boundary_frequency_collapses_on_flat(flat2):
    u = plane_harmonic(3)
    X = np.array([0.2, 0.0])
    bf = boundary_frequency(u, flat2, X, 0.3)
    assert bf.dini_factor == pytest.approx(1.0)
    np.testing.assert_allclose(bf.offset_center, X)
    direct = frequency_report(u, flat2, X, 0.3).n_centered
    assert bf.modified == pytest.approx(direct, rel=1e-12)


def test_boundary_frequency_curved_offset(qbump, mfs_qbump):
    X = qbump.boundary_point(np.array([0.1]))
    bf = boundary_frequency(mfs_qbump, qbump, X, 0.2)
    # offset center sits strictly above the starting point; the modulus
    # factor can only increase the quotient
    assert bf.offset_center[1] > X[1]
    assert bf.dini_factor >= 1.0
    assert np.isfinite(bf.modified)


def test_pinch_nonnegative_and_zero_when_homogeneous():
    rng = np.random.default_rng(41)
    u = _mixture(rng)
    for _ in range(8):
        X = rng.uniform(-0.2, 0.2, size=2)
        assert pinch(u, None, X, rng.uniform(0.05, 0.2)) >= -1e-10
    assert pinch(plane_harmonic(2), None, np.zeros(2), 0.1) == pytest.approx(
        0.0, abs=1e-12)


def test_sphere_comparison_decays_with_distance(flat2):
    u = plane_harmonic(2)
    r = 0.4
    devs = []
    # keep the center off the zero set of u so the center value is felt
    for frac in (0.25, 0.125, 0.0625):
        sc = sphere_comparison(u, flat2, np.array([0.2, frac * r]), r)
        assert sc.predictor == pytest.approx(frac ** 0.75, rel=1e-12)
        devs.append(sc.deviation)
    assert devs[0] > devs[1] > devs[2] > 0


def test_err_beta_counting():
    u = plane_harmonic(2)
    p = np.array([0.0, 0.3])
    r = 0.1
    assert err_beta(u, None, p, r, []) == 0.0
    far = [np.array([2.0, 2.0])]
    assert err_beta(u, None, p, r, far) == 0.0
    inside = [p + np.array([0.05, 0.0])]
    one = err_beta(u, None, p, r, inside)
    assert one > 0.0
    assert err_beta(u, None, p, r, inside * 2) == pytest.approx(2.0 * one)


def test_spatial_variation_separation_guard():
    u = plane_harmonic(2)
    with pytest.raises(FrequencyError):
        spatial_variation_check(u, np.zeros(2), np.array([0.2, 0.0]), 0.1)


def test_spatial_variation_gap_controlled_by_pinch():
    rng = np.random.default_rng(53)
    u = _mixture(rng)
    worst = 0.0
    for _ in range(10):
        X1 = rng.uniform(-0.2, 0.2, size=2)
        r = rng.uniform(0.08, 0.12)
        ang = rng.uniform(0, 2 * math.pi)
        X2 = X1 + 0.4 * r * np.array([math.cos(ang), math.sin(ang)])
        sv = spatial_variation_check(u, X1, X2, r)
        assert sv.pinch_sum >= 0.0
        if sv.pinch_sum > 1e-6:
            worst = max(worst, sv.freq_gap / sv.pinch_sum)
    assert worst <= 0.1


def test_spatial_variation_zero_pinch_zero_gap():
    # scaling-invariant configuration: both windows sit at the origin of a
    # homogeneous field, so pinches and the gap vanish together
    u = plane_harmonic(3)
    sv = spatial_variation_check(u, np.zeros(2), np.zeros(2), 0.1)
    assert sv.pinch_sum == 0.0
    assert sv.freq_gap <= 1e-10
