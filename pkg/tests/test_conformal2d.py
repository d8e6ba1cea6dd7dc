"""Conformal half-plane map, pushed fields, critical-point transfer."""
import numpy as np
import pytest

from freqlab import (
    PushedField,
    Region,
    build_map,
    map_checks,
    plane_harmonic,
    transfer_count,
)

RNG = np.random.default_rng(37)


@pytest.fixture(scope="module")
def flat_map(flat2):
    return build_map(flat2, flat2.R)


@pytest.fixture(scope="module")
def qbump_map(qbump):
    return build_map(qbump, qbump.R)


def test_flat_map_is_a_dilation(flat_map):
    Z = RNG.uniform([-0.5, 0.0], [0.5, 0.8], size=(30, 2))
    W = flat_map.phi(Z)
    lam = W.real / Z[:, 0]
    np.testing.assert_allclose(W.real / lam, Z[:, 0], rtol=1e-12)
    np.testing.assert_allclose(W.imag / lam[0], Z[:, 1], rtol=1e-12)
    # the gradient floor of g fixes the dilation factor
    assert flat_map.hopf_c == pytest.approx(lam[0] ** 2.0, rel=1e-12)


def test_map_certificates(flat_map, qbump_map):
    for cmap in (flat_map, qbump_map):
        mc = map_checks(cmap, n=100)
        assert mc.cr_residual <= 1e-8
        assert mc.det_gap <= 1e-10
        assert mc.min_interior_g > 0.0
        assert mc.boundary_g <= 1e-6


def test_inverse_round_trip(qbump_map):
    Z = RNG.uniform([-0.4, 0.05], [0.4, 0.6], size=(50, 2))
    W = qbump_map.phi(Z)
    Z_back = qbump_map.inverse(np.column_stack([W.real, W.imag]))
    np.testing.assert_allclose(Z_back, Z, atol=1e-10)


def test_pushed_field_composes_and_reflects(qbump_map, mfs_qbump):
    pf = PushedField(qbump_map, mfs_qbump)
    Z = RNG.uniform([-0.3, 0.05], [0.3, 0.4], size=(25, 2))
    W = qbump_map.phi(Z)
    up = np.column_stack([W.real, W.imag])
    # the batched-Newton inverse carries its 1e-12 coordinate tolerance
    # into the values
    np.testing.assert_allclose(pf.value(up), mfs_qbump.value(Z),
                               rtol=1e-6, atol=1e-9)
    dn = up * np.array([1.0, -1.0])
    np.testing.assert_allclose(pf.value(dn), -pf.value(up), rtol=1e-13)
    g_up, g_dn = pf.gradient(up), pf.gradient(dn)
    np.testing.assert_allclose(g_dn[:, 0], -g_up[:, 0], rtol=1e-12)
    np.testing.assert_allclose(g_dn[:, 1], g_up[:, 1], rtol=1e-12)


def test_pushed_hessian_against_finite_differences(qbump_map, mfs_qbump):
    pf = PushedField(qbump_map, mfs_qbump)
    W = np.vstack([
        RNG.uniform([-0.2, 0.02], [0.2, 0.25], size=(20, 2)),
        RNG.uniform([-0.2, -0.25], [0.2, -0.02], size=(20, 2)),
    ])
    Ha = pf.hessian(W)
    h = 1e-6
    Hf = np.empty_like(Ha)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        Hf[:, :, k] = (pf.gradient(W + e) - pf.gradient(W - e)) / (2 * h)
    Hf = 0.5 * (Hf + np.transpose(Hf, (0, 2, 1)))
    scale = np.abs(Hf).max()
    assert np.abs(Ha - Hf).max() <= 1e-5 * scale


def test_pushed_field_stays_harmonic(qbump_map, mfs_qbump):
    # conformal composition preserves harmonicity; the odd reflection of a
    # vanishing harmonic function is harmonic too, so the trace of the
    # analytic hessian must vanish on both sides of the axis
    pf = PushedField(qbump_map, mfs_qbump)
    W = RNG.uniform([-0.25, -0.3], [0.25, 0.3], size=(60, 2))
    W = W[np.abs(W[:, 1]) > 0.01]
    H = pf.hessian(W)
    scale = np.abs(H).max()
    assert np.abs(H[:, 0, 0] + H[:, 1, 1]).max() <= 1e-10 * scale


def test_transfer_flat_exact(flat2, flat_map):
    region = Region(np.array([0.0, 0.3]), 0.35, domain=flat2)
    rep = transfer_count(flat_map, plane_harmonic(3), region)
    assert rep.counts_agree
    assert rep.count_before == 1
    assert rep.n_freq == pytest.approx(3.0, abs=1e-10)
    assert rep.hopf_c == pytest.approx(16.0 / 49.0, rel=1e-12)
    # the paired locations match under the map
    for z, w in rep.pairs:
        img = flat_map.phi(np.atleast_2d(z))[0]
        assert abs(complex(w[0], w[1]) - img) <= 1e-8


def test_transfer_curved_counts(qbump, qbump_map, mfs_qbump):
    # the only gradient zero sits on the graph itself, outside the open
    # region, so both detections must come back empty; a small window and
    # coarse lattice keep this quick, the full sweep lives in the
    # acceptance suite
    region = Region(np.array([0.0, 0.25]), 0.2, domain=qbump)
    rep = transfer_count(qbump_map, mfs_qbump, region,
                         spacing=region.halfwidth / 6.0)
    assert rep.counts_agree
    assert rep.count_before == 0
    assert rep.hopf_c == pytest.approx(0.3262197285575637, rel=1e-9)
