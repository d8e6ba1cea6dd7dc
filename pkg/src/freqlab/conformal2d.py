"""Planar conformal transfer of critical-point counts.

A harmonic function g vanishing on the boundary window with positive far
data is the imaginary part of a conformal map Phi onto (a piece of) the
upper half-plane; its conjugate comes from path integration.  Critical
points of a harmonic u correspond one to one with critical points of the
push-forward u o Phi^{-1} wherever |det DPhi| stays above half the Hopf
bound, which makes the map a second, independent counter.
"""

import math
from dataclasses import dataclass, field as dfield
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import MapQualityError, SelfCheckError
from .geometry import GraphDomain, admissibility
from .harmonic import MFSField, ScalarField, plane_harmonic, solve_mfs
from .critical import CriticalSetEstimate, Region, find_critical_points
from .frequency import frequency_report
from .quadrature import QuadratureSpec

HOPF_FLOOR = 1e-4
PATH_TOL = 1e-9

# 8-point Gauss rule per panel, 4 panels per path segment; the integrand
# is analytic with singularities no closer than the charge depth, so this
# already agrees with a 4x finer rule at machine precision
_GX, _GW = np.polynomial.legendre.leggauss(8)
_N_PANEL = 4


def _segment_nodes(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Panelized Gauss nodes and vector weights along straight segments.

    a, b are (n, 2) endpoint batches; returns nodes (n, m, 2) and weights
    (n, m, 2) such that sum over m of F(node) . weight approximates the
    line integral of F . dl.
    """
    edges = np.linspace(0.0, 1.0, _N_PANEL + 1)
    t = (edges[:-1, None] + np.diff(edges)[:, None] * (_GX[None, :] + 1.0) / 2.0)
    t = t.ravel()
    w = np.tile(_GW / 2.0 / _N_PANEL, _N_PANEL)
    seg = b - a
    nodes = a[:, None, :] + t[None, :, None] * seg[:, None, :]
    weights = seg[:, None, :] * w[None, :, None]
    return nodes, weights


@dataclass
class ConformalMap2D:
    """Boundary-flattening conformal map Phi = conjugate + i g."""

    domain: GraphDomain
    R: float
    g: ScalarField
    normalizer: float
    hopf_c: float
    path_height: float
    path_gap: float = 0.0
    is_flat: bool = False
    _leg_cache: dict = dfield(default_factory=dict, repr=False)

    def gradient_g(self, P: np.ndarray) -> np.ndarray:
        return self.g.gradient(P)

    def _conjugate_differential(self, nodes: np.ndarray) -> np.ndarray:
        # d(conj) = g_y dx - g_x dy
        shp = nodes.shape
        grad = self.g.gradient(nodes.reshape(-1, 2)).reshape(shp)
        return np.stack([grad[..., 1], -grad[..., 0]], axis=-1)

    def conjugate(self, P: np.ndarray, corridor: Optional[float] = None) -> np.ndarray:
        """Harmonic conjugate of g, path-integrated from the origin.

        The path is a three-leg polyline through a horizontal corridor at
        ``corridor`` (default the map's path height), staying inside the
        domain for every target in the working window.
        """
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if self.is_flat:
            return P[:, 0] / self.normalizer
        H = self.path_height if corridor is None else corridor
        # the climb out of the origin is shared by every target
        first = self._leg_cache.get(H)
        if first is None:
            nodes, weights = _segment_nodes(np.zeros((1, 2)),
                                            np.array([[0.0, H]]))
            F = self._conjugate_differential(nodes)
            first = float(np.einsum("nmk,nmk->n", F, weights)[0])
            self._leg_cache[H] = first
        out = np.full(P.shape[0], first)
        top0 = np.column_stack([np.zeros(P.shape[0]), np.full(P.shape[0], H)])
        topP = np.column_stack([P[:, 0], np.full(P.shape[0], H)])
        for a, b in ((top0, topP), (topP, P)):
            nodes, weights = _segment_nodes(a, b)
            F = self._conjugate_differential(nodes)
            out += np.einsum("nmk,nmk->n", F, weights)
        return out

    def phi(self, P: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return self.conjugate(P) + 1j * self.g.value(P)

    def dphi(self, P: np.ndarray) -> np.ndarray:
        """Real Jacobian of (Re Phi, Im Phi); the first row is the
        Cauchy-Riemann partner of the second."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        grad = self.g.gradient(P)
        J = np.empty((P.shape[0], 2, 2))
        J[:, 0, 0] = grad[:, 1]
        J[:, 0, 1] = -grad[:, 0]
        J[:, 1, 0] = grad[:, 0]
        J[:, 1, 1] = grad[:, 1]
        return J

    def det_dphi(self, P: np.ndarray) -> np.ndarray:
        grad = self.g.gradient(np.atleast_2d(np.asarray(P, dtype=float)))
        return np.sum(grad * grad, axis=1)

    def inverse(self, W: np.ndarray, tol: float = 1e-12,
                max_iter: int = 60) -> np.ndarray:
        """Newton inversion of Phi on a batch of image points (upper half).

        Converged points are frozen so stragglers do not cost whole-batch
        re-evaluations.
        """
        W = np.atleast_2d(np.asarray(W, dtype=float))
        Z = W * self.normalizer
        target = W[:, 0] + 1j * W[:, 1]
        scale = 1.0 + np.abs(target)
        active = np.arange(W.shape[0])
        for _ in range(max_iter):
            F = self.phi(Z[active]) - target[active]
            live = np.abs(F) > tol * scale[active]
            active, F = active[live], F[live]
            if active.size == 0:
                break
            J = self.dphi(Z[active])
            rhs = np.stack([F.real, F.imag], axis=1)
            step = np.linalg.solve(J, rhs[..., None])[..., 0]
            Z[active] = Z[active] - step
        else:
            raise MapQualityError("conformal inversion did not converge")
        return Z


def _junction_angle(domain: GraphDomain, radius: float, side: str) -> float:
    # signed height of the circle point above the graph changes sign here
    f = lambda th: float(domain.height(np.array(
        [[radius * math.cos(th), radius * math.sin(th)]]))[0])
    if side == "right":
        return brentq(f, -math.pi / 3.0, math.pi / 3.0)
    return brentq(f, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)


def _far_arc_data(domain: GraphDomain, radius: float) -> Callable:
    th_r = _junction_angle(domain, radius, "right")
    th_l = _junction_angle(domain, radius, "left")

    def data(P: np.ndarray) -> np.ndarray:
        theta = np.arctan2(P[:, 1], P[:, 0])
        theta = np.where(theta < th_r - 1e-12, theta + 2.0 * math.pi, theta)
        s = (theta - th_r) / (th_l - th_r)
        return np.clip(np.sin(math.pi * np.clip(s, 0.0, 1.0)), 0.0, None)

    return data


def _window_sup(domain: GraphDomain, fld: ScalarField, radius: float) -> float:
    rr = np.linspace(radius / 40.0, radius, 40)
    th = np.linspace(0.0, math.pi, 80)
    pts = np.stack([np.outer(rr, np.cos(th)).ravel(),
                    np.outer(rr, np.sin(th)).ravel()], axis=1)
    pts = pts[domain.contains(pts)]
    return float(np.max(np.abs(fld.value(pts))))


def build_map(domain: GraphDomain, R: float, charge_count: int = 128,
              boundary_tol: float = 1e-4,
              spec: Optional[QuadratureSpec] = None) -> ConformalMap2D:
    """Construct the conformal map for a planar graph-domain window.

    The imaginary part g is harmonic with zero data on the boundary graph
    inside B_2R and a positive taper on the far arc, normalized to unit sup
    over the window; flat domains take the exact affine route.  The Hopf
    lower bound of |grad g|^2 is measured on the boundary inside B_3R/2 and
    gated, and the conjugate's path independence is certified on probe
    points before the map is returned.
    """
    if domain.dimension != 2:
        raise MapQualityError("conformal transfer is planar only")
    if not admissibility(domain).admissible:
        raise MapQualityError("domain fails admissibility at its scale R")

    if domain.is_flat:
        normalizer = 7.0 * R / 4.0
        g = plane_harmonic(1) * (1.0 / normalizer)
        return ConformalMap2D(domain, R, g, normalizer,
                              hopf_c=normalizer ** -2.0,
                              path_height=R / 2.0, is_flat=True)

    raw = solve_mfs(domain, np.zeros(2), 2.0 * R, _far_arc_data(domain, 2.0 * R),
                    charge_count=charge_count, boundary_tol=boundary_tol,
                    spec=spec)
    normalizer = _window_sup(domain, raw, 7.0 * R / 4.0)
    g = MFSField(raw.poles, raw.weights / normalizer, raw.fit_report)

    # Hopf bound on the graph inside B_3R/2
    x_r = 1.5 * R * math.cos(_junction_angle(domain, 1.5 * R, "right"))
    x_l = 1.5 * R * math.cos(_junction_angle(domain, 1.5 * R, "left"))
    xs = np.linspace(x_l, x_r, 256)[:, None]
    bdry = domain.boundary_point(xs)
    grads = g.gradient(bdry)
    hopf = float(np.min(np.sum(grads * grads, axis=1)))
    if hopf < HOPF_FLOOR:
        raise MapQualityError(
            f"Hopf bound {hopf:.3e} below floor {HOPF_FLOOR:.1e}")

    heights = domain.height(np.linspace(-2.0 * R, 2.0 * R, 512)[:, None])
    corridor = max(2.0 * float(np.max(heights)), 0.5 * R)
    cmap = ConformalMap2D(domain, R, g, normalizer, hopf_c=hopf,
                          path_height=corridor)

    # two homotopic corridors must agree
    probes = np.array([[0.3 * R, 0.4 * R], [-0.5 * R, 0.7 * R],
                       [0.9 * R, 0.2 * R], [-0.1 * R, 1.1 * R]])
    gap = float(np.max(np.abs(cmap.conjugate(probes)
                              - cmap.conjugate(probes, corridor=1.5 * corridor))))
    if gap > PATH_TOL:
        raise SelfCheckError(f"conjugate path dependence {gap:.3e}")
    cmap.path_gap = gap
    return cmap


class PushedField(ScalarField):
    """u o Phi^{-1}, odd-reflected across the real axis."""

    provenance = "conformal-pushforward"

    def __init__(self, cmap: ConformalMap2D, base: ScalarField):
        self.dimension = 2
        self.cmap = cmap
        self.base = base
        self._last = None

    def _upper(self, W):
        # Newton refinement evaluates value, gradient and hessian on the
        # same batch, so keep the most recent inversion around
        key = W.tobytes()
        if self._last is not None and self._last[0] == key:
            return self._last[1], self._last[2]
        refl = np.column_stack([W[:, 0], np.abs(W[:, 1])])
        Z = self.cmap.inverse(refl)
        sign = np.where(W[:, 1] < 0.0, -1.0, 1.0)
        self._last = (key, Z, sign)
        return Z, sign

    def _value(self, W):
        Z, sign = self._upper(W)
        return sign * self.base.value(Z)

    def _gradient(self, W):
        Z, sign = self._upper(W)
        J = self.cmap.dphi(Z)
        gu = self.base.gradient(Z)
        # grad of the push-forward: J^{-T} grad u, then reflect parity
        g_hat = np.linalg.solve(np.transpose(J, (0, 2, 1)), gu[..., None])[..., 0]
        out = np.empty_like(g_hat)
        out[:, 0] = sign * g_hat[:, 0]
        out[:, 1] = g_hat[:, 1]
        return out

    def _hessian(self, W):
        # chain rule through the inverse: with K = (dPhi)^{-1} at Z,
        # Hess(u o Phi^{-1}) = K^T Hu K - sum_m ghat_m K^T (Hess Phi_m) K,
        # and the component Hessians of Phi follow from Hess g by the
        # Cauchy-Riemann pairing (plus harmonicity of g)
        Z, sign = self._upper(W)
        J = self.cmap.dphi(Z)
        K = np.linalg.inv(J)
        gu = self.base.gradient(Z)
        ghat = np.einsum("nji,nj->ni", K, gu)
        Hu = self.base.hessian(Z)
        Hg = self.cmap.g.hessian(Z)
        T1 = np.empty_like(Hg)
        T1[:, 0, 0] = Hg[:, 0, 1]
        T1[:, 0, 1] = T1[:, 1, 0] = Hg[:, 1, 1]
        T1[:, 1, 1] = -Hg[:, 0, 1]

        def pull(M):
            return np.einsum("nji,njk,nkl->nil", K, M, K)

        H = (pull(Hu) - ghat[:, 0, None, None] * pull(T1)
             - ghat[:, 1, None, None] * pull(Hg))
        # odd reflection flips the diagonal entries below the axis
        H[:, 0, 0] *= sign
        H[:, 1, 1] *= sign
        return H


@dataclass
class TransferReport:
    """Count comparison between direct and push-forward detection."""

    count_before: int
    count_after: int
    n_freq: float
    hopf_c: float
    before: CriticalSetEstimate
    after: CriticalSetEstimate
    pairs: List[Tuple[np.ndarray, np.ndarray]] = dfield(default_factory=list)

    @property
    def counts_agree(self) -> bool:
        return self.count_before == self.count_after


def transfer_count(cmap: ConformalMap2D, field: ScalarField, region: Region,
                   spacing: Optional[float] = None,
                   spec: Optional[QuadratureSpec] = None) -> TransferReport:
    """Count critical points directly and through the conformal map.

    Detects gradient zeros of the field on the region, then of the
    push-forward on the image of the region (odd-reflected detection keeps
    interface zeros visible), filters the image detections back through
    the inverse map, and matches the two lists point by point.  A count
    mismatch raises with the unmatched locations spelled out.
    """
    spacing = spacing or region.halfwidth / 12.0
    before = find_critical_points(field, region, spacing)

    # bounding box of the mapped region with a safety margin
    corners = region.center + region.halfwidth * np.array(
        [[sx, sy] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0)])
    edge = np.concatenate([corners, region.center[None, :]
                           + region.halfwidth * np.stack(
        [np.cos(np.linspace(0, 2 * math.pi, 16, endpoint=False)),
         np.sin(np.linspace(0, 2 * math.pi, 16, endpoint=False))], axis=1)])
    edge = edge[cmap.domain.contains(edge) | (np.abs(
        edge[:, 1] - cmap.domain.height(edge[:, :1]).ravel()) < 0.5 * region.halfwidth)]
    img = cmap.phi(edge)
    ctr = np.array([img.real.mean(), 0.0])
    half = 1.2 * max(float(np.max(np.abs(img.real - ctr[0]))),
                     float(np.max(np.abs(img.imag))))
    pushed = PushedField(cmap, field)
    region_after = Region(ctr, half)
    after_all = find_critical_points(pushed, region_after, half / 12.0)

    member_tol = 1e-8 * max(1.0, region.diameter)
    axis_tol = 1e-7 * region_after.halfwidth
    kept = []
    for p in after_all.points:
        w = p.location
        if w[1] < -axis_tol:
            continue  # reflection duplicates of upper-half zeros
        z = cmap.inverse(np.array([[w[0], abs(w[1])]]))[0]
        if region.contains(z, member_tol * 10.0 + 1e-6 * region.diameter):
            kept.append(p)
    after = CriticalSetEstimate(kept, region_after, after_all.grad_scale,
                                after_all.value_scale, after_all.grad_tol,
                                after_all.value_tol, after_all.seeds_total,
                                after_all.seeds_captured)

    n_rep = frequency_report(field, cmap.domain, np.zeros(2), 2.0 * cmap.R,
                             spec=spec)
    report = TransferReport(len(before.points), len(after.points),
                            float(n_rep.n_sphere), cmap.hopf_c, before, after)

    # match by mapping the direct detections forward
    used = set()
    for p in before.points:
        w = cmap.phi(p.location[None, :])[0]
        best, best_d = None, np.inf
        for j, q in enumerate(after.points):
            d = math.hypot(q.location[0] - w.real, q.location[1] - abs(w.imag))
            if j not in used and d < best_d:
                best, best_d = j, d
        if best is not None and best_d <= 1e-5 * (1.0 + abs(w)):
            used.add(best)
            report.pairs.append((p.location, after.points[best].location))
    if len(report.pairs) != max(report.count_before, report.count_after):
        missing_b = [p.location for i, p in enumerate(before.points)
                     if i >= len(report.pairs)]
        missing_a = [q.location for j, q in enumerate(after.points)
                     if j not in used]
        raise MapQualityError(
            "count transfer mismatch: direct "
            f"{report.count_before} vs mapped {report.count_after}; "
            f"unmatched direct {missing_b}, unmatched mapped {missing_a}")
    return report


@dataclass
class MapChecks:
    cr_residual: float
    det_gap: float
    offdiag: float
    min_interior_g: float
    boundary_g: float
    laplace_residual: float


def map_checks(cmap: ConformalMap2D, field: Optional[ScalarField] = None,
               n: int = 100) -> MapChecks:
    """Certify the map invariants on deterministic sample grids.

    The Cauchy-Riemann residual differentiates the path-integrated
    conjugate by central differences and compares against the analytic
    gradient of g; the determinant identity and conformality are checked
    on the assembled Jacobian; positivity of g and the flatness of the
    boundary image are sampled directly.  With a field supplied, the
    push-forward's harmonicity is probed by a five-point Laplacian.
    """
    R = cmap.R
    k = max(int(math.sqrt(n)), 2)
    xs = np.linspace(-1.2 * R, 1.2 * R, k)
    ys = np.linspace(0.15 * R, 1.2 * R, k)
    P = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    P = P[cmap.domain.contains(P)][:n]

    # step balances FD truncation against roundoff in the path integral
    h = 2e-5 * R
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    ct_x = (cmap.conjugate(P + ex) - cmap.conjugate(P - ex)) / (2 * h)
    ct_y = (cmap.conjugate(P + ey) - cmap.conjugate(P - ey)) / (2 * h)
    grad = cmap.g.gradient(P)
    cr = float(np.max(np.abs(ct_x - grad[:, 1]) + np.abs(ct_y + grad[:, 0])))

    J = cmap.dphi(P)
    det = np.abs(np.linalg.det(J))
    det_gap = float(np.max(np.abs(det - np.sum(grad * grad, axis=1))))
    JtJ = np.einsum("nji,njk->nik", J, J)
    scale = np.maximum(JtJ[:, 0, 0], JtJ[:, 1, 1])
    offdiag = float(np.max(np.abs(JtJ[:, 0, 1]) / scale))

    interior_g = float(np.min(cmap.g.value(P)))
    bx = np.linspace(-1.4 * R, 1.4 * R, 128)[:, None]
    bdry = cmap.domain.boundary_point(bx)
    boundary_g = float(np.max(np.abs(cmap.g.value(bdry))))

    lap = 0.0
    if field is not None:
        pushed = PushedField(cmap, field)
        W = cmap.phi(P[: n // 2])
        W = np.stack([W.real, W.imag], axis=1)
        hh = 1e-4 * (1.0 + np.linalg.norm(W, axis=1))
        vals = pushed.value(W)
        lap_num = -4.0 * vals
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            lap_num = lap_num + pushed.value(
                W + np.stack([dx * hh, dy * hh], axis=1))
        grad_w = np.linalg.norm(pushed.gradient(W), axis=1)
        lap = float(np.max(np.abs(lap_num / hh ** 2)
                           / (grad_w / (1.0 + np.linalg.norm(W, axis=1)) + 1e-30)))
    return MapChecks(cr, det_gap, offdiag, interior_g, boundary_g, lap)
