"""Adaptive quadrature on balls, sphere caps, and graph patches.

All integrals are taken relative to a graph domain: the part of a ball above
the graph, the part of a sphere above it, or the part of the graph inside a
ball.  Everything is built from polar (d = 2) or spherical (d = 3) product
rules centered at the ball center, with the domain handled exactly per ray:
each ray's intersection with the domain is resolved by vectorized bisection
on the height function, so the domain indicator never appears as a jump
inside a smooth panel.

Angular panels are seeded at the angles where the graph meets the sphere (and
at the graph tangent directions when the center sits on the boundary), which
are exactly the places where the angular integrand loses smoothness; panels
are then split adaptively, worst first, until the summed error estimate drops
below the requested tolerance.

``domain=None`` integrates over the full ball or sphere (no clipping), which
is what interior-only checks use.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np

from .errors import QuadratureError
from .geometry import GraphDomain

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "ball_integral",
    "sphere_cap_integral",
    "boundary_patch_integral",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the product rules.

    radial, angular : int
        Gauss-Legendre points per radial segment / per angular panel.
    tol : float
        Relative tolerance driving adaptive panel splitting.
    max_depth : int
        Panel bisection depth limit; hitting it flags the estimate instead
        of silently accepting it.
    """
    radial: int = 24
    angular: int = 16
    tol: float = 1e-8
    max_depth: int = 12


@dataclass
class IntegralResult:
    value: float
    error: float
    converged: bool = True

    def __float__(self) -> float:
        return self.value


@lru_cache(maxsize=64)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gauss_on(a: float, b: float, n: int):
    x, w = _gauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _vec_bisect(fun: Callable, lo: np.ndarray, hi: np.ndarray, iters: int = 62) -> np.ndarray:
    """Bisect fun between bracketing arrays lo (fun<=0 side unknown) and hi.

    Sign orientation is taken from fun(lo); all roots are refined in lockstep
    with one vectorized call per iteration.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo = fun(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        same = (fm > 0.0) == (flo > 0.0)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


# =====================================================================
# per-ray domain resolution
# =====================================================================

def _ray_heights(domain: Optional[GraphDomain], p: np.ndarray, dirs: np.ndarray,
                 ts: np.ndarray) -> np.ndarray:
    """Height above the graph at p + t*dir for a (nrays, nt) grid of t."""
    pts = p[None, None, :] + ts[:, :, None] * dirs[:, None, :]
    return domain.height(pts)


def _segments_batch(domain: Optional[GraphDomain], p: np.ndarray, dirs: np.ndarray,
                    t_lo: float, t_hi: float, n_scan: int) -> List[List[Tuple[float, float]]]:
    """Inside-the-domain sub-intervals of [t_lo, t_hi] for a batch of rays."""
    nrays = dirs.shape[0]
    if domain is None:
        return [[(t_lo, t_hi)]] * nrays
    ts = np.linspace(t_lo, t_hi, n_scan)
    grid = np.broadcast_to(ts, (nrays, n_scan))
    g = _ray_heights(domain, p, dirs, grid)
    sign = g > 0.0
    out: List[List[Tuple[float, float]]] = []
    flips = sign[:, 1:] != sign[:, :-1]
    for i in range(nrays):
        idx = np.nonzero(flips[i])[0]
        if idx.size:
            d = dirs[i]

            def height(t, d=d):
                pts = p[None, :] + np.asarray(t)[:, None] * d[None, :]
                return domain.height(pts)

            roots = _vec_bisect(height, ts[idx], ts[idx + 1])
            cuts = np.concatenate([[t_lo], np.sort(roots), [t_hi]])
        else:
            cuts = np.array([t_lo, t_hi])
        segs = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a <= 1e-15 * max(1.0, t_hi):
                continue
            mid = p + 0.5 * (a + b) * dirs[i]
            if float(domain.height(mid)) > 0.0:
                segs.append((float(a), float(b)))
        out.append(segs)
    return out


def _scan_roots(fun: Callable, lo: float, hi: float, n_scan: int) -> np.ndarray:
    """All sign-change roots of a scalar-vectorized function on [lo, hi]."""
    ts = np.linspace(lo, hi, n_scan)
    vals = fun(ts)
    sign = vals > 0.0
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    if idx.size == 0:
        return np.empty(0)
    return np.sort(_vec_bisect(fun, ts[idx], ts[idx + 1]))


# =====================================================================
# adaptive panel controller
# =====================================================================

def _adaptive(panel_fn: Callable[[float, float], float],
              breakpoints: np.ndarray, tol: float, max_depth: int,
              max_panels: int = 4000) -> IntegralResult:
    """Split worst panels until the summed halving estimate meets tol."""
    heap = []
    counter = 0
    total = 0.0
    l1 = 0.0

    def make(a: float, b: float, coarse: Optional[float], depth: int):
        nonlocal counter, total, l1
        if coarse is None:
            coarse = panel_fn(a, b)
        m = 0.5 * (a + b)
        left = panel_fn(a, m)
        right = panel_fn(m, b)
        value = left + right
        err = abs(value - coarse)
        total += value
        l1 += abs(value)
        heapq.heappush(heap, (-err, counter, a, b, m, left, right, value, depth))
        counter += 1

    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        if b - a > 0.0:
            make(a, b, None, 0)
    if not heap:
        return IntegralResult(0.0, 0.0, True)

    while counter < max_panels:
        scale = max(abs(total), 0.1 * l1, 1e-300)
        err_sum = sum(-e[0] for e in heap)
        if err_sum <= tol * scale:
            return IntegralResult(total, err_sum, True)
        neg_err, _, a, b, m, left, right, value, depth = heap[0]
        if depth >= max_depth:
            return IntegralResult(total, err_sum, False)
        heapq.heappop(heap)
        total -= value
        l1 -= abs(value)
        make(a, m, left, depth + 1)
        make(m, b, right, depth + 1)
    err_sum = sum(-e[0] for e in heap)
    return IntegralResult(total, err_sum, False)


def _azimuth_doubling(slice_fn: Callable[[float], Tuple[float, float]],
                      m0: int, tol: float, max_doublings: int) -> IntegralResult:
    """Periodic trapezoid rule in the azimuth, doubled until stable.

    slice_fn returns (value, error) for one azimuthal half-plane; values are
    cached on nested dyadic nodes so doubling only pays for the new ones.
    """
    cache = {}
    inner_err = 0.0

    def node(frac: Fraction) -> float:
        nonlocal inner_err
        if frac not in cache:
            val, err = slice_fn(_TWO_PI * float(frac))
            cache[frac] = val
            inner_err = max(inner_err, err)
        return cache[frac]

    m = m0
    prev = None
    for level in range(max_doublings + 1):
        vals = [node(Fraction(k, m)) for k in range(m)]
        cur = (_TWO_PI / m) * sum(vals)
        if prev is not None:
            diff = abs(cur - prev)
            scale = max(abs(cur), 1e-300)
            if diff <= tol * scale:
                return IntegralResult(cur, diff + inner_err, True)
        prev = cur
        m *= 2
    return IntegralResult(prev, abs(prev) * tol + inner_err, False)


# =====================================================================
# event angles
# =====================================================================

def _check_chart(domain: Optional[GraphDomain], p: np.ndarray, r: float):
    if domain is None or domain.is_flat:
        return
    reach = float(np.linalg.norm(p[:-1])) + r
    if reach > domain.chart_radius:
        raise QuadratureError(
            f"ball reaches horizontal radius {reach:.3g}, beyond the chart "
            f"({domain.chart_radius:.3g}) where the profile is exact")


def _sphere_graph_events_2d(domain: GraphDomain, p: np.ndarray, r: float) -> np.ndarray:
    """Angles (from p) of graph/sphere intersections, plus tangent directions
    when p lies on the graph."""

    def hfun(xs):
        xs = np.asarray(xs, dtype=float)
        pts = domain.boundary_point(xs[..., None])
        diff = pts - p[None, :]
        return np.sum(diff * diff, axis=-1) - r * r

    lo, hi = p[0] - r, p[0] + r
    roots = _scan_roots(hfun, lo, hi, 257)
    angles = []
    for x in roots:
        bp = domain.boundary_point(np.array([x]))
        angles.append(math.atan2(bp[1] - p[1], bp[0] - p[0]) % _TWO_PI)
    if abs(p[1] - float(domain.phi(np.array([p[0]])))) <= 1e-13 * max(r, 1.0):
        slope = float(domain.grad_phi(np.array([p[0]]))[0])
        base = math.atan2(slope, 1.0)
        angles.extend([base % _TWO_PI, (base + math.pi) % _TWO_PI])
    return np.array(sorted(set(angles)))


def _angular_breakpoints(events: np.ndarray) -> np.ndarray:
    """Closed cover of [0, 2pi] whose interior breakpoints are the events."""
    if events.size == 0:
        return np.array([0.0, math.pi, _TWO_PI])
    pts = np.concatenate([events, [events[0] + _TWO_PI]])
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        # keep panels from spanning more than a half turn
        n_sub = max(1, int(math.ceil((b - a) / math.pi)))
        for j in range(1, n_sub + 1):
            out.append(a + (b - a) * j / n_sub)
    return np.array(out)


def _slice_events_3d(domain: GraphDomain, p: np.ndarray, r: float,
                     beta: float) -> np.ndarray:
    """Polar-angle events for the vertical half-plane at azimuth beta."""
    e = np.array([math.cos(beta), math.sin(beta)])

    def hfun(ts):
        ts = np.asarray(ts, dtype=float)
        xs = p[None, :2] + ts[:, None] * e[None, :]
        pts = np.concatenate([xs, domain.phi(xs)[:, None]], axis=1)
        diff = pts - p[None, :]
        return np.sum(diff * diff, axis=1) - r * r

    roots = _scan_roots(hfun, 0.0, r, 129)
    events = []
    for t in roots:
        x = p[:2] + t * e
        psi = math.atan2(t, float(domain.phi(x[None, :])[0]) - p[2])
        events.append(psi)
    if abs(p[2] - float(domain.phi(p[None, :2])[0])) <= 1e-13 * max(r, 1.0):
        slope = float(domain.grad_phi(p[None, :2])[0] @ e)
        events.append(math.atan2(1.0, slope))
    return np.array(sorted(set(events)))


def _polar_breakpoints(events: np.ndarray) -> np.ndarray:
    pts = [0.0] + [e for e in events if 0.0 < e < math.pi] + [math.pi]
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n_sub = max(1, int(math.ceil((b - a) / (0.5 * math.pi))))
        for j in range(1, n_sub + 1):
            out.append(a + (b - a) * j / n_sub)
    return np.array(out)


# =====================================================================
# ball integrals
# =====================================================================

def ball_integral(domain: Optional[GraphDomain], p, r: float, f: Callable,
                  spec: Optional[QuadratureSpec] = None,
                  r_inner: float = 0.0) -> IntegralResult:
    """Integral of f over {ball of radius r at p} intersected with the domain.

    Parameters
    ----------
    domain : GraphDomain or None
        None integrates over the full ball (annulus when r_inner > 0).
    p : array-like, shape (d,)
    r : float
    f : callable
        Vectorized integrand mapping (n, d) points to (n,) values.
    spec : QuadratureSpec
    r_inner : float
        Inner radius; the default 0 integrates the full ball.
    """
    spec = spec or QuadratureSpec()
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    if d not in (2, 3):
        raise QuadratureError("only dimensions 2 and 3 are supported")
    if not (0.0 <= r_inner < r):
        raise QuadratureError("need 0 <= r_inner < r")
    _check_chart(domain, p, r)

    if d == 2:
        return _ball_2d(domain, p, r, f, spec, r_inner)
    return _ball_3d(domain, p, r, f, spec, r_inner)


def _radial_panel_value(domain, p, dirs, w_ang, r_inner, r, f, spec, power: int,
                        extra_ang=None) -> float:
    """Sum over rays of the weighted radial integrals along each ray."""
    seg_lists = _segments_batch(domain, p, dirs, 0.0, r, max(33, spec.radial + 9))
    pts = []
    wts = []
    for i, segs in enumerate(seg_lists):
        factor = w_ang[i] if extra_ang is None else w_ang[i] * extra_ang[i]
        for a, b in segs:
            a = max(a, r_inner)
            if b <= a:
                continue
            t, wt = _gauss_on(a, b, spec.radial)
            pts.append(p[None, :] + t[:, None] * dirs[i][None, :])
            wts.append(factor * wt * t ** power)
    if not pts:
        return 0.0
    pts = np.concatenate(pts, axis=0)
    wts = np.concatenate(wts)
    return float(np.dot(wts, np.asarray(f(pts), dtype=float)))


def _ball_2d(domain, p, r, f, spec, r_inner) -> IntegralResult:
    events = np.empty(0) if domain is None else _sphere_graph_events_2d(domain, p, r)
    breaks = _angular_breakpoints(events)

    def panel(a: float, b: float) -> float:
        theta, w = _gauss_on(a, b, spec.angular)
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return _radial_panel_value(domain, p, dirs, w, r_inner, r, f, spec, 1)

    return _adaptive(panel, breaks, spec.tol, spec.max_depth)


def _ball_3d(domain, p, r, f, spec, r_inner) -> IntegralResult:
    def slice_fn(beta: float) -> Tuple[float, float]:
        e = np.array([math.cos(beta), math.sin(beta)])
        events = np.empty(0) if domain is None else _slice_events_3d(domain, p, r, beta)
        breaks = _polar_breakpoints(events)

        def panel(a: float, b: float) -> float:
            psi, w = _gauss_on(a, b, spec.angular)
            dirs = np.stack([np.sin(psi) * e[0], np.sin(psi) * e[1],
                             np.cos(psi)], axis=1)
            return _radial_panel_value(domain, p, dirs, w, r_inner, r, f, spec, 2,
                                       extra_ang=np.sin(psi))

        res = _adaptive(panel, breaks, 0.25 * spec.tol, spec.max_depth)
        return res.value, res.error

    m0 = max(8, spec.angular)
    return _azimuth_doubling(slice_fn, m0, spec.tol, max_doublings=5)


# =====================================================================
# sphere caps
# =====================================================================

def sphere_cap_integral(domain: Optional[GraphDomain], p, r: float, f: Callable,
                        spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Surface integral of f over the sphere of radius r at p, clipped to the
    domain (the full sphere when domain is None)."""
    spec = spec or QuadratureSpec()
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    if d not in (2, 3):
        raise QuadratureError("only dimensions 2 and 3 are supported")
    _check_chart(domain, p, r)

    if d == 2:
        events = np.empty(0) if domain is None else _sphere_graph_events_2d(domain, p, r)
        breaks = _angular_breakpoints(events)

        def inside(theta_mid: float) -> bool:
            if domain is None:
                return True
            q = p + r * np.array([math.cos(theta_mid), math.sin(theta_mid)])
            return float(domain.height(q)) > 0.0

        def panel(a: float, b: float) -> float:
            if not inside(0.5 * (a + b)):
                return 0.0
            theta, w = _gauss_on(a, b, spec.angular)
            pts = p[None, :] + r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
            return r * float(np.dot(w, np.asarray(f(pts), dtype=float)))

        return _adaptive(panel, breaks, spec.tol, spec.max_depth)

    def slice_fn(beta: float) -> Tuple[float, float]:
        e = np.array([math.cos(beta), math.sin(beta)])

        def gfun(psis):
            psis = np.asarray(psis, dtype=float)
            xs = p[None, :2] + (r * np.sin(psis))[:, None] * e[None, :]
            return p[2] + r * np.cos(psis) - domain.phi(xs)

        if domain is None:
            arcs = [(0.0, math.pi)]
        else:
            roots = _scan_roots(gfun, 0.0, math.pi, 257)
            cuts = np.concatenate([[0.0], roots, [math.pi]])
            arcs = []
            for a, b in zip(cuts[:-1], cuts[1:]):
                if b - a > 1e-14 and gfun(np.array([0.5 * (a + b)]))[0] > 0.0:
                    arcs.append((a, b))
        if not arcs:
            return 0.0, 0.0

        def panel(a: float, b: float) -> float:
            psi, w = _gauss_on(a, b, spec.angular)
            pts = p[None, :] + r * np.stack(
                [np.sin(psi) * e[0], np.sin(psi) * e[1], np.cos(psi)], axis=1)
            vals = np.asarray(f(pts), dtype=float)
            return r * r * float(np.dot(w * np.sin(psi), vals))

        res = _adaptive_multi(panel, arcs, 0.25 * spec.tol, spec.max_depth)
        return res.value, res.error

    return _azimuth_doubling(slice_fn, max(8, spec.angular), spec.tol, 5)


def _adaptive_multi(panel_fn, intervals, tol, max_depth) -> IntegralResult:
    """Adaptive splitting over a list of disjoint intervals."""
    total, err, ok = 0.0, 0.0, True
    for a, b in intervals:
        res = _adaptive(panel_fn, np.array([a, b]), tol, max_depth)
        total += res.value
        err += res.error
        ok = ok and res.converged
    return IntegralResult(total, err, ok)


# =====================================================================
# boundary patches
# =====================================================================

def boundary_patch_integral(domain: GraphDomain, p, r: float, f: Callable,
                            spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Integral of f over the piece of the graph inside the ball of radius r.

    The surface measure sqrt(1 + |grad phi|^2) is applied internally; f sees
    ambient points on the graph.
    """
    spec = spec or QuadratureSpec()
    if domain is None:
        raise QuadratureError("boundary patch needs a graph domain")
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    _check_chart(domain, p, r)

    if d == 2:
        def hfun(xs):
            xs = np.asarray(xs, dtype=float)
            pts = domain.boundary_point(xs[..., None])
            diff = pts - p[None, :]
            return np.sum(diff * diff, axis=-1) - r * r

        roots = _scan_roots(hfun, p[0] - r, p[0] + r, 257)
        cuts = np.concatenate([[p[0] - r], roots, [p[0] + r]])
        segments = [(a, b) for a, b in zip(cuts[:-1], cuts[1:])
                    if b - a > 1e-15 * r and hfun(np.array([0.5 * (a + b)]))[0] < 0.0]
        if not segments:
            return IntegralResult(0.0, 0.0, True)

        def panel(a: float, b: float) -> float:
            x, w = _gauss_on(a, b, spec.radial)
            pts = domain.boundary_point(x[:, None])
            vals = np.asarray(f(pts), dtype=float) * domain.area_element(x[:, None])
            return float(np.dot(w, vals))

        return _adaptive_multi(panel, segments, spec.tol, spec.max_depth)

    def slice_fn(beta: float) -> Tuple[float, float]:
        e = np.array([math.cos(beta), math.sin(beta)])

        def hfun(ts):
            ts = np.asarray(ts, dtype=float)
            xs = p[None, :2] + ts[:, None] * e[None, :]
            pts = np.concatenate([xs, domain.phi(xs)[:, None]], axis=1)
            diff = pts - p[None, :]
            return np.sum(diff * diff, axis=1) - r * r

        roots = _scan_roots(hfun, 0.0, r, 129)
        cuts = np.concatenate([[0.0], roots, [r]])
        segments = [(a, b) for a, b in zip(cuts[:-1], cuts[1:])
                    if b - a > 1e-15 * r and hfun(np.array([0.5 * (a + b)]))[0] < 0.0]
        if not segments:
            return 0.0, 0.0

        def panel(a: float, b: float) -> float:
            t, w = _gauss_on(a, b, spec.radial)
            xs = p[None, :2] + t[:, None] * e[None, :]
            pts = np.concatenate([xs, domain.phi(xs)[:, None]], axis=1)
            vals = np.asarray(f(pts), dtype=float) * domain.area_element(xs)
            return float(np.dot(w * t, vals))

        res = _adaptive_multi(panel, segments, 0.25 * spec.tol, spec.max_depth)
        return res.value, res.error

    return _azimuth_doubling(slice_fn, max(8, spec.angular), spec.tol, 5)
