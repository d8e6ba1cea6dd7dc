"""Critical and singular set detection, counting, and content estimation.

Critical points are zeros of the gradient in the closed domain; singular
points additionally have vanishing value.  Detection runs Newton iteration
on every seed whose gradient is already small, with a gradient-descent
fallback where the Hessian degenerates.  Content is estimated by greedy
ball covers of the small-gradient sublevel set, and ``theorem_pipeline``
chains the certificates that the covering argument needs.
"""

from dataclasses import dataclass, field as dfield
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import PipelineStageError
from .geometry import GraphDomain, admissibility
from .quadrature import QuadratureSpec, ball_integral
from .harmonic import ScalarField
from .straighten import (CoefficientField, StraighteningMap, extend_field,
                         map_G, modulus_certificate, separation_pairs)

CAPTURE_FRAC = 1e-2
GRAD_TOL = 1e-10
VALUE_TOL = 1e-8
DEDUP_FRAC = 1e-6


@dataclass
class Region:
    """Axis-aligned sampling box, optionally clipped to a graph domain."""

    center: np.ndarray
    halfwidth: float
    domain: Optional[GraphDomain] = None

    def __post_init__(self):
        self.center = np.atleast_1d(np.asarray(self.center, dtype=float))

    @property
    def dimension(self) -> int:
        return self.center.size

    @property
    def diameter(self) -> float:
        return 2.0 * self.halfwidth * np.sqrt(self.dimension)

    def lattice(self, spacing: float) -> np.ndarray:
        """Symmetric grid of step ``spacing`` covering the box."""
        n = max(int(np.floor(self.halfwidth / spacing)), 0)
        axis = spacing * np.arange(-n, n + 1)
        grids = np.meshgrid(*([axis] * self.dimension), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1) + self.center
        return self.clip(pts, tol=0.0)

    def clip(self, pts: np.ndarray, tol: float) -> np.ndarray:
        keep = np.all(np.abs(pts - self.center) <= self.halfwidth + tol, axis=1)
        pts = pts[keep]
        if self.domain is not None:
            above = pts[:, -1] - self.domain.height(pts[:, :-1]) >= -tol
            pts = pts[above]
        return pts

    def contains(self, x: np.ndarray, tol: float) -> bool:
        return self.clip(x[None, :], tol).shape[0] == 1


@dataclass
class CriticalPoint:
    location: np.ndarray
    grad_norm: float
    value: float
    kind: str            # "singular" or "critical"
    method: str          # "newton" or "descent"


@dataclass
class CriticalSetEstimate:
    """Refined gradient zeros of a field over a region, with classification."""

    points: List[CriticalPoint]
    region: Region
    grad_scale: float
    value_scale: float
    grad_tol: float
    value_tol: float
    seeds_total: int
    seeds_captured: int

    @property
    def locations(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.region.dimension))
        return np.array([p.location for p in self.points])

    @property
    def singular(self) -> List[CriticalPoint]:
        return [p for p in self.points if p.kind == "singular"]

    @property
    def critical_only(self) -> List[CriticalPoint]:
        return [p for p in self.points if p.kind == "critical"]

    @property
    def fallback_used(self) -> bool:
        return any(p.method == "descent" for p in self.points)


def _descend(field: ScalarField, x: np.ndarray, step_tol: float,
             max_iter: int = 400) -> Optional[np.ndarray]:
    """Backtracking gradient descent on |grad u|^2 / 2 from x."""
    for _ in range(max_iter):
        g = field.gradient(x)
        hess = field.hessian(x)
        d = hess @ g
        f0 = 0.5 * float(g @ g)
        dn2 = float(d @ d)
        if dn2 == 0.0:
            return x
        eta = 1.0
        for _ in range(60):
            xn = x - eta * d
            gn = field.gradient(xn)
            if 0.5 * float(gn @ gn) <= f0 - 1e-4 * eta * dn2:
                break
            eta *= 0.5
        else:
            return None
        moved = eta * np.sqrt(dn2)
        x = xn
        if moved <= step_tol:
            return x
    return x


def _refine_batch(field: ScalarField, seeds: np.ndarray, step_tol: float,
                  max_iter: int = 80) -> List[Optional[Tuple[np.ndarray, str]]]:
    """Newton on grad u = 0, iterated over all seeds at once.

    Per-seed trajectories are independent; batching them just amortizes
    the field evaluations.  Seeds whose Hessian degenerates drop out to a
    scalar descent pass; divergent seeds report None.
    """
    m = len(seeds)
    X = np.array(seeds, dtype=float)
    results: List[Optional[Tuple[np.ndarray, str]]] = [None] * m
    alive = np.ones(m, dtype=bool)
    to_descend: List[int] = []
    # convergent Newton paths shrink steps geometrically; a step that stops
    # shrinking this many times in a row is cycling on a non-zero (e.g. a
    # gradient kink of an extended field) and gets cut off
    best_step = np.full(m, np.inf)
    stalls = np.zeros(m, dtype=int)
    travel_cap = (1e6 * step_tol + 10.0
                  + 10.0 * np.linalg.norm(seeds, axis=1).max())
    for _ in range(max_iter):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        g = field.gradient(X[idx])
        hess = field.hessian(X[idx])
        cond = np.linalg.cond(hess)
        bad = ~np.isfinite(cond) | (cond > 1e12)
        for j in idx[bad]:
            to_descend.append(int(j))
            alive[j] = False
        good = idx[~bad]
        if good.size == 0:
            continue
        step = np.linalg.solve(hess[~bad], g[~bad][..., None])[..., 0]
        finite = np.all(np.isfinite(step), axis=1)
        alive[good[~finite]] = False
        good, step = good[finite], step[finite]
        X[good] = X[good] - step
        fled = np.linalg.norm(X[good], axis=1) > travel_cap
        alive[good[fled]] = False
        snorm = np.linalg.norm(step, axis=1)
        shrank = snorm < 0.9 * best_step[good]
        stalls[good] = np.where(shrank, 0, stalls[good] + 1)
        best_step[good] = np.minimum(best_step[good], snorm)
        alive[good[(stalls[good] >= 8) & ~fled]] = False
        landed = snorm <= step_tol
        for j, ok in zip(good, landed & ~fled):
            if ok:
                results[int(j)] = (X[int(j)].copy(), "newton")
                alive[j] = False
    for j in to_descend:
        y = _descend(field, X[j], step_tol)
        if y is not None:
            results[j] = (y, "descent")
    return results


def find_critical_points(field: ScalarField, region: Region, spacing: float,
                         grad_tol: float = GRAD_TOL,
                         value_tol: float = VALUE_TOL) -> CriticalSetEstimate:
    """Detect gradient zeros of ``field`` on the closed region.

    Seeds a lattice of step ``spacing``, keeps seeds whose gradient could
    belong to a zero within one lattice cell (a fraction of the regional
    gradient scale, widened by the local Hessian scale times the spacing),
    refines each by Newton iteration (descent fallback on singular
    Hessians), then deduplicates and classifies.  Points are accepted only
    when the final gradient is below ``grad_tol`` times the gradient scale
    and the point lies in the closed region; singular means the value is
    also below ``value_tol`` times the value scale.
    """
    seeds = region.lattice(spacing)
    gnorm = np.linalg.norm(field.gradient(seeds), axis=1)
    grad_scale = float(np.max(gnorm)) if len(gnorm) else 0.0
    vals = field.value(seeds)
    value_scale = float(np.max(np.abs(vals))) if len(vals) else 0.0
    step_tol = 1e-14 * max(region.diameter, 1.0)
    member_tol = max(grad_tol * region.diameter, 10.0 * step_tol)

    capture_tol = CAPTURE_FRAC * grad_scale
    if len(seeds):
        # a simple zero sits within a cell of some seed, where the gradient
        # is at most Hessian scale times the spacing; a robust quantile
        # keeps interface kinks of extended fields from inflating the scale
        sub = seeds[::max(1, len(seeds) // 128)]
        hess_scale = float(np.percentile(
            np.linalg.norm(field.hessian(sub), axis=(1, 2)), 90.0))
        if np.isfinite(hess_scale):
            capture_tol = max(capture_tol, 1.5 * spacing * hess_scale)
    captured = seeds[gnorm <= capture_tol] if len(seeds) else seeds
    hits = []
    if len(captured):
        for out in _refine_batch(field, captured, step_tol):
            if out is None:
                continue
            x, method = out
            gn = float(np.linalg.norm(field.gradient(x)))
            if gn > grad_tol * grad_scale:
                continue
            if not region.contains(x, member_tol):
                continue
            hits.append((x, gn, method))

    # lexicographic order, then greedy dedup at a fraction of the diameter
    dedup = DEDUP_FRAC * region.diameter
    hits.sort(key=lambda h: tuple(h[0]))
    points = []
    for x, gn, method in hits:
        if any(np.linalg.norm(x - p.location) <= dedup for p in points):
            continue
        val = float(field.value(x))
        kind = "singular" if abs(val) <= value_tol * value_scale else "critical"
        points.append(CriticalPoint(x, gn, val, kind, method))

    return CriticalSetEstimate(points, region, grad_scale, value_scale,
                               grad_tol, value_tol, len(seeds), len(captured))


@dataclass
class ContentRow:
    r: float
    count: int
    content: float
    flag: str = "ok"


def _median_hessian(field: ScalarField, region: Region,
                    per_axis: int = 9) -> float:
    axis = np.linspace(-region.halfwidth, region.halfwidth, per_axis)
    grids = np.meshgrid(*([axis] * region.dimension), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) + region.center
    pts = region.clip(pts, tol=0.0)
    hess = field.hessian(pts)
    return float(np.median(np.linalg.norm(hess, axis=(1, 2))))


def minkowski_content(field: ScalarField, region: Region,
                      r_list: Sequence[float]) -> List[ContentRow]:
    """Greedy ball-cover counts of the small-gradient set, per radius.

    The sublevel set {|grad u| <= r * median |Hess u|} is sampled on an
    r/2-net; a greedy cover by r-balls is counted and count * r^(d-2)
    reported.  A degenerate threshold (selecting nothing at the largest
    radius, or everything) is flagged on the affected rows.
    """
    med = _median_hessian(field, region)
    d = region.dimension
    rows = []
    for r in r_list:
        net = region.lattice(r / 2.0)
        gn = np.linalg.norm(field.gradient(net), axis=1)
        active = net[gn <= r * med]
        flag = "ok"
        if len(active) == 0:
            flag = "empty"
        elif len(active) == len(net):
            flag = "full"
        count = 0
        remaining = active
        while len(remaining):
            center = remaining[0]
            count += 1
            # each chosen center covers net points within 2r
            far = np.linalg.norm(remaining - center, axis=1) > 2.0 * r
            remaining = remaining[far]
        rows.append(ContentRow(float(r), count, count * float(r) ** (d - 2), flag))
    return rows


@dataclass
class DoublingSample:
    center: np.ndarray
    r: float
    ratio: float


@dataclass
class DoublingCertificate:
    """Supremum of centered two-ball mass ratios over a deterministic sweep."""

    samples: List[DoublingSample]
    sup_ratio: float

    @property
    def worst(self) -> DoublingSample:
        return max(self.samples, key=lambda s: s.ratio)


def doubling_certificate(field: ScalarField, centers: np.ndarray,
                         radii: Sequence[float],
                         domain: Optional[GraphDomain] = None,
                         spec: Optional[QuadratureSpec] = None) -> DoublingCertificate:
    """Certify the normalized doubling bound over a (center, radius) sweep.

    For each center X and radius r the ratio of the centered masses
    int |u - u(X)|^2 over B_2r and over B_r is recorded; the certificate
    value is the supremum.  The sweep is a deterministic grid, so the
    certificate is reproducible bit for bit.
    """
    spec = spec or QuadratureSpec()
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    samples = []
    for X in centers:
        u0 = float(field.value(X))
        sq = lambda pts: (field.value(pts) - u0) ** 2
        for r in radii:
            inner = ball_integral(domain, X, float(r), sq, spec).value
            outer = ball_integral(domain, X, 2.0 * float(r), sq, spec).value
            ratio = outer / inner if inner > 0.0 else np.inf
            samples.append(DoublingSample(X.copy(), float(r), float(ratio)))
    sup = max(s.ratio for s in samples) if samples else np.inf
    return DoublingCertificate(samples, float(sup))


def certificate_grid(box_center: np.ndarray, box_halfwidth: float,
                     per_axis: int, radii: Sequence[float]) -> np.ndarray:
    """Deterministic lexicographic center grid for doubling sweeps."""
    box_center = np.atleast_1d(np.asarray(box_center, dtype=float))
    axis = np.linspace(-box_halfwidth, box_halfwidth, per_axis)
    grids = np.meshgrid(*([axis] * box_center.size), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1) + box_center


@dataclass
class PipelineReport:
    """Artifacts of the staged critical-set estimate."""

    stages: List[str] = dfield(default_factory=list)
    admissible: object = None
    lambda_u: float = np.nan
    lambda_ext: float = np.nan
    holder_alpha: float = np.nan
    holder_constant: float = np.nan
    estimate: Optional[CriticalSetEstimate] = None
    content: Optional[List[ContentRow]] = None
    pullback_gap: float = np.nan
    n_charts: int = 1


def theorem_pipeline(domain: GraphDomain, field: ScalarField, R: float,
                     spec: Optional[QuadratureSpec] = None,
                     holder_alpha: float = 0.5,
                     ratio_cap: float = 1e8) -> PipelineReport:
    """Run the staged estimate of the critical set near the boundary.

    Stages: (1) domain admissibility, (2) normalized doubling certificate
    for the field on interior balls, (3) straightened odd extension and its
    doubling certificate on full balls, (4) Hölder certificate for the
    reflected coefficients, (5) critical-set detection and content for the
    extension, checked against the field through the straightening map.
    Any stage failure raises ``PipelineStageError`` carrying the stage name
    and the partial report.
    """
    spec = spec or QuadratureSpec()
    report = PipelineReport()
    d = domain.dimension

    report.admissible = admissibility(domain)
    if not report.admissible.admissible:
        raise PipelineStageError("admissibility", "domain outside the class",
                                 report)
    report.stages.append("admissibility")

    # interior sweep: centers one quarter-radius above the graph
    h = R / 4.0
    centers = certificate_grid(np.zeros(d - 1), R / 8.0, 3, [])
    centers = np.column_stack([centers, domain.phi(centers) + h])
    radii = [h / 8.0, h / 4.0]
    cert_u = doubling_certificate(field, centers, radii, domain=None, spec=spec)
    report.lambda_u = cert_u.sup_ratio
    if not np.isfinite(cert_u.sup_ratio) or cert_u.sup_ratio > ratio_cap:
        raise PipelineStageError("doubling-u",
                                 f"sup ratio {cert_u.sup_ratio:.3e}", report)
    report.stages.append("doubling-u")

    sm = StraighteningMap(domain)
    ext = extend_field(field, sm)
    w = sm.working_radius or sm.find_working_radius()
    slab = min(w / 2.0, R / 4.0)
    ext_centers = certificate_grid(np.zeros(d), slab / 2.0, 3, [])
    ext_radii = [slab / 8.0, slab / 4.0]
    cert_e = doubling_certificate(ext, ext_centers, ext_radii, domain=None,
                                  spec=spec)
    report.lambda_ext = cert_e.sup_ratio
    if not np.isfinite(cert_e.sup_ratio) or cert_e.sup_ratio > ratio_cap:
        raise PipelineStageError("extension-doubling",
                                 f"sup ratio {cert_e.sup_ratio:.3e}", report)
    report.stages.append("extension-doubling")

    coef = CoefficientField(sm)
    pairs = separation_pairs(box=slab, levels=4, per_level=6, base_sep=slab,
                             dimension=d)
    report.holder_alpha = holder_alpha
    report.holder_constant = modulus_certificate(coef, holder_alpha, pairs)
    if not np.isfinite(report.holder_constant):
        raise PipelineStageError("holder", "certificate not finite", report)
    report.stages.append("holder")

    region = Region(np.zeros(d), slab)
    estimate = find_critical_points(ext, region, spacing=slab / 6.0)
    content = minkowski_content(ext, region, [slab / 4.0, slab / 8.0])
    report.estimate = estimate
    report.content = content
    gap = 0.0
    for p in estimate.points:
        if p.location[-1] <= 0.0:
            continue
        y = map_G(sm, p.location[None, :-1], p.location[-1:])[0]
        gap = max(gap, float(np.linalg.norm(field.gradient(y))))
    report.pullback_gap = gap
    if estimate.grad_scale > 0.0 and gap > 1e-6 * estimate.grad_scale:
        raise PipelineStageError("critical-content",
                                 f"pull-back gradient {gap:.3e}", report)
    report.stages.append("critical-content")
    return report
