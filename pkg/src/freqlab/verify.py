"""Acceptance suite: thirteen certificate checks over builtin fixtures.

Each criterion is a function returning (ok, detail, csv_paths); the suite
wrapper times it, catches failures (reported, never thrown), and assembles
a machine-readable report.  Criteria that certify monotonicity are flagged
WARN instead of PASS/FAIL when the quadrature tolerance has been loosened
by two orders of magnitude or more, since their inequalities are then
dominated by integration error rather than by the quantities themselves.
"""

import filecmp
import math
import os
import time
from dataclasses import dataclass, field as dfield
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config
from .critical import (Region, certificate_grid, doubling_certificate,
                       find_critical_points, minkowski_content)
from .conformal2d import build_map, map_checks, transfer_count
from .errors import FreqlabError
from .experiments import DEMO_CONFIGS, run_experiment, write_csv, _freq_row
from .frequency import (derivative_terms, doubling_ratios,
                        fd_frequency_derivative, frequency_report, pinch,
                        sphere_comparison, spatial_variation_check)
from .geometry import GraphDomain, nearest_boundary
from .harmonic import (PolynomialField, exact_polynomial, graph_adapted_data,
                       plane_harmonic, simon_fixture, solve_mfs)
from .quadrature import (QuadratureSpec, ball_integral,
                         boundary_patch_integral, sphere_cap_integral)
from .straighten import (CoefficientField, StraighteningMap, conormal_jump,
                         extend_field, map_G, modulus_certificate,
                         separation_pairs, weak_residual)

__all__ = ["CriterionResult", "SuiteReport", "verify_all", "CRITERIA"]

DEFAULT_QUAD_TOL = 1e-8


@dataclass
class VerifyContext:
    outdir: Optional[str]
    seed: int
    spec: QuadratureSpec
    loosened: bool

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng(1000 * self.seed + salt)

    def csv(self, name: str, header: Sequence[str],
            rows: Sequence[Sequence]) -> List[str]:
        if self.outdir is None:
            return []
        path = os.path.join(self.outdir, name)
        write_csv(path, header, rows)
        return [path]


@dataclass
class CriterionResult:
    number: int
    name: str
    status: str              # PASS | FAIL | WARN | NOOP
    detail: str
    runtime: float
    limit: float
    csv_files: List[str] = dfield(default_factory=list)

    def line(self) -> str:
        return (f"{self.status:4s} {self.number:2d} {self.name:28s} "
                f"{self.runtime:6.1f}s  {self.detail}")


@dataclass
class SuiteReport:
    results: List[CriterionResult]
    noop: bool = False

    @property
    def failed(self) -> List[CriterionResult]:
        return [r for r in self.results if r.status == "FAIL"]

    @property
    def all_ok(self) -> bool:
        return not self.failed

    def lines(self) -> List[str]:
        if self.noop:
            return ["NOOP: no criteria selected"]
        out = [r.line() for r in self.results]
        n_pass = sum(r.status == "PASS" for r in self.results)
        n_warn = sum(r.status == "WARN" for r in self.results)
        out.append(f"{n_pass} passed, {len(self.failed)} failed, "
                   f"{n_warn} warned of {len(self.results)}")
        return out


# =====================================================================
# fixture helpers
# =====================================================================

def _flat2() -> GraphDomain:
    return GraphDomain.flat(R=1.0, dimension=2)


def _qbump() -> GraphDomain:
    return GraphDomain.quadratic_bump(5e-4, R=1.0, dimension=2)


def _coswin() -> GraphDomain:
    return GraphDomain.cosine_window(5e-3, 0.7, R=1.0, dimension=2)


def _mfs_on(domain: GraphDomain, degree: int = 3,
            boundary_tol: float = 1e-4):
    data = graph_adapted_data(domain, plane_harmonic(degree))
    return solve_mfs(domain, np.zeros(2), 0.8 * domain.R, data,
                     boundary_tol=boundary_tol)


def _perturbed(*parts: Tuple[int, float]) -> PolynomialField:
    total = None
    for degree, weight in parts:
        term = plane_harmonic(degree) * weight
        total = term if total is None else total + term
    return total


# =====================================================================
# criteria
# =====================================================================

def criterion_01(ctx: VerifyContext):
    """Homogeneous plane fields have frequency equal to their degree."""
    flat = _flat2()
    worst = 0.0
    for k in (1, 2, 3, 4):
        fld = plane_harmonic(k)
        for r in (0.1, 0.5, 1.0):
            rep = frequency_report(fld, flat, np.zeros(2), r, ctx.spec)
            worst = max(worst, abs(rep.n_sphere - k), abs(rep.n_centered - k))
    return worst <= 1e-6, f"max |N - k| = {worst:.2e} (gate 1e-06)", []


def criterion_02(ctx: VerifyContext):
    """Centered frequency grows with the radius on interior windows."""
    rng = ctx.rng(2)
    fixtures = [plane_harmonic(k) for k in (1, 2, 3, 4)]
    fixtures.append(_perturbed((2, 1.0), (3, 0.3)))
    worst = -math.inf
    count = 0
    for fld in fixtures:
        for _ in range(40):
            p = np.array([rng.uniform(-0.4, 0.4), rng.uniform(0.25, 0.7)])
            dist = p[1]
            r2 = dist * rng.uniform(0.55, 0.95)
            r1 = r2 * rng.uniform(0.3, 0.8)
            n1 = frequency_report(fld, None, p, r1, ctx.spec).n_centered
            n2 = frequency_report(fld, None, p, r2, ctx.spec).n_centered
            worst = max(worst, n1 - n2)
            count += 1
    ok = worst <= 1e-5
    return ok, f"{count} triples, worst N(r1) - N(r2) = {worst:.2e}", []


def criterion_03(ctx: VerifyContext):
    """Exact derivative decomposition against finite differences in r."""
    rng = ctx.rng(3)
    flat = _flat2()
    worst = 0.0
    n_done = 0
    csv_rows = []

    def check(fld, domain, p, r):
        nonlocal worst, n_done
        terms = derivative_terms(fld, domain, p, r, ctx.spec)
        fd = fd_frequency_derivative(fld, domain, p, r, 1e-3, ctx.spec)
        gap = abs(terms.n_prime_model - fd) / (abs(fd) + 1e-2)
        worst = max(worst, gap)
        n_done += 1

    interior = [plane_harmonic(2), plane_harmonic(3),
                _perturbed((2, 1.0), (3, 0.3)),
                _perturbed((1, 0.5), (4, 0.2))]
    for i in range(32):
        fld = interior[i % len(interior)]
        p = np.array([rng.uniform(-0.3, 0.3), rng.uniform(0.35, 0.6)])
        r = p[1] * rng.uniform(0.35, 0.8)
        check(fld, None, p, r)
        csv_rows.append(_freq_row(fld, None, p, r, ctx.spec))

    for i in range(15):
        # boundary-vanishing fields, windows crossing the graph; the center
        # height varies so both zero and nonzero center values appear
        fld = plane_harmonic(2 + i % 3)
        height = (0.0, 0.04, 0.1)[i % 3]
        p = np.array([rng.uniform(-0.2, 0.2), height])
        r = rng.uniform(max(2.5 * height, 0.05), 0.3)
        check(fld, flat, p, r)

    dom = _qbump()
    fld = _mfs_on(dom, degree=3, boundary_tol=1e-5)
    for height, r in ((0.0, 0.1), (0.03, 0.12), (0.06, 0.2)):
        x = 0.05
        p = np.array([x, float(dom.phi(np.array([[x]]))[0]) + height])
        check(fld, dom, p, r)

    paths = ctx.csv("verify_frequency.csv",
                    [f"center_x{i+1}" for i in range(2)]
                    + ["r", "D", "H_S", "H_C", "N_S", "N_C", "R_h", "R_b",
                       "Err_r", "W", "quad_err"], csv_rows)
    ok = worst <= 1e-2
    return ok, f"{n_done} samples, worst relative gap {worst:.2e}", paths


def criterion_04(ctx: VerifyContext):
    """Boundary flux moment stays nonnegative where r*theta(r) <= dist."""
    rng = ctx.rng(4)
    worst = math.inf
    n_done = 0

    def r_boundary(fld, domain, p, r):
        u0 = fld.value(p)
        centered = lambda P: (fld._value(P) - u0) ** 2
        H = sphere_cap_integral(domain, p, r, centered, ctx.spec).value

        def flux_moment(P):
            g = fld._gradient(P)
            n_out = -domain.inward_normal(P[:, :-1])
            dn = np.sum(g * n_out, axis=1)
            lever = np.sum((P - p[None, :]) * n_out, axis=1)
            return dn * dn * lever

        return boundary_patch_integral(domain, p, r, flux_moment,
                                       ctx.spec).value / H

    flat = _flat2()
    for i in range(150):
        fld = plane_harmonic(2 + i % 2)
        p = np.array([rng.uniform(-0.3, 0.3), rng.uniform(0.0, 0.2)])
        r = rng.uniform(max(1.1 * p[1], 0.05), 0.5)
        worst = min(worst, r_boundary(fld, flat, p, r))
        n_done += 1

    dom = _qbump()
    fld = _mfs_on(dom, degree=3, boundary_tol=1e-5)
    for _ in range(50):
        x = rng.uniform(-0.2, 0.2)
        p = np.array([x, float(dom.phi(np.array([[x]]))[0])
                      + rng.uniform(0.0, 0.1)])
        _, dist = nearest_boundary(dom, p)
        r = rng.uniform(max(1.2 * dist, 0.05), 0.4)
        if r * float(dom.dini(r)) > dist and dist > 0.0:
            r = max(1.05 * dist, 0.05)    # keep the lever-sign precondition
        worst = min(worst, r_boundary(fld, dom, p, r))
        n_done += 1
    ok = worst >= -1e-8
    return ok, f"{n_done} samples, min R_b = {worst:.2e}", []


def criterion_05(ctx: VerifyContext):
    """Sphere-mass ratio defect decays like a 3/4 power of dist/r."""
    flat = _flat2()
    r = 0.4
    fracs = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    min_slope = math.inf
    max_k = 0.0
    for fld in (plane_harmonic(1), plane_harmonic(2)):
        devs = []
        for frac in fracs:
            p = np.array([0.1, frac * r])
            comp = sphere_comparison(fld, flat, p, r, ctx.spec)
            devs.append(comp.deviation)
            max_k = max(max_k, comp.deviation / comp.predictor)
        slope = np.polyfit(np.log(fracs), np.log(devs), 1)[0]
        min_slope = min(min_slope, float(slope))
    ok = min_slope >= 0.70
    return ok, (f"fitted exponent {min_slope:.3f} (need >= 0.70), "
                f"constant K = {max_k:.3f}"), []


def criterion_06(ctx: VerifyContext):
    """Doubling exponents: exact for homogeneous, quad-stable for MFS."""
    worst_exact = 0.0
    for d, k in ((2, 1), (2, 2), (2, 3), (3, 2)):
        fld = exact_polynomial(d, k)
        rep = doubling_ratios(fld, None, np.zeros(d), 0.05, 2.0, ctx.spec)
        worst_exact = max(worst_exact, abs(rep.exponent - (d + 2 * k)))

    fine = QuadratureSpec(radial=2 * ctx.spec.radial, angular=ctx.spec.angular,
                          tol=ctx.spec.tol / 10.0)
    worst_drift = 0.0
    for dom, tol in ((_qbump(), 1e-5), (_coswin(), 1e-4)):
        fld = _mfs_on(dom, degree=3, boundary_tol=tol)
        e1 = doubling_ratios(fld, dom, np.zeros(2), dom.R / 16.0, 2.0,
                             ctx.spec).exponent
        e2 = doubling_ratios(fld, dom, np.zeros(2), dom.R / 16.0, 2.0,
                             fine).exponent
        if not (np.isfinite(e1) and np.isfinite(e2)):
            return False, "curved exponent not finite", []
        worst_drift = max(worst_drift, abs(e1 - e2) / abs(e1))
    ok = worst_exact <= 1e-3 and worst_drift <= 0.05
    return ok, (f"homogeneous |exp - (d+2k)| <= {worst_exact:.2e}, "
                f"curved refinement drift {worst_drift:.2%}"), []


def criterion_07(ctx: VerifyContext):
    """Straightening: flat exactness, weak residuals, conormal limit."""
    flat_sm = StraighteningMap(_flat2())
    xs = np.linspace(-0.5, 0.5, 7)[:, None]
    ss = np.linspace(0.05, 0.6, 7)
    ident_gap = 0.0
    coef_flat = CoefficientField(flat_sm)
    for s in ss:
        G = flat_sm.map_G(xs, np.full(7, s))
        target = np.concatenate([xs, np.full((7, 1), s)], axis=1)
        ident_gap = max(ident_gap, float(np.max(np.abs(G - target))))
        A = coef_flat.matrix(xs, np.full(7, s))
        ident_gap = max(ident_gap,
                        float(np.max(np.abs(A - np.eye(2)[None]))))

    dom = _qbump()
    fld = _mfs_on(dom, degree=3, boundary_tol=1e-5)
    sm = StraighteningMap(dom)
    w = sm.find_working_radius()
    coef = CoefficientField(sm)
    ext = extend_field(fld, sm)
    box = min(w / 2.0, 0.3)
    bump_r = 0.15 * box
    worst_resid = 0.0
    centers = []
    for i in range(15):      # interior bumps, clear of the interface
        ang = 2.0 * math.pi * i / 15.0
        centers.append(np.array([0.5 * box * math.cos(ang),
                                 bump_r + (0.25 + 0.5 * (i % 3) / 2.0)
                                 * box * abs(math.sin(ang)) + 0.1 * box]))
    for i in range(5):       # straddling, off-center so parity cannot cancel
        centers.append(np.array([(-0.4 + 0.2 * i) * box, 0.3 * bump_r]))
    for c in centers:
        worst_resid = max(worst_resid,
                          abs(weak_residual(coef, ext, c, bump_r, ctx.spec)))

    xs_line = np.linspace(-0.4 * box, 0.4 * box, 5)[:, None]
    hs = [bump_r * 0.5 ** k for k in range(6)]
    jumps = [conormal_jump(coef, ext, xs_line, h) for h in hs]
    extrap = abs(2.0 * jumps[-1] - jumps[-2])
    flux_scale = float(np.max(np.linalg.norm(ext.gradient(
        np.concatenate([xs_line, np.full((5, 1), bump_r)], axis=1)), axis=1)))
    paths = ctx.csv("verify_conormal.csv", ["h", "conormal_jump"],
                    list(zip(hs, jumps)))
    ok = (ident_gap <= 1e-14 and worst_resid <= 1e-5
          and extrap <= 1e-6 * flux_scale)
    return ok, (f"flat gap {ident_gap:.1e}, worst weak residual "
                f"{worst_resid:.2e} over {len(centers)} bumps, conormal "
                f"extrapolation {extrap:.1e}"), paths


def criterion_08(ctx: VerifyContext):
    """Hölder certificate is refinement-stable at 0.5, divergent at 0.75."""
    dom = GraphDomain.power_alpha(0.1, 0.5, R=1.0, dimension=2)
    sm = StraighteningMap(dom)
    coef = CoefficientField(sm)
    coarse = separation_pairs(box=0.5, levels=4, per_level=6, base_sep=0.25)
    fine = separation_pairs(box=0.5, levels=16, per_level=6, base_sep=0.25)
    c_coarse = modulus_certificate(coef, 0.5, coarse)
    c_fine = modulus_certificate(coef, 0.5, fine)
    d_coarse = modulus_certificate(coef, 0.75, coarse)
    d_fine = modulus_certificate(coef, 0.75, fine)
    drift = abs(c_fine - c_coarse) / c_coarse
    growth = d_fine / d_coarse
    rows = [[float(np.linalg.norm(z1 - z2)),
             float(np.linalg.norm(
                 coef.matrix(z1[None, :-1], z1[-1:])[0]
                 - coef.matrix(z2[None, :-1], z2[-1:])[0]))
             / float(np.linalg.norm(z1 - z2)) ** 0.5]
            for z1, z2 in coarse]
    paths = ctx.csv("verify_holder.csv", ["pair_dist", "holder_ratio"], rows)
    ok = drift <= 0.10 and growth > 10.0
    return ok, (f"alpha 0.5 drift {drift:.2%} (C = {c_fine:.4f}), "
                f"alpha 0.75 growth {growth:.1f}x"), paths


def criterion_09(ctx: VerifyContext):
    """Normalized doubling certificate for the odd extension, per fixture."""
    spec = QuadratureSpec(radial=12, angular=12, tol=1e-4)
    details = []
    ok = True
    for dom, tol in ((_qbump(), 1e-5), (_coswin(), 1e-4)):
        fld = _mfs_on(dom, degree=3, boundary_tol=tol)
        sm = StraighteningMap(dom)
        w = sm.find_working_radius()
        ext = extend_field(fld, sm)
        slab = min(w / 2.0, dom.R / 4.0)
        # odd grid: the rough point (where the ratio peaks smoothly) is a
        # sample, so seeded jitter below the peak's curvature scale moves
        # the certificate by far less than its three leading figures
        base = certificate_grid(np.zeros(2), slab / 2.0, 17, [])
        radii = [slab / 8.0, slab / 4.0]
        sups = []
        for seed in (ctx.seed, ctx.seed + 1):
            rng = np.random.default_rng(1000 * seed + 9)
            jitter = rng.uniform(-0.005, 0.005, size=base.shape) * slab
            cert = doubling_certificate(ext, base + jitter, radii,
                                        domain=None, spec=spec)
            sups.append(cert.sup_ratio)
        rel = abs(sups[0] - sups[1]) / sups[0]
        finite = all(np.isfinite(s) for s in sups)
        ok = ok and finite and rel <= 5e-3
        details.append(f"sup {sups[0]:.4g} (seed drift {rel:.1e}, "
                       f"{2 * len(base)} samples)")
    return ok, "; ".join(details), []


def criterion_10(ctx: VerifyContext):
    """Critical detection: point fixture, line fixture, shear fixture."""
    est = find_critical_points(plane_harmonic(3), Region(np.zeros(2), 0.5),
                               spacing=0.1)
    pt_ok = (len(est.points) == 1
             and float(np.linalg.norm(est.points[0].location)) <= 1e-8
             and est.points[0].kind == "singular")

    line = exact_polynomial(3, 2)
    region3 = Region(np.zeros(3), 0.5)
    rows = minkowski_content(line, region3, [0.1, 0.05, 0.025])
    target = 2.0 * 2.0 * region3.halfwidth       # twice the segment length
    line_ok = all(abs(row.content - target) <= 0.15 * target for row in rows)

    fixture = simon_fixture(0.3)
    reg = Region(np.zeros(3), 12.0)
    sest = find_critical_points(fixture.field, reg, spacing=1.5)
    pred = fixture.critical_z(12.0)
    found = np.sort([p.location[2] for p in sest.points])
    sing = set(np.round(fixture.singular_z(12.0), 8))
    simon_ok = (len(found) == len(pred)
                and float(np.max(np.abs(found - pred))) <= 1e-8
                and all((round(p.location[2], 8) in sing)
                        == (p.kind == "singular") for p in sest.points))

    paths = ctx.csv("verify_critical_points.csv",
                    ["x1", "x2", "x3", "grad_norm", "u_value", "class"],
                    [list(p.location) + [p.grad_norm, p.value, p.kind]
                     for p in sest.points])
    paths += ctx.csv("verify_content.csv", ["r", "count", "count_r_pow"],
                     [[row.r, row.count, row.content] for row in rows])
    ok = pt_ok and line_ok and simon_ok
    contents = "/".join(f"{row.content:.2f}" for row in rows)
    return ok, (f"point {'ok' if pt_ok else 'BAD'}, line content {contents} "
                f"vs {target:.1f}, shear {'ok' if simon_ok else 'BAD'}"), paths


def criterion_11(ctx: VerifyContext):
    """Conformal transfer: counts agree, CR and determinant certificates."""
    flat = _flat2()
    qb = _qbump()
    fixtures = [
        (flat, plane_harmonic(2)),
        (flat, plane_harmonic(3)),
        (flat, plane_harmonic(4)),
        (flat, _perturbed((3, 1.0), (5, 0.1))),
        (qb, _mfs_on(qb, degree=3, boundary_tol=1e-5)),
    ]
    rows = []
    worst_cr = 0.0
    worst_det = 0.0
    agree = True
    for dom, fld in fixtures:
        cmap = build_map(dom, dom.R, spec=ctx.spec)
        region = Region(np.array([0.0, 0.3 * dom.R]), 0.35 * dom.R,
                        domain=dom)
        tr = transfer_count(cmap, fld, region, spec=ctx.spec)
        checks = map_checks(cmap, n=100)
        agree = agree and tr.counts_agree
        worst_cr = max(worst_cr, checks.cr_residual)
        worst_det = max(worst_det, checks.det_gap)
        rows.append([tr.n_freq, tr.count_after, tr.hopf_c])
    paths = ctx.csv("verify_conformal.csv", ["N_freq", "count", "hopf_c"],
                    rows)
    ok = agree and worst_cr <= 1e-8 and worst_det <= 1e-10
    return ok, (f"5 fixtures, counts {'agree' if agree else 'MISMATCH'}, "
                f"CR {worst_cr:.1e}, det gap {worst_det:.1e}"), paths


def criterion_12(ctx: VerifyContext):
    """Two-point frequency variation bounded by pinch half-powers."""
    rng = ctx.rng(12)
    fixtures = [_perturbed((2, 1.0), (3, 0.3)),
                _perturbed((3, 1.0), (4, 0.2)),
                _perturbed((1, 0.2), (2, 1.0), (4, 0.1))]
    ratios = []
    pairs = 0
    for fld in fixtures:
        for _ in range(100):
            r = rng.uniform(0.08, 0.12)
            x1 = np.array([rng.uniform(-0.3, 0.3), rng.uniform(0.35, 0.6)])
            direction = rng.normal(size=2)
            x2 = x1 + 0.4 * r * direction / np.linalg.norm(direction)
            var = spatial_variation_check(fld, x1, x2, r, ctx.spec)
            pairs += 1
            if var.pinch_sum > 1e-6:
                ratios.append(var.freq_gap / var.pinch_sum)
    c_fit = max(ratios) if ratios else 0.0

    # zero-pinch cases: affine field anywhere, homogeneous at its center;
    # the 1e-8 assertion needs quadrature well below that scale
    tight = QuadratureSpec(radial=32, angular=24, tol=1e-11)
    affine = _perturbed((1, 1.0))
    zero_worst = 0.0
    for r in (0.08, 0.12):
        x1 = np.array([0.1, 0.4])
        var = spatial_variation_check(affine, x1, x1 + np.array([0.3 * r, 0]),
                                      r, tight)
        zero_worst = max(zero_worst, var.freq_gap, var.pinch_sum)
        hom = spatial_variation_check(plane_harmonic(3), np.zeros(2),
                                      np.zeros(2), r, tight)
        zero_worst = max(zero_worst, hom.freq_gap, hom.pinch_sum)
    ok = bool(np.isfinite(c_fit)) and zero_worst <= 1e-8 and pairs >= 300
    return ok, (f"{pairs} pairs, fitted C = {c_fit:.3f}, "
                f"zero-pinch worst {zero_worst:.1e}"), []


def criterion_13(ctx: VerifyContext):
    """Every artifact writer is byte-deterministic at fixed seed."""
    import tempfile
    n_files = 0
    for name, text in DEMO_CONFIGS.items():
        outs = []
        for tag in ("a", "b"):
            cfg = Config.from_text(text)
            cfg.override("seed", str(ctx.seed))
            with tempfile.TemporaryDirectory() as tmp:
                res = run_experiment(cfg, tmp, plot=False)
                outs.append({os.path.basename(p): open(p, "rb").read()
                             for p in res.csv_files})
        if set(outs[0]) != set(outs[1]):
            return False, f"{name}: artifact sets differ", []
        for fname in outs[0]:
            n_files += 1
            if outs[0][fname] != outs[1][fname]:
                return False, f"{name}/{fname}: bytes differ", []
    return True, f"{n_files} artifacts byte-identical across reruns", []


# (number, name, function, runtime limit seconds, monotonicity-flagged)
CRITERIA: List[Tuple[int, str, Callable, float, bool]] = [
    (1, "homogeneous-frequency", criterion_01, 5.0, False),
    (2, "interior-monotonicity", criterion_02, 60.0, True),
    (3, "derivative-identity", criterion_03, 60.0, False),
    (4, "boundary-term-sign", criterion_04, 30.0, True),
    (5, "sphere-mass-ratio", criterion_05, 30.0, False),
    (6, "doubling-exponents", criterion_06, 120.0, False),
    (7, "straightening-exactness", criterion_07, 120.0, False),
    (8, "holder-certificate", criterion_08, 60.0, False),
    (9, "extension-doubling", criterion_09, 120.0, False),
    (10, "critical-detection", criterion_10, 60.0, False),
    (11, "conformal-transfer", criterion_11, 120.0, False),
    (12, "spatial-variation", criterion_12, 120.0, False),
    (13, "artifact-determinism", criterion_13, 120.0, False),
]


def run_criterion(number: int, ctx: VerifyContext) -> CriterionResult:
    entry = next(c for c in CRITERIA if c[0] == number)
    _, name, fn, limit, monotone = entry
    start = time.perf_counter()
    try:
        ok, detail, csvs = fn(ctx)
    except FreqlabError as exc:
        elapsed = time.perf_counter() - start
        return CriterionResult(number, name, "FAIL",
                               f"{type(exc).__name__}: {exc}", elapsed, limit)
    except Exception as exc:  # report, never throw
        elapsed = time.perf_counter() - start
        return CriterionResult(number, name, "FAIL",
                               f"unexpected {type(exc).__name__}: {exc}",
                               elapsed, limit)
    elapsed = time.perf_counter() - start
    status = "PASS" if ok else "FAIL"
    if ok and elapsed > limit:
        status = "FAIL"
        detail += f" (over {limit:.0f}s budget)"
    if monotone and ctx.loosened:
        status = "WARN"
        detail += " [quad tolerance loosened >= 100x: result indicative only]"
    return CriterionResult(number, name, status, detail, elapsed, limit, csvs)


def verify_all(outdir: Optional[str] = None, seed: int = 0,
               quad_tol: Optional[float] = None,
               only: Optional[Sequence[int]] = None) -> SuiteReport:
    """Run the acceptance suite (or a subset) and collect results.

    ``only=[]`` is an explicit no-op request and yields a NOOP report.
    Loosening the quadrature tolerance a hundredfold or more past the
    default flags the monotonicity criteria WARN.
    """
    if only is not None and len(only) == 0:
        return SuiteReport([], noop=True)
    tol = DEFAULT_QUAD_TOL if quad_tol is None else quad_tol
    loosened = tol >= 100.0 * DEFAULT_QUAD_TOL
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
    ctx = VerifyContext(outdir=outdir, seed=seed,
                        spec=QuadratureSpec(tol=tol), loosened=loosened)
    numbers = [c[0] for c in CRITERIA] if only is None else list(only)
    results = [run_criterion(n, ctx) for n in numbers]
    return SuiteReport(results)
