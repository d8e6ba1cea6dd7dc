"""Named experiment runners behind the command line interface.

Each runner takes a typed config, writes CSV artifacts with the documented
header rows, optionally renders an SVG, and returns a small result object
with one-screen summary lines and a verdict.  Runners are pure functions of
(config, seed): sweep points are independent and emitted in deterministic
order, so the same config and seed always produce byte-identical CSVs.
"""

import math
import os
from dataclasses import dataclass, field as dfield
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import Config, make_domain, make_field, quad_spec
from .critical import (Region, find_critical_points, minkowski_content,
                       theorem_pipeline)
from .conformal2d import build_map, map_checks, transfer_count
from .frequency import (boundary_frequency, derivative_terms, doubling_ratios,
                        fd_frequency_derivative, frequency_report, pinch)
from .harmonic import simon_fixture
from .straighten import (CoefficientField, Mollifier, StraighteningMap,
                         conormal_jump, extend_field, separation_pairs,
                         weak_residual)
from .svg import SvgCanvas, data_limits

__all__ = ["ExperimentResult", "RUNNERS", "run_experiment", "write_csv",
           "DEMO_CONFIGS"]


def _cell(v) -> str:
    """Full-precision, locale-free cell formatting."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header: Sequence[str],
              rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _freq_header(d: int) -> List[str]:
    coords = [f"center_x{i + 1}" for i in range(d)]
    return coords + ["r", "D", "H_S", "H_C", "N_S", "N_C", "R_h", "R_b",
                     "Err_r", "W", "quad_err"]


def _freq_row(fld, domain, center, r, spec) -> List[float]:
    terms = derivative_terms(fld, domain, center, r, spec)
    rep = terms.report
    w = pinch(fld, domain, center, r, spec)
    return (list(np.asarray(center, dtype=float))
            + [float(r), rep.energy, rep.height_sphere, rep.height_centered,
               rep.n_sphere, rep.n_centered, terms.r_height, terms.r_boundary,
               terms.err_r, w, rep.quad_error])


@dataclass
class ExperimentResult:
    name: str
    passed: bool
    summary: List[str] = dfield(default_factory=list)
    csv_files: List[str] = dfield(default_factory=list)
    svg_files: List[str] = dfield(default_factory=list)

    def report(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        lines = [f"[{self.name}] {verdict}"] + \
            [f"  {line}" for line in self.summary]
        for path in self.csv_files + self.svg_files:
            lines.append(f"  wrote {path}")
        return "\n".join(lines)


# =====================================================================
# runners
# =====================================================================

def run_freq_sweep(cfg: Config, outdir: str, plot: bool) -> ExperimentResult:
    """Frequency and derivative-term sweep over (center, radius) grids."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    centers = cfg.get("sweep.centers")
    radii = cfg.get("sweep.radii")

    rows = []
    for c in centers:
        if c.size != domain.dimension:
            raise ValueError("sweep center dimension mismatch")
        for r in radii:
            rows.append(_freq_row(fld, domain, c, r, spec))
    path = os.path.join(outdir, "freq_sweep_frequency.csv")
    write_csv(path, _freq_header(domain.dimension), rows)

    d = domain.dimension
    n_col = d + 5          # N_C column index
    ok = all(np.isfinite(row[n_col]) for row in rows)
    summary = []
    for ci, c in enumerate(centers):
        vals = [rows[ci * len(radii) + k][n_col] for k in range(len(radii))]
        mono = all(b >= a - 1e-5 for a, b in zip(vals, vals[1:]))
        summary.append("center {}: N_C {} ({})".format(
            np.round(c, 4).tolist(),
            "/".join(f"{v:.4f}" for v in vals),
            "monotone" if mono else "not monotone"))
    svg_files = []
    if plot:
        canvas = SvgCanvas(data_limits(radii), data_limits(
            [row[n_col] for row in rows]))
        canvas.axes("r", "N_C")
        for ci in range(len(centers)):
            ys = [rows[ci * len(radii) + k][n_col] for k in range(len(radii))]
            canvas.polyline(radii, ys, color="steelblue")
            for r, y in zip(radii, ys):
                canvas.circle(r, y, color="steelblue")
        spath = os.path.join(outdir, "freq_sweep.svg")
        canvas.save(spath)
        svg_files.append(spath)
    return ExperimentResult("freq-sweep", ok, summary, [path], svg_files)


def run_doubling(cfg: Config, outdir: str, plot: bool) -> ExperimentResult:
    """Centered two-ball doubling ratios over a (center, rho, factor) sweep."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    centers = cfg.get("sweep.centers")
    radii = cfg.get("sweep.radii")
    factors = cfg.get("sweep.factors")

    rows, summary, exps = [], [], []
    for c in centers:
        for rho in radii:
            for a in factors:
                rep = doubling_ratios(fld, domain, c, rho, a, spec)
                rows.append(_freq_row(fld, domain, c, rho, spec))
                rows.append(_freq_row(fld, domain, c, a * rho, spec))
                exps.append((rho, rep.exponent))
                summary.append(
                    "center {} rho {:g} a {:g}: ratio {:.6g} exponent {:.4f}"
                    .format(np.round(c, 4).tolist(), rho, a, rep.ratio,
                            rep.exponent))
    path = os.path.join(outdir, "doubling_frequency.csv")
    write_csv(path, _freq_header(domain.dimension), rows)
    ok = all(np.isfinite(e) for _, e in exps)

    svg_files = []
    if plot:
        xs = [r for r, _ in exps]
        ys = [e for _, e in exps]
        canvas = SvgCanvas(data_limits(xs), data_limits(ys))
        canvas.axes("rho", "doubling exponent")
        for x, y in zip(xs, ys):
            canvas.circle(x, y, color="firebrick", fill="firebrick")
        spath = os.path.join(outdir, "doubling.svg")
        canvas.save(spath)
        svg_files.append(spath)
    return ExperimentResult("doubling", ok, summary, [path], svg_files)


def run_derivative_check(cfg: Config, outdir: str,
                         plot: bool) -> ExperimentResult:
    """Exact derivative decomposition against finite differences in r."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    rel = cfg.get("freq.fd_step_rel")

    rows, summary = [], []
    worst = 0.0
    for c in cfg.get("sweep.centers"):
        for r in cfg.get("sweep.radii"):
            terms = derivative_terms(fld, domain, c, r, spec)
            fd = fd_frequency_derivative(fld, domain, c, r, rel, spec)
            gap = abs(terms.n_prime_model - fd) / max(1.0, abs(fd))
            worst = max(worst, gap)
            rows.append(_freq_row(fld, domain, c, r, spec))
            summary.append(
                "center {} r {:g}: model {:+.6e} fd {:+.6e} gap {:.2e}"
                .format(np.round(c, 4).tolist(), r, terms.n_prime_model, fd,
                        gap))
    path = os.path.join(outdir, "derivative_frequency.csv")
    write_csv(path, _freq_header(domain.dimension), rows)
    ok = worst <= 1e-4
    summary.append(f"worst relative gap {worst:.2e} (gate 1e-04)")
    return ExperimentResult("derivative-check", ok, summary, [path], [])


def run_straighten_verify(cfg: Config, outdir: str,
                          plot: bool) -> ExperimentResult:
    """Straightening-map certificates: Hölder pairs, weak form, conormal."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    alpha = cfg.get("domain.alpha")

    moll = Mollifier(domain.dimension, points=cfg.get("straighten.moll_pts"))
    sm = StraighteningMap(domain, mollifier=moll)
    w = sm.find_working_radius(grid=cfg.get("straighten.ball_search_grid"))
    coef = CoefficientField(sm)
    ext = extend_field(fld, sm)

    box = w / 2.0
    pairs = separation_pairs(box=box, levels=3, per_level=4, base_sep=box,
                             dimension=domain.dimension)
    holder_rows = []
    sup = 0.0
    for z1, z2 in pairs:
        sep = float(np.linalg.norm(z1 - z2))
        A1 = coef.matrix(z1[None, :-1], z1[-1:])[0]
        A2 = coef.matrix(z2[None, :-1], z2[-1:])[0]
        ratio = float(np.linalg.norm(A1 - A2)) / sep ** alpha
        sup = max(sup, ratio)
        holder_rows.append([sep, ratio])
    hpath = os.path.join(outdir, "straighten_holder.csv")
    write_csv(hpath, ["pair_dist", "holder_ratio"], holder_rows)

    bump_r = min(cfg.get("straighten.bump_radius"), 0.9 * w)
    # straddling but off-center in both chart and height: a mirror-symmetric
    # bump is cancelled exactly by the reflection parity and certifies nothing
    bump_center = np.zeros(domain.dimension)
    bump_center[0] = 0.3 * box
    bump_center[-1] = 0.3 * bump_r
    resid = weak_residual(coef, ext, bump_center, bump_r, spec)

    xs = np.linspace(-0.5 * box, 0.5 * box, 5)[:, None]
    if domain.dimension == 3:
        xs = np.concatenate([xs, np.zeros_like(xs)], axis=1)
    jump_rows = []
    for k in range(6):
        h = bump_r * 0.5 ** k
        jump_rows.append([h, conormal_jump(coef, ext, xs, h)])
    cpath = os.path.join(outdir, "straighten_conormal.csv")
    write_csv(cpath, ["h", "conormal_jump"], jump_rows)

    # Richardson: jumps j(h) with j(0) the certified limit
    j1, j2 = jump_rows[-2][1], jump_rows[-1][1]
    limit = abs(2.0 * j2 - j1)
    flux_scale = float(np.max(np.linalg.norm(ext.gradient(
        np.concatenate([xs, np.full((xs.shape[0], 1), bump_r / 4.0)],
                       axis=1)), axis=1)))
    ok = (np.isfinite(sup) and abs(resid) <= 1e-4
          and limit <= 1e-4 * max(flux_scale, 1e-12))
    summary = [
        f"working radius {w:.4f}",
        f"holder({alpha:g}) constant {sup:.6g} over {len(pairs)} pairs",
        f"weak residual {resid:.3e} (bump radius {bump_r:g})",
        f"conormal extrapolated jump {limit:.3e} (flux scale {flux_scale:.3g})",
    ]
    return ExperimentResult("straighten-verify", ok, summary, [hpath, cpath],
                            [])


def run_critical_pipeline(cfg: Config, outdir: str,
                          plot: bool) -> ExperimentResult:
    """Staged near-boundary critical-set estimate with artifact CSVs."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    report = theorem_pipeline(domain, fld, domain.R, spec)

    d = domain.dimension
    pts_rows = [list(p.location) + [p.grad_norm, p.value, p.kind]
                for p in report.estimate.points]
    ppath = os.path.join(outdir, "critical_points.csv")
    write_csv(ppath, [f"x{i + 1}" for i in range(d)]
              + ["grad_norm", "u_value", "class"], pts_rows)
    cpath = os.path.join(outdir, "critical_content.csv")
    write_csv(cpath, ["r", "count", "count_r_pow"],
              [[row.r, row.count, row.content] for row in report.content])

    summary = [
        "stages: " + " -> ".join(report.stages),
        f"doubling sup {report.lambda_u:.4f} (field), "
        f"{report.lambda_ext:.4f} (extension)",
        f"holder({report.holder_alpha:g}) constant "
        f"{report.holder_constant:.6g}",
        f"{len(report.estimate.points)} critical point(s), "
        f"{len(report.estimate.singular)} singular",
        f"pull-back gradient gap {report.pullback_gap:.3e}",
    ]
    svg_files = []
    if plot and d == 2:
        hw = report.estimate.region.halfwidth
        canvas = SvgCanvas((-hw, hw), (-hw, hw), width=480, height=480)
        gx = np.linspace(-hw, hw, 129)
        canvas.polyline(gx, np.zeros_like(gx), color="gray")
        for p in report.estimate.points:
            color = "firebrick" if p.kind == "singular" else "steelblue"
            canvas.circle(p.location[0], p.location[1], 4.0, color=color,
                          fill=color)
        spath = os.path.join(outdir, "critical_pipeline.svg")
        canvas.save(spath)
        svg_files.append(spath)
    return ExperimentResult("critical-pipeline", True, summary,
                            [ppath, cpath], svg_files)


def run_conformal_count(cfg: Config, outdir: str,
                        plot: bool) -> ExperimentResult:
    """Half-plane map, Hopf bound, and critical-count transfer."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    R = domain.R
    cmap = build_map(domain, R, charge_count=cfg.get("mfs.charges"),
                     boundary_tol=max(cfg.get("mfs.boundary_tol"), 1e-4),
                     spec=spec)
    region = Region(np.array([0.0, 0.3 * R]), 0.35 * R, domain=domain)
    transfer = transfer_count(cmap, fld, region, spec=spec)
    checks = map_checks(cmap, fld)

    path = os.path.join(outdir, "conformal_transfer.csv")
    write_csv(path, ["N_freq", "count", "hopf_c"],
              [[transfer.n_freq, transfer.count_after, transfer.hopf_c]])
    ok = transfer.counts_agree and checks.cr_residual <= 1e-8
    summary = [
        f"count {transfer.count_before} -> {transfer.count_after} "
        f"({'agree' if transfer.counts_agree else 'MISMATCH'})",
        f"N(0, 2R) = {transfer.n_freq:.4f}, hopf c = {transfer.hopf_c:.6g}",
        f"CR residual {checks.cr_residual:.2e}, "
        f"det gap {checks.det_gap:.2e}",
    ]
    svg_files = []
    if plot:
        xs = np.linspace(-1.2 * R, 1.2 * R, 129)
        ys = [float(domain.phi(np.array([[x]]))[0]) for x in xs]
        lows = min(min(ys), -0.1 * R)
        canvas = SvgCanvas((-1.2 * R, 1.2 * R), (lows, 1.2 * R))
        canvas.polyline(xs, ys, color="gray")
        for z, w_img in transfer.pairs:
            canvas.circle(z[0], z[1], 4.0, color="steelblue",
                          fill="steelblue")
            canvas.circle(w_img[0], w_img[1], 4.0, color="firebrick")
        canvas.text(-1.1 * R, 1.05 * R,
                    "critical points: source (filled) / image (open)")
        spath = os.path.join(outdir, "conformal_count.svg")
        canvas.save(spath)
        svg_files.append(spath)
    return ExperimentResult("conformal-count", ok, summary, [path], svg_files)


def run_spvar_fit(cfg: Config, outdir: str, plot: bool) -> ExperimentResult:
    """Interior spatial-variation constant fit from two-point samples."""
    domain = make_domain(cfg)
    fld = make_field(cfg, domain)
    spec = quad_spec(cfg)
    rng = np.random.default_rng(cfg.get("seed"))

    rows, summary, fits = [], [], []
    for c in cfg.get("sweep.centers"):
        for r in cfg.get("sweep.radii"):
            for _ in range(2):
                direction = rng.normal(size=domain.dimension)
                direction /= np.linalg.norm(direction)
                x2 = c + 0.4 * r * direction
                n1 = frequency_report(fld, None, c, r, spec).n_centered
                n2 = frequency_report(fld, None, x2, r, spec).n_centered
                w1 = max(pinch(fld, None, c, r, spec), 0.0)
                w2 = max(pinch(fld, None, x2, r, spec), 0.0)
                rows.append(_freq_row(fld, None, c, r, spec))
                rows.append(_freq_row(fld, None, x2, r, spec))
                core = math.sqrt(w1) + math.sqrt(w2)
                if core > 1e-9:
                    fits.append(abs(n1 - n2) / core)
    path = os.path.join(outdir, "spvar_frequency.csv")
    write_csv(path, _freq_header(domain.dimension), rows)
    c_fit = max(fits) if fits else 0.0
    summary.append(f"{len(rows) // 2} two-point samples, "
                   f"fitted constant {c_fit:.4f}")
    ok = all(np.isfinite(f) for f in fits)
    return ExperimentResult("spvar-fit", ok, summary, [path], [])


def run_simon(cfg: Config, outdir: str, plot: bool) -> ExperimentResult:
    """Detect the shear-fixture critical line and compare to the formula."""
    eps = cfg.get("field.epsilon")
    fixture = simon_fixture(eps)
    hw = cfg.get("domain.R")        # chart scale doubles as search half-width
    region = Region(np.zeros(3), hw)
    est = find_critical_points(fixture.field, region, spacing=hw / 8.0)

    rows = [list(p.location) + [p.grad_norm, p.value, p.kind]
            for p in est.points]
    path = os.path.join(outdir, "simon_points.csv")
    write_csv(path, ["x1", "x2", "x3", "grad_norm", "u_value", "class"], rows)

    predicted = fixture.critical_z(hw)
    found_z = np.sort([p.location[2] for p in est.points])
    match = (len(found_z) == len(predicted)
             and np.max(np.abs(found_z - predicted)) <= 1e-8 * max(hw, 1.0))
    off_axis = max((float(np.linalg.norm(p.location[:2]))
                    for p in est.points), default=0.0)
    sing_pred = set(np.round(fixture.singular_z(hw), 8))
    class_ok = all((round(p.location[2], 8) in sing_pred)
                   == (p.kind == "singular") for p in est.points)
    summary = [
        f"epsilon {eps:g}, |z| <= {hw:g}: {len(est.points)} point(s), "
        f"{len(predicted)} predicted",
        f"max |z - k pi / (2 eps)| = "
        f"{np.max(np.abs(found_z - predicted)) if match else math.inf:.2e}",
        f"max off-axis distance {off_axis:.2e}",
        f"singular/critical classes {'match' if class_ok else 'MISMATCH'}",
    ]
    return ExperimentResult("simon", bool(match and class_ok), summary,
                            [path], [])


RUNNERS: Dict[str, Callable[[Config, str, bool], ExperimentResult]] = {
    "freq-sweep": run_freq_sweep,
    "doubling": run_doubling,
    "derivative-check": run_derivative_check,
    "straighten-verify": run_straighten_verify,
    "critical-pipeline": run_critical_pipeline,
    "conformal-count": run_conformal_count,
    "spvar-fit": run_spvar_fit,
    "simon": run_simon,
}


# Built-in demo configs, one per experiment; `run <name>` falls back to
# these when the argument is not a file.
DEMO_CONFIGS: Dict[str, str] = {
    "freq-sweep": """
experiment = freq-sweep
domain.kind = flat
field.kind = poly
field.degree = 2
sweep.centers = 0.0,0.0
sweep.radii = 0.1,0.2,0.4
""",
    "doubling": """
experiment = doubling
domain.kind = flat
field.kind = poly
field.degree = 2
sweep.centers = 0.0,0.0
sweep.radii = 0.03,0.05
sweep.factors = 2.0
""",
    "derivative-check": """
experiment = derivative-check
domain.kind = flat
field.kind = poly
field.degree = 3
sweep.centers = 0.05,0.3
sweep.radii = 0.1,0.2
""",
    "straighten-verify": """
experiment = straighten-verify
domain.kind = quadratic-bump
domain.a = 0.05
domain.alpha = 0.5
field.kind = poly
field.degree = 2
straighten.bump_radius = 0.15
""",
    "critical-pipeline": """
experiment = critical-pipeline
domain.kind = flat
field.kind = poly
field.degree = 2
""",
    "conformal-count": """
experiment = conformal-count
domain.kind = flat
field.kind = poly
field.degree = 3
""",
    "spvar-fit": """
experiment = spvar-fit
domain.kind = flat
field.kind = poly
field.degree = 3
sweep.centers = 0.0,0.5
sweep.radii = 0.08,0.12
""",
    "simon": """
experiment = simon
field.kind = simon
field.epsilon = 0.3
domain.R = 12.0
""",
}


def run_experiment(cfg: Config, outdir: str,
                   plot: bool = False) -> ExperimentResult:
    """Dispatch to the configured runner, creating the output directory."""
    name = cfg.get("experiment")
    os.makedirs(outdir, exist_ok=True)
    probe = os.path.join(outdir, ".write_probe")
    try:
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        from .errors import ConfigError
        raise ConfigError(f"output directory not writable: {exc}")
    return RUNNERS[name](cfg, outdir, plot)
