"""Flat key-value experiment configuration.

The format is dotted keys, one `key = value` per line, `#` comments.  The
schema is strict: unknown keys are rejected so a typo cannot silently fall
back to a default.  Values stay strings until the typed accessors below
cast them.
"""

from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .geometry import GraphDomain
from .harmonic import (ScalarField, exact_polynomial, graph_adapted_data,
                       plane_harmonic, simon_fixture, solve_mfs)
from .quadrature import QuadratureSpec

EXPERIMENTS = ("freq-sweep", "doubling", "derivative-check",
               "straighten-verify", "critical-pipeline", "conformal-count",
               "spvar-fit", "simon")

DOMAIN_KINDS = ("flat", "quadratic-bump", "power-alpha", "cosine-window")
FIELD_KINDS = ("poly", "mfs", "simon")


def _choice(options: Tuple[str, ...]) -> Callable[[str], str]:
    def cast(raw: str) -> str:
        if raw not in options:
            raise ConfigError(f"expected one of {options}, got {raw!r}")
        return raw
    return cast


def _grid_pair(raw: str) -> Tuple[int, int]:
    try:
        a, b = raw.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ConfigError(f"grid must look like 7x24, got {raw!r}")


def _float_list(raw: str) -> List[float]:
    return [float(tok) for tok in raw.split(",") if tok.strip()]


def _point_list(raw: str) -> List[np.ndarray]:
    pts = []
    for chunk in raw.split(";"):
        if chunk.strip():
            pts.append(np.array([float(t) for t in chunk.split(",")]))
    return pts


# key -> (caster, default as string or None for required-when-used)
SCHEMA: Dict[str, Tuple[Callable, Optional[str]]] = {
    "experiment": (_choice(EXPERIMENTS), None),
    "seed": (int, "0"),
    "out.dir": (str, "out"),
    "domain.kind": (_choice(DOMAIN_KINDS), "flat"),
    "domain.dimension": (int, "2"),
    "domain.R": (float, "1.0"),
    "domain.a": (float, "5e-4"),
    "domain.alpha": (float, "0.5"),
    "domain.window": (float, "0.7"),
    "field.kind": (_choice(FIELD_KINDS), "poly"),
    "field.degree": (int, "2"),
    "field.epsilon": (float, "0.3"),
    "mfs.charges": (int, "96"),
    "mfs.offset": (float, "0.5"),
    "mfs.boundary_tol": (float, "1e-6"),
    "mfs.radius": (float, "0.8"),
    "freq.C_mod": (float, "1.0"),
    "freq.fd_step_rel": (float, "1e-3"),
    "quad.radial": (int, "24"),
    "quad.angular": (int, "16"),
    "quad.tol": (float, "1e-8"),
    "straighten.moll_pts": (int, "48"),
    "straighten.ball_search_grid": (_grid_pair, "7x24"),
    "straighten.bump_radius": (float, "0.15"),
    "sweep.centers": (_point_list, "0.0,0.5"),
    "sweep.radii": (_float_list, "0.1,0.2,0.4"),
    "sweep.factors": (_float_list, "2.0"),
}


def parse_config(text: str) -> Dict[str, str]:
    """Parse config text into a raw key-string map, strictly."""
    raw: Dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {ln}: expected key = value, got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        raw[key] = value
    return raw


class Config:
    """Typed view over a parsed config with schema defaults."""

    def __init__(self, raw: Dict[str, str]):
        for key in raw:
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
        self.raw = raw

    @classmethod
    def from_text(cls, text: str) -> "Config":
        return cls(parse_config(text))

    def get(self, key: str):
        caster, default = SCHEMA[key]
        if key in self.raw:
            value = self.raw[key]
        elif default is not None:
            value = default
        else:
            raise ConfigError(f"missing required key {key!r}")
        try:
            return caster(value)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r} ({exc})")

    def override(self, key: str, value: str) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        self.raw[key] = value


def quad_spec(cfg: Config) -> QuadratureSpec:
    return QuadratureSpec(radial=cfg.get("quad.radial"),
                          angular=cfg.get("quad.angular"),
                          tol=cfg.get("quad.tol"))


def make_domain(cfg: Config) -> GraphDomain:
    kind = cfg.get("domain.kind")
    R = cfg.get("domain.R")
    dim = cfg.get("domain.dimension")
    if kind == "flat":
        return GraphDomain.flat(R=R, dimension=dim)
    if kind == "quadratic-bump":
        return GraphDomain.quadratic_bump(cfg.get("domain.a"), R=R,
                                          dimension=dim)
    if kind == "power-alpha":
        return GraphDomain.power_alpha(cfg.get("domain.a"),
                                       cfg.get("domain.alpha"), R=R,
                                       dimension=dim)
    return GraphDomain.cosine_window(cfg.get("domain.a"),
                                     cfg.get("domain.window"), R=R,
                                     dimension=dim)


def make_field(cfg: Config, domain: GraphDomain) -> ScalarField:
    kind = cfg.get("field.kind")
    if kind == "simon":
        return simon_fixture(cfg.get("field.epsilon")).field
    degree = cfg.get("field.degree")
    if domain.dimension == 2:
        base = plane_harmonic(degree)
    else:
        base = exact_polynomial(domain.dimension, degree)
    if kind == "poly":
        return base
    return solve_mfs(domain, np.zeros(domain.dimension),
                     cfg.get("mfs.radius"), graph_adapted_data(domain, base),
                     charge_count=cfg.get("mfs.charges"),
                     offset_frac=cfg.get("mfs.offset"),
                     boundary_tol=cfg.get("mfs.boundary_tol"))


def schema_text() -> str:
    """Human-readable schema dump for the `schema` subcommand."""
    lines = ["configuration keys (key = value per line, # comments):", ""]
    for key, (caster, default) in SCHEMA.items():
        req = "required" if default is None else f"default {default}"
        lines.append(f"  {key:32s} {req}")
    lines += ["",
              "experiments: " + " | ".join(EXPERIMENTS),
              "domains:     " + " | ".join(DOMAIN_KINDS),
              "fields:      " + " | ".join(FIELD_KINDS),
              "",
              "CSV schemas:",
              "  frequency:   center_x.., r, D, H_S, H_C, N_S, N_C, R_h, R_b,"
              " Err_r, W, quad_err",
              "  holder:      pair_dist, holder_ratio",
              "  conormal:    h, conormal_jump",
              "  critical:    x.., grad_norm, u_value, class",
              "  content:     r, count, count_r_pow",
              "  conformal:   N_freq, count, hopf_c"]
    return "\n".join(lines)
