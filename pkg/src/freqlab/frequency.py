"""Frequency functions for harmonic fields on graph domains.

Provides the standard and centered frequencies, the exact decomposition of
the radial derivative of the centered frequency (height term, boundary term,
center-value error term, and the cap-edge correction), boundary-centered
modified frequencies, pinch quantities, doubling ratios, and the critical-set
error functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import DegenerateNormalizationError, FrequencyError, GeometryError
from .geometry import GraphDomain, nearest_boundary
from .quadrature import (QuadratureSpec, ball_integral, boundary_patch_integral,
                         sphere_cap_integral)

__all__ = [
    "FrequencyReport",
    "DerivativeTerms",
    "BoundaryFrequency",
    "DoublingReport",
    "SphereComparison",
    "SpatialVariation",
    "frequency_report",
    "derivative_terms",
    "fd_frequency_derivative",
    "boundary_frequency",
    "pinch",
    "doubling_ratios",
    "sphere_comparison",
    "err_beta",
    "spatial_variation_check",
]

# Lemma-scale preconditions for the modified boundary frequency
THETA_BOUND_4R = 1.0 / 26.0


@dataclass
class FrequencyReport:
    """Energy, sphere masses, and the two frequency quotients at one window.

    ``n_sphere`` divides by the mass of u itself, ``n_centered`` by the mass
    of u minus its center value; the two agree when u vanishes at the center.
    """

    center: np.ndarray
    radius: float
    energy: float
    height_sphere: float
    height_centered: float
    center_value: float
    quad_error: float

    @property
    def n_sphere(self) -> float:
        if self.height_sphere <= 0.0:
            return math.inf
        return self.radius * self.energy / self.height_sphere

    @property
    def n_centered(self) -> float:
        if self.height_centered <= 0.0:
            return math.inf
        return self.radius * self.energy / self.height_centered


def frequency_report(field, domain: Optional[GraphDomain], p, r: float,
                     spec: Optional[QuadratureSpec] = None) -> FrequencyReport:
    """Dirichlet energy and sphere masses of ``field`` on the window (p, r).

    ``domain=None`` integrates over full balls and spheres (interior use).
    Raises DegenerateNormalizationError when the centered sphere mass
    vanishes, which happens exactly for locally constant fields.
    """
    p = np.asarray(p, dtype=float)
    u0 = field.value(p)

    def grad_sq(P):
        g = field._gradient(P)
        return np.sum(g * g, axis=1)

    def u_sq(P):
        v = field._value(P)
        return v * v

    def centered_sq(P):
        v = field._value(P) - u0
        return v * v

    energy = ball_integral(domain, p, r, grad_sq, spec)
    h_s = sphere_cap_integral(domain, p, r, u_sq, spec)
    h_c = sphere_cap_integral(domain, p, r, centered_sq, spec)
    quad_err = max(energy.error, h_s.error, h_c.error)

    d = p.shape[0]
    scale = h_s.value + r ** (d - 1) * u0 * u0
    if h_c.value <= 1e-24 * scale:
        raise DegenerateNormalizationError(
            "centered sphere mass vanishes; field is locally constant")
    return FrequencyReport(center=p, radius=float(r), energy=energy.value,
                           height_sphere=h_s.value, height_centered=h_c.value,
                           center_value=u0, quad_error=quad_err)


# =====================================================================
# derivative decomposition
# =====================================================================

@dataclass
class DerivativeTerms:
    """Exact decomposition of dN/dr for the centered frequency.

    n_prime_model = r_height + r_boundary + N*err_r + cap_edge, where
    r_height is the nonnegative Cauchy-Schwarz defect on the sphere,
    r_boundary the boundary flux moment, err_r the center-value flux term,
    and cap_edge the correction from the moving edge of the spherical cap
    (zero when the center value vanishes or the ball is interior).
    """

    report: FrequencyReport
    r_height: float
    r_boundary: float
    err_r: float
    cap_edge: float
    interior: bool
    radial_derivative: Callable
    normal_derivative: Callable

    @property
    def n_prime_model(self) -> float:
        n = self.report.n_centered
        return self.r_height + self.r_boundary + n * self.err_r + self.cap_edge


def _cap_edge_rate(domain: Optional[GraphDomain], p: np.ndarray, r: float,
                   spec: Optional[QuadratureSpec]) -> float:
    """d/dr of the cap measure minus its pure scaling part.

    Central difference of the sphere-cap measure; the residual after removing
    (d-1)/r times the measure is the angular edge-motion rate that multiplies
    the squared center value in the exact derivative of the centered mass.
    """
    one = lambda P: np.ones(P.shape[0])
    d = p.shape[0]
    delta = 1e-3 * r
    p_plus = sphere_cap_integral(domain, p, r + delta, one, spec).value
    p_minus = sphere_cap_integral(domain, p, r - delta, one, spec).value
    p_mid = sphere_cap_integral(domain, p, r, one, spec).value
    return (p_plus - p_minus) / (2.0 * delta) - (d - 1) / r * p_mid


def derivative_terms(field, domain: Optional[GraphDomain], p, r: float,
                     spec: Optional[QuadratureSpec] = None) -> DerivativeTerms:
    """Terms of the exact radial derivative of the centered frequency.

    For interior balls only the height term survives.  When the ball crosses
    the boundary the flux moment, the center-value term, and the cap-edge
    correction enter; the boundary term is nonnegative whenever
    r*theta(r) <= dist(p, boundary).
    """
    p = np.asarray(p, dtype=float)
    rep = frequency_report(field, domain, p, r, spec)
    u0 = rep.center_value
    n_val = rep.n_centered
    H = rep.height_centered

    def radial(P):
        g = field._gradient(P)
        return np.sum(g * (P - p[None, :]), axis=1) / r

    def normal(P):
        # derivative in the direction pointing away from the domain
        g = field._gradient(P)
        n_out = -domain.inward_normal(P[:, :-1])
        return np.sum(g * n_out, axis=1)

    def height_defect(P):
        w = radial(P) - (n_val / r) * (field._value(P) - u0)
        return w * w

    r_height = (2.0 * r / H) * sphere_cap_integral(domain, p, r,
                                                   height_defect, spec).value

    if domain is None:
        interior = True
        dist = math.inf
    else:
        _, dist = nearest_boundary(domain, p)
        interior = r < dist

    if interior:
        r_boundary = 0.0
        err_r = 0.0
        cap_edge = 0.0
    else:
        def flux_moment(P):
            dn = normal(P)
            lever = np.sum((P - p[None, :]) * (-domain.inward_normal(P[:, :-1])),
                           axis=1)
            return dn * dn * lever

        r_boundary = boundary_patch_integral(domain, p, r, flux_moment,
                                             spec).value / H
        flux = boundary_patch_integral(domain, p, r,
                                       lambda P: normal(P), spec).value
        err_r = 2.0 * u0 * flux / H
        cap_edge = -n_val * u0 * u0 * _cap_edge_rate(domain, p, r, spec) / H

    return DerivativeTerms(report=rep, r_height=r_height, r_boundary=r_boundary,
                           err_r=err_r, cap_edge=cap_edge, interior=interior,
                           radial_derivative=radial, normal_derivative=normal)


def fd_frequency_derivative(field, domain: Optional[GraphDomain], p, r: float,
                            rel_step: float = 1e-3,
                            spec: Optional[QuadratureSpec] = None) -> float:
    """Central finite difference of the centered frequency in the radius."""
    delta = rel_step * r
    hi = frequency_report(field, domain, p, r + delta, spec).n_centered
    lo = frequency_report(field, domain, p, r - delta, spec).n_centered
    return (hi - lo) / (2.0 * delta)


# =====================================================================
# boundary-centered modified frequency
# =====================================================================

@dataclass
class BoundaryFrequency:
    point: np.ndarray
    radius: float
    offset_center: np.ndarray
    n_hat: float
    dini_factor: float
    c_mod: float

    @property
    def modified(self) -> float:
        return self.n_hat * self.dini_factor


def boundary_frequency(field, domain: GraphDomain, X, r: float,
                       c_mod: float = 1.0,
                       spec: Optional[QuadratureSpec] = None) -> BoundaryFrequency:
    """Modified frequency at a boundary point via the offset-center bridge.

    Moves the center up by three smoothed-modulus units, evaluates the
    standard frequency there, and multiplies by exp(c_mod * Dini integral).
    On a flat domain both corrections collapse and the result is the
    standard frequency at X itself.
    """
    X = np.asarray(X, dtype=float)
    theta4 = float(domain.dini(4.0 * r))
    if not theta4 < THETA_BOUND_4R:
        raise FrequencyError(
            f"modulus at 4r is {theta4:.4f}, needs < {THETA_BOUND_4R:.4f}")
    offset = X.copy()
    offset[-1] += 3.0 * r * domain.dini.smoothed(r)
    # closure membership: a flat domain leaves the center on the boundary
    if domain.height(offset) < -1e-12 * r:
        raise GeometryError("offset center escaped the domain")
    rep = frequency_report(field, domain, offset, r, spec)
    factor = math.exp(c_mod * domain.dini.integral(0.0, r))
    return BoundaryFrequency(point=X, radius=float(r), offset_center=offset,
                             n_hat=rep.n_sphere, dini_factor=factor,
                             c_mod=c_mod)


# =====================================================================
# pinch and doubling
# =====================================================================

def pinch(field, domain: Optional[GraphDomain], X, r: float,
          spec: Optional[QuadratureSpec] = None) -> float:
    """Frequency pinch W = N(X, 3r/2) - N(X, r/2), centered variant."""
    hi = frequency_report(field, domain, X, 1.5 * r, spec).n_centered
    lo = frequency_report(field, domain, X, 0.5 * r, spec).n_centered
    return hi - lo


@dataclass
class SphereComparison:
    height_sphere: float
    height_centered: float
    deviation: float
    predictor: float


def sphere_comparison(field, domain: GraphDomain, X, r: float,
                      spec: Optional[QuadratureSpec] = None) -> SphereComparison:
    """|H_C/H_S - 1| on the sphere at radius r against (dist/r)^{3/4}."""
    X = np.asarray(X, dtype=float)
    rep = frequency_report(field, domain, X, r, spec)
    dev = abs(rep.height_centered / rep.height_sphere - 1.0)
    _, dist = nearest_boundary(domain, X)
    return SphereComparison(height_sphere=rep.height_sphere,
                            height_centered=rep.height_centered,
                            deviation=dev,
                            predictor=(dist / r) ** 0.75)


@dataclass
class DoublingReport:
    inner_mass: float
    outer_mass: float
    factor: float

    @property
    def ratio(self) -> float:
        return self.outer_mass / self.inner_mass

    @property
    def exponent(self) -> float:
        return math.log(self.ratio) / math.log(self.factor)


def doubling_ratios(field, domain: Optional[GraphDomain], X, rho: float,
                    a: float = 2.0,
                    spec: Optional[QuadratureSpec] = None) -> DoublingReport:
    """Centered volume-mass doubling between radii rho and a*rho."""
    if not 1.0 < a < 72.0:
        raise FrequencyError("doubling factor must lie in (1, 72)")
    if domain is not None and a * rho > domain.R / 8.0 * (1.0 + 1e-12):
        raise FrequencyError("outer radius exceeds an eighth of the chart scale")
    X = np.asarray(X, dtype=float)
    u0 = field.value(X)

    def centered_sq(P):
        v = field._value(P) - u0
        return v * v

    inner = ball_integral(domain, X, rho, centered_sq, spec).value
    outer = ball_integral(domain, X, a * rho, centered_sq, spec).value
    if inner <= 0.0:
        raise DegenerateNormalizationError("inner mass vanishes")
    return DoublingReport(inner_mass=inner, outer_mass=outer, factor=float(a))


# =====================================================================
# critical-set error functional and spatial variation
# =====================================================================

def err_beta(field, domain: Optional[GraphDomain], p, r: float,
             points: Sequence[np.ndarray],
             spec: Optional[QuadratureSpec] = None) -> float:
    """Critical-set oscillation functional against the window mass.

    Counting measure on the supplied points inside the ball; normalized so
    both numerator and denominator are scale-invariant.
    """
    p = np.asarray(p, dtype=float)
    d = p.shape[0]
    u0 = field.value(p)

    def centered_sq(P):
        v = field._value(P) - u0
        return v * v

    denom = ball_integral(domain, p, r, centered_sq, spec).value / r ** d
    if denom <= 0.0:
        raise DegenerateNormalizationError("window mass vanishes")
    num = 0.0
    for X in points:
        X = np.asarray(X, dtype=float)
        if np.linalg.norm(X - p) <= r:
            num += (field.value(X) - u0) ** 2
    num /= r ** (d - 2)
    return num / denom


@dataclass
class SpatialVariation:
    freq_gap: float
    pinch_sum: float
    value_gap: float
    value_bound_core: float


def spatial_variation_check(field, X1, X2, r: float,
                            spec: Optional[QuadratureSpec] = None) -> SpatialVariation:
    """Interior two-point frequency variation against pinch half-powers.

    Integrals run over full balls (no domain clipping); callers must supply
    interior points with a margin of 3r/2.  Requires |X1 - X2| <= r/2.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    if np.linalg.norm(X1 - X2) > 0.5 * r * (1.0 + 1e-12):
        raise FrequencyError("points further apart than half the radius")
    n1 = frequency_report(field, None, X1, r, spec).n_centered
    n2 = frequency_report(field, None, X2, r, spec).n_centered
    w1 = max(pinch(field, None, X1, r, spec), 0.0)
    w2 = max(pinch(field, None, X2, r, spec), 0.0)
    # the pinch is nonnegative in exact arithmetic; values at the rounding
    # floor would otherwise leak through the square root amplified
    floor = 1e-13 * (1.0 + abs(n1) + abs(n2))
    w1 = w1 if w1 > floor else 0.0
    w2 = w2 if w2 > floor else 0.0
    core = math.sqrt(w1) + math.sqrt(w2)

    d = X1.shape[0]
    u1 = field.value(X1)

    def centered_sq(P):
        v = field._value(P) - u1
        return v * v

    vol = math.pi * r ** 2 if d == 2 else 4.0 * math.pi * r ** 3 / 3.0
    mean_sq = ball_integral(None, X1, r, centered_sq, spec).value / vol
    return SpatialVariation(freq_gap=abs(n1 - n2), pinch_sum=core,
                            value_gap=abs(field.value(X1) - field.value(X2)),
                            value_bound_core=core * math.sqrt(mean_sq))
