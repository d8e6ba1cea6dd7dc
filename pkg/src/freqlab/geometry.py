"""Graph domains with Dini-continuous slope, and the scales attached to them.

A domain is the region above the graph of a function phi on R^(d-1), described
in a single chart around the origin with phi(0) = 0 and grad phi(0) = 0.  The
slope regularity is carried by an explicit nondecreasing modulus theta with
finite integral of theta(s)/s near zero; everything downstream (admissibility
checks, the critical scale, the modified boundary frequency) is phrased in
terms of theta and its smoothed companion.

Only dimensions 2 and 3 are supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import optimize

from .errors import GeometryError

__all__ = [
    "DiniParameter",
    "GraphDomain",
    "CriticalScale",
    "AdmissibilityReport",
    "dini_integral",
    "smooth_theta",
    "normal_vector",
    "nearest_boundary",
    "critical_scale",
    "admissibility",
]

_LOG2 = math.log(2.0)

# Admissibility gates for the working scale R: slope modulus at 8R and the
# accumulated modulus integral out to 16R.
THETA_BOUND_8R = 1.0 / 72.0
DINI_BOUND_16R = 1.0


# =====================================================================
# slope modulus
# =====================================================================

class DiniParameter:
    """Nondecreasing modulus of continuity theta for the graph slope.

    Two families are supported:

    * ``holder``: theta(r) = C * r**alpha with 0 < alpha <= 1, C >= 0.
    * ``tabulated``: piecewise-linear interpolation through monotone samples
      (r_0, v_0) = (0, 0), ..., (r_m, v_m), extended by the constant v_m to
      the right.

    Both give closed forms for ``integral`` (the integral of theta(s)/s), so
    no numerical quadrature is needed on the hot paths.
    """

    def __init__(self, family: str, coefficient: float = 0.0, exponent: float = 1.0,
                 radii: Optional[np.ndarray] = None, values: Optional[np.ndarray] = None):
        if family not in ("holder", "tabulated"):
            raise ValueError(f"unknown modulus family {family!r}")
        self.family = family
        if family == "holder":
            if not (0.0 < exponent <= 1.0):
                raise ValueError("holder exponent must lie in (0, 1]")
            if coefficient < 0.0:
                raise ValueError("holder coefficient must be nonnegative")
            self.coefficient = float(coefficient)
            self.exponent = float(exponent)
            self.radii = None
            self.values = None
        else:
            radii = np.asarray(radii, dtype=float)
            values = np.asarray(values, dtype=float)
            if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
                raise ValueError("tabulated modulus needs matching 1d sample arrays")
            if radii[0] != 0.0 or values[0] != 0.0:
                raise ValueError("tabulated modulus must start at (0, 0)")
            if np.any(np.diff(radii) <= 0.0):
                raise ValueError("tabulated radii must be strictly increasing")
            if np.any(np.diff(values) < 0.0):
                raise ValueError("tabulated modulus must be nondecreasing")
            self.coefficient = None
            self.exponent = None
            self.radii = radii
            self.values = values

    # -- constructors -------------------------------------------------

    @classmethod
    def holder(cls, coefficient: float, exponent: float) -> "DiniParameter":
        return cls("holder", coefficient=coefficient, exponent=exponent)

    @classmethod
    def tabulated(cls, radii, values) -> "DiniParameter":
        return cls("tabulated", radii=radii, values=values)

    @classmethod
    def zero(cls) -> "DiniParameter":
        """Modulus of a flat graph."""
        return cls("holder", coefficient=0.0, exponent=1.0)

    @classmethod
    def capped_linear(cls, slope: float, cap: float) -> "DiniParameter":
        """min(slope * r, cap) as a two-knot tabulated modulus."""
        if slope <= 0.0 or cap <= 0.0:
            raise ValueError("slope and cap must be positive")
        knee = cap / slope
        return cls.tabulated([0.0, knee, 1e9 * knee], [0.0, cap, cap])

    # -- evaluation ---------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.family == "holder" and self.coefficient == 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.family == "holder":
            out = self.coefficient * np.power(np.maximum(r, 0.0), self.exponent)
        else:
            out = np.interp(r, self.radii, self.values)
        return out if out.ndim else float(out)

    def integral(self, a: float, b: float) -> float:
        """Integral of theta(s)/s over [a, b], 0 <= a <= b, in closed form."""
        if a < 0.0 or b < a:
            raise ValueError("need 0 <= a <= b")
        if a == b or self.is_zero:
            return 0.0
        if self.family == "holder":
            al = self.exponent
            return self.coefficient * (b ** al - a ** al) / al
        total = 0.0
        knots = self.radii
        vals = self.values
        # Per-segment closed form: theta(s) = m s + c gives m*ds + c*log ratio.
        # The first segment has c = 0 by the (0, 0) anchor, so a = 0 is safe.
        edges = np.concatenate([knots, [np.inf]])
        for i in range(len(edges) - 1):
            lo, hi = max(a, edges[i]), min(b, edges[i + 1])
            if hi <= lo:
                continue
            if i < len(knots) - 1:
                m = (vals[i + 1] - vals[i]) / (knots[i + 1] - knots[i])
                c = vals[i] - m * knots[i]
            else:
                m, c = 0.0, vals[-1]
            total += m * (hi - lo)
            if c != 0.0:
                total += c * math.log(hi / lo)
        return total

    def smoothed(self, r: float) -> float:
        """Doubly averaged modulus; sandwiched between theta(r) and theta(4r).

        For the holder family the two nested averages collapse to
        C * (2**alpha - 1)**2 * r**alpha / (alpha**2 * log(2)**2).  Otherwise
        the average is computed on a fixed log-log Gauss grid, which is exact
        enough for root finding against it.
        """
        if r < 0.0:
            raise ValueError("radius must be nonnegative")
        if self.is_zero or r == 0.0:
            return 0.0
        if self.family == "holder":
            al = self.exponent
            return (self.coefficient * (2.0 ** al - 1.0) ** 2 / (al * al * _LOG2 * _LOG2)) * r ** al
        nodes, weights = _SMOOTH_GRID
        # theta~(r) = (1/log^2 2) int_0^log2 int_0^log2 theta(r e^(tau+sigma))
        s = r * np.exp(nodes[:, None] + nodes[None, :])
        vals = np.interp(s, self.radii, self.values)
        total = np.sum(weights[:, None] * weights[None, :] * vals)
        return float(total / (_LOG2 * _LOG2))


def _log_gauss_grid(n: int = 24):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * _LOG2
    return half * (x + 1.0), half * w


_SMOOTH_GRID = _log_gauss_grid()


def dini_integral(theta: DiniParameter, a: float, b: float) -> float:
    """Accumulated modulus integral of theta(s)/s over [a, b]."""
    return theta.integral(a, b)


def smooth_theta(theta: DiniParameter, r: float) -> float:
    """Doubly averaged modulus theta~ at radius r."""
    return theta.smoothed(r)


# =====================================================================
# domains
# =====================================================================

def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


class GraphDomain:
    """Region above the graph of phi, in one chart around the origin.

    Parameters
    ----------
    dimension : int
        Ambient dimension, 2 or 3.
    phi, grad_phi : callable
        Vectorized profile and slope on R^(d-1).  ``phi`` maps (..., d-1)
        arrays to (...,) and ``grad_phi`` to (..., d-1).
    dini : DiniParameter
        Valid slope modulus for pairs inside the chart.
    R : float
        Working scale; admissibility is phrased at multiples of R.
    chart_radius : float
        Radius (in the horizontal variable) inside which phi matches its
        declared profile exactly.  Builtin curved families smoothly flatten
        beyond it so that evaluation anywhere stays well defined, but no
        geometric claim is made past the chart.
    """

    def __init__(self, dimension: int, phi: Callable, grad_phi: Callable,
                 dini: DiniParameter, R: float = 1.0, name: str = "custom",
                 chart_radius: float = np.inf):
        if dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if R <= 0.0:
            raise ValueError("working scale R must be positive")
        self.dimension = int(dimension)
        self._phi = phi
        self._grad_phi = grad_phi
        self.dini = dini
        self.R = float(R)
        self.name = name
        self.chart_radius = float(chart_radius)

    # -- profile ------------------------------------------------------

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return self._phi(x)

    def grad_phi(self, x):
        x = np.asarray(x, dtype=float)
        return self._grad_phi(x)

    @property
    def is_flat(self) -> bool:
        return self.dini.is_zero

    # -- membership ---------------------------------------------------

    def height(self, X):
        """Signed vertical distance X_d - phi(x') above the graph."""
        X = np.asarray(X, dtype=float)
        return X[..., -1] - self.phi(X[..., :-1])

    def contains(self, X, tol: float = 0.0):
        """Open-domain membership, with ``tol >= 0`` relaxing toward the closure."""
        return self.height(X) > -tol

    def boundary_point(self, x):
        x = np.asarray(x, dtype=float)
        return np.concatenate([x, self.phi(x)[..., None]], axis=-1)

    # -- local frame --------------------------------------------------

    def inward_normal(self, x):
        """Unit normal (-grad phi, 1)/sqrt(1+|grad phi|^2) pointing into the domain."""
        x = np.asarray(x, dtype=float)
        g = self.grad_phi(x)
        denom = np.sqrt(1.0 + np.sum(g * g, axis=-1, keepdims=True))
        return np.concatenate([-g, np.ones_like(denom)], axis=-1) / denom

    def outward_normal(self, x):
        return -self.inward_normal(x)

    def area_element(self, x):
        """Surface measure factor sqrt(1 + |grad phi|^2) for graph integrals."""
        g = self.grad_phi(np.asarray(x, dtype=float))
        return np.sqrt(1.0 + np.sum(g * g, axis=-1))

    # -- builtin families ---------------------------------------------

    @classmethod
    def flat(cls, R: float = 1.0, dimension: int = 2) -> "GraphDomain":
        def phi(x):
            return np.zeros(x.shape[:-1])

        def grad(x):
            return np.zeros_like(x)

        return cls(dimension, phi, grad, DiniParameter.zero(), R=R, name="flat")

    @classmethod
    def quadratic_bump(cls, amplitude: float, R: float = 1.0,
                       dimension: int = 2) -> "GraphDomain":
        """phi = a |x|^2 inside the chart, smoothly flattened past 8R."""
        return cls._power_profile(amplitude, 1.0, R, dimension, "quadratic-bump")

    @classmethod
    def power_alpha(cls, amplitude: float, alpha: float, R: float = 1.0,
                    dimension: int = 2) -> "GraphDomain":
        """phi = a |x|^(1+alpha); slope is exactly alpha-Holder at the origin."""
        if not (0.0 < alpha < 1.0):
            raise ValueError("power-alpha exponent must lie in (0, 1)")
        return cls._power_profile(amplitude, alpha, R, dimension, "power-alpha")

    @classmethod
    def _power_profile(cls, a: float, alpha: float, R: float, dimension: int,
                       name: str) -> "GraphDomain":
        if a < 0.0:
            raise ValueError("amplitude must be nonnegative")
        if a == 0.0:
            dom = cls.flat(R=R, dimension=dimension)
            dom.name = name
            return dom
        w_in, w_out = 8.0 * R, 24.0 * R

        def chi(rho):
            return 1.0 - _smoothstep((rho - w_in) / (w_out - w_in))

        def dchi(rho):
            t = np.clip((rho - w_in) / (w_out - w_in), 0.0, 1.0)
            return -30.0 * t * t * (t - 1.0) * (t - 1.0) / (w_out - w_in)

        def phi(x):
            rho = np.sqrt(np.sum(x * x, axis=-1))
            return a * rho ** (1.0 + alpha) * chi(rho)

        def grad(x):
            rho = np.sqrt(np.sum(x * x, axis=-1))
            safe = np.where(rho > 0.0, rho, 1.0)
            radial = (a * (1.0 + alpha) * safe ** alpha * chi(rho)
                      + a * safe ** (1.0 + alpha) * dchi(rho))
            return np.where(rho[..., None] > 0.0,
                            radial[..., None] * x / safe[..., None],
                            np.zeros_like(x))

        # Exact modulus of the un-cut profile; 2^(1-alpha) covers pairs that
        # straddle the origin, where |x|^alpha directions flip.
        C = a * (1.0 + alpha) * 2.0 ** (1.0 - alpha)
        dini = DiniParameter.holder(C, alpha)
        return cls(dimension, phi, grad, dini, R=R, name=name, chart_radius=w_in)

    @classmethod
    def cosine_window(cls, amplitude: float, window: float = 0.0, R: float = 1.0,
                      dimension: int = 2) -> "GraphDomain":
        """Smooth compact bump phi = a sin^2(pi |x| / (2 w)) saturating at a.

        Globally C^{1,1}: the slope is Lipschitz with constant a pi^2 / w^2 and
        bounded by a pi / (2 w), which gives a capped-linear modulus.
        """
        if amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")
        w = window if window > 0.0 else 2.0 * R
        if amplitude == 0.0:
            dom = cls.flat(R=R, dimension=dimension)
            dom.name = "cosine-window"
            return dom
        a = float(amplitude)

        def phi(x):
            rho = np.sqrt(np.sum(x * x, axis=-1))
            inner = np.sin(0.5 * np.pi * np.minimum(rho, w) / w) ** 2
            return a * inner

        def grad(x):
            rho = np.sqrt(np.sum(x * x, axis=-1))
            safe = np.where(rho > 0.0, rho, 1.0)
            radial = np.where(rho < w,
                              0.5 * a * np.pi / w * np.sin(np.pi * rho / w), 0.0)
            return np.where(rho[..., None] > 0.0,
                            radial[..., None] * x / safe[..., None],
                            np.zeros_like(x))

        slope = a * np.pi ** 2 / w ** 2
        cap = a * np.pi / w
        dini = DiniParameter.capped_linear(slope, cap)
        return cls(dimension, phi, grad, dini, R=R, name="cosine-window")


def normal_vector(domain: GraphDomain, x):
    """Inward unit normal of the graph at horizontal position x."""
    return domain.inward_normal(x)


# =====================================================================
# nearest boundary point and distance
# =====================================================================

def nearest_boundary(domain: GraphDomain, p) -> Tuple[np.ndarray, float]:
    """Closest graph point to an interior point p.

    The horizontal search is restricted to |x - p'| <= 4 (p_d - phi(p')),
    which always contains the minimizer for slopes below 1/4; leaving that
    window is reported as a geometry error rather than silently accepted.

    Returns
    -------
    (point, dist) : boundary point as a length-d array, and its distance to p.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (domain.dimension,):
        raise ValueError("p must be a single point of the ambient space")
    px, ph = p[:-1], p[-1]
    gap = ph - float(domain.phi(px))
    if gap < 0.0:
        raise GeometryError("point lies below the graph")
    if gap == 0.0:
        return domain.boundary_point(px), 0.0
    if domain.is_flat:
        return np.concatenate([px, [0.0]]), gap
    window = 4.0 * gap

    def objective(x):
        dx = x - px
        dh = float(domain.phi(x)) - ph
        return float(dx @ dx) + dh * dh

    def gradient(x):
        dh = float(domain.phi(x)) - ph
        return 2.0 * (x - px) + 2.0 * dh * domain.grad_phi(x)

    starts = [px]
    for k in range(domain.dimension - 1):
        for s in (-0.5, 0.5):
            shifted = px.copy()
            shifted[k] += s * window
            starts.append(shifted)
    best_x, best_f = None, np.inf
    bounds = [(px[k] - window, px[k] + window) for k in range(domain.dimension - 1)]
    for x0 in starts:
        res = optimize.minimize(objective, x0, jac=gradient, method="L-BFGS-B",
                                bounds=bounds,
                                options={"ftol": 1e-18, "gtol": 1e-14, "maxiter": 200})
        if res.fun < best_f:
            best_f, best_x = res.fun, res.x
    if np.any(np.abs(best_x - px) > 0.999 * window):
        raise GeometryError("nearest-boundary search escaped its window")
    return domain.boundary_point(best_x), math.sqrt(best_f)


# =====================================================================
# critical scale
# =====================================================================

@dataclass
class CriticalScale:
    """Root of dist(p, boundary) = r * theta~(r), or a sentinel when absent."""
    p: np.ndarray
    dist: float
    r_cs: float
    status: str  # "ok" | "flat" | "beyond-chart"


def critical_scale(domain: GraphDomain, p, rel_tol: float = 1e-10) -> CriticalScale:
    """Solve dist(p) = r * theta~(r) for r by bisection on [dist, 5R].

    The left endpoint is a valid bracket because theta~(dist) < 1 for any
    usable domain; a flat domain (theta == 0) has no root and returns the
    +inf sentinel, as does a domain so gently curved that the root lies
    beyond the 5R chart.
    """
    p = np.asarray(p, dtype=float)
    _, dist = nearest_boundary(domain, p)
    if domain.is_flat:
        return CriticalScale(p, dist, np.inf, "flat")
    if dist == 0.0:
        raise GeometryError("critical scale is undefined on the boundary")

    theta = domain.dini

    def f(r):
        return r * theta.smoothed(r) - dist

    hi = 5.0 * domain.R
    if f(dist) > 0.0:
        raise GeometryError("theta~(dist) >= 1: point too close for this roughness")
    if f(hi) < 0.0:
        return CriticalScale(p, dist, np.inf, "beyond-chart")
    root = optimize.bisect(f, dist, hi, xtol=1e-15 * hi, maxiter=300)
    if abs(f(root)) > rel_tol * dist:
        raise GeometryError("critical-scale bisection did not meet tolerance")
    return CriticalScale(p, dist, float(root), "ok")


# =====================================================================
# admissibility
# =====================================================================

@dataclass
class AdmissibilityReport:
    theta_8R: float
    dini_16R: float
    theta_ok: bool
    dini_ok: bool

    @property
    def admissible(self) -> bool:
        return self.theta_ok and self.dini_ok


def admissibility(domain: GraphDomain) -> AdmissibilityReport:
    """Check theta(8R) < 1/72 and the modulus integral to 16R <= 1."""
    R = domain.R
    t8 = float(domain.dini(8.0 * R))
    d16 = domain.dini.integral(0.0, 16.0 * R)
    return AdmissibilityReport(
        theta_8R=t8,
        dini_16R=d16,
        theta_ok=t8 < THETA_BOUND_8R,
        dini_ok=d16 <= DINI_BOUND_16R,
    )
