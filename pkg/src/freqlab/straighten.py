"""Boundary straightening: mollified normal field, the flattening map and
its Jacobian, the induced coefficient matrix with its odd reflection, the
reflected extension of a boundary-vanishing harmonic field, and the
verification suite (weak residuals, conormal jump, Hölder certificate).

Coordinates: a point of the flattened picture is written (x, s) with x in
R^{d-1} along the graph chart and s the flattening height; the map G sends
(x, 0) to the graph point (x, phi(x)) and {s > 0} into the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GeometryError, SelfCheckError, WorkingBallError
from .geometry import GraphDomain
from .harmonic import ScalarField
from .quadrature import QuadratureSpec, ball_integral

__all__ = [
    "Mollifier",
    "StraighteningMap",
    "CoefficientField",
    "ExtendedField",
    "map_G",
    "jacobian_DG",
    "coefficient_A",
    "extend_field",
    "weak_residual",
    "conormal_jump",
    "modulus_certificate",
    "separation_pairs",
    "radial_bump",
]

DET_LO = 0.5
DET_HI = 1.5


def _bump_profile(t: np.ndarray) -> np.ndarray:
    """Smooth compactly supported profile exp(-1/(1-t^2)) on |t| < 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


def _bump_profile_deriv(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    q = 1.0 - ti * ti
    out[inside] = np.exp(-1.0 / q) * (-2.0 * ti / (q * q))
    return out


def _radial_mass(dx: int, fun: Callable, n: int) -> float:
    """Integral over the unit ball of R^dx of a radial function."""
    g, w = np.polynomial.legendre.leggauss(n)
    if dx == 1:
        return float(np.sum(w * fun(g)))
    r = 0.5 * (g + 1.0)
    return float(np.sum(0.5 * w * fun(r) * 2.0 * math.pi * r))


class Mollifier:
    """Radial smooth bump on the unit ball of R^{d-1} with derived kernels.

    The continuum moment identities (unit mass, vanishing first-derivative
    integrals, and the dilation moment equal to -(d-1)) are certified by
    comparing high-resolution radial rules of two sizes; the convolution
    kernels live on a tensor grid whose weights are corrected (grid mass
    normalization, exact zero mean of the dilation kernel) so that discrete
    convolutions reproduce the flat-domain map to machine precision.
    """

    def __init__(self, dimension: int, points: int = 48):
        if dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        self.dimension = dimension
        self.points = points
        dx = dimension - 1

        # continuum normalizer and the certified identities
        norm = _radial_mass(dx, _bump_profile, 512)
        self.identity_mass = _radial_mass(dx, _bump_profile, 1024) / norm
        dil = lambda t: np.abs(t) * _bump_profile_deriv(np.abs(t))
        self.identity_dilation = _radial_mass(dx, dil, 1024) / norm

        g, w = np.polynomial.legendre.leggauss(points)
        if dx == 1:
            nodes = g[:, None]
            weights = w
        else:
            Xg, Yg = np.meshgrid(g, g, indexing="ij")
            nodes = np.stack([Xg.ravel(), Yg.ravel()], axis=1)
            weights = np.outer(w, w).ravel()
        rr = np.linalg.norm(nodes, axis=1)
        prof = _bump_profile(rr) / norm
        dprof = _bump_profile_deriv(rr) / norm
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(rr[:, None] > 0.0,
                            nodes / np.maximum(rr, 1e-300)[:, None], 0.0)
        grad = dprof[:, None] * unit          # nabla rho at the nodes
        radial = rr * dprof                   # z . nabla rho

        # first-derivative integrals vanish by grid antisymmetry; report the
        # floating-point sum as the certificate
        self.identity_grad = [float(np.sum(weights * grad[:, i]))
                              for i in range(dx)]

        # grid corrections: exact discrete unit mass, exact zero mean of the
        # dilation kernel, so flat domains map identically
        c_grid = 1.0 / float(np.sum(weights * prof))
        self.nodes = nodes
        self.weights = weights
        self.rho = prof * c_grid
        self.grad_rho = grad * c_grid
        comb = (dx * self.rho + radial * c_grid)
        comb = comb - np.sum(weights * comb) / np.sum(weights)
        self.dilation = comb


@dataclass
class StraighteningMap:
    """Flattening map G(x,s) = (x, phi(x)) + s * (mollified inward normal).

    All evaluators are batch: x has shape (n, d-1) and s shape (n,).
    """

    domain: GraphDomain
    mollifier: Optional[Mollifier] = None
    working_radius: Optional[float] = None

    def __post_init__(self):
        if self.mollifier is None:
            self.mollifier = Mollifier(self.domain.dimension)
        if self.mollifier.dimension != self.domain.dimension:
            raise ValueError("mollifier dimension mismatch")

    def _conv(self, x: np.ndarray, s: np.ndarray, kernel: np.ndarray) -> np.ndarray:
        """Sum_i w_i kernel_i n(x - s z_i), shape (n, d)."""
        m = self.mollifier
        pts = x[:, None, :] - s[:, None, None] * m.nodes[None, :, :]
        flat = pts.reshape(-1, x.shape[1])
        normals = self.domain.inward_normal(flat).reshape(x.shape[0], -1,
                                                          self.domain.dimension)
        return np.einsum("m,nmd->nd", m.weights * kernel, normals)

    def map_G(self, x, s) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        base = np.concatenate([x, self.domain.phi(x)[:, None]], axis=1)
        return base + s[:, None] * self._conv(x, s, self.mollifier.rho)

    def jacobian_DG(self, x, s, self_check: bool = False) -> np.ndarray:
        """Analytic Jacobian, shape (n, d, d); last column is the s-derivative.

        With ``self_check`` the result is compared against central finite
        differences of map_G and a disagreement beyond 1e-4 relative raises,
        flagging an implementation fault rather than a data problem.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        n, dx = x.shape
        d = self.domain.dimension
        out = np.zeros((n, d, d))
        gphi = self.domain.grad_phi(x)
        for i in range(dx):
            out[:, i, i] = 1.0
            out[:, d - 1, i] = gphi[:, i]
            out[:, :, i] += self._conv(x, s, self.mollifier.grad_rho[:, i])
        out[:, :, d - 1] = (self._conv(x, s, self.mollifier.rho)
                            - self._conv(x, s, self.mollifier.dilation))
        if self_check:
            fd = self._fd_jacobian(x, s)
            scale = np.max(np.abs(out), axis=(1, 2), keepdims=True)
            rel = np.max(np.abs(out - fd) / scale)
            if rel > 1e-4:
                raise SelfCheckError(
                    f"Jacobian disagrees with finite differences at {rel:.2e}")
        return out

    def _fd_jacobian(self, x: np.ndarray, s: np.ndarray,
                     h: float = 1e-6) -> np.ndarray:
        n, dx = x.shape
        d = self.domain.dimension
        out = np.zeros((n, d, d))
        for i in range(dx):
            e = np.zeros(dx)
            e[i] = h
            out[:, :, i] = (self.map_G(x + e, s) - self.map_G(x - e, s)) / (2 * h)
        out[:, :, d - 1] = (self.map_G(x, s + h) - self.map_G(x, s - h)) / (2 * h)
        return out

    def det_DG(self, x, s) -> np.ndarray:
        return np.linalg.det(self.jacobian_DG(x, s))

    def find_working_radius(self, cap: Optional[float] = None,
                            grid: Tuple[int, int] = (7, 24)) -> float:
        """Largest ball radius keeping sampled det DG inside [1/2, 3/2].

        Bisection over the radius; each candidate is checked on a polar
        sample of the (x, s) ball restricted to s >= 0 (the reflection
        copies the determinant evenly).  The result is cached.
        """
        if cap is None:
            cap = self.domain.chart_radius / 2.0
        if not np.isfinite(cap):
            cap = 4.0 * self.domain.R
        n_rad, n_ang = grid

        def ok(radius: float) -> bool:
            rr = np.linspace(radius / n_rad, radius, n_rad)
            if self.domain.dimension == 2:
                ang = np.linspace(0.0, math.pi, n_ang)
                xs = np.outer(rr, np.cos(ang)).ravel()[:, None]
                ss = np.outer(rr, np.abs(np.sin(ang))).ravel()
            else:
                ang = np.linspace(0.0, math.pi, n_ang)
                azi = np.linspace(0.0, 2.0 * math.pi, n_ang, endpoint=False)
                Ps, Az, Rr = np.meshgrid(ang, azi, rr)
                xs = np.stack([(Rr * np.sin(Ps) * np.cos(Az)).ravel(),
                               (Rr * np.sin(Ps) * np.sin(Az)).ravel()], axis=1)
                ss = np.abs((Rr * np.cos(Ps)).ravel())
            dets = self.det_DG(xs, ss)
            return bool(np.all((dets >= DET_LO) & (dets <= DET_HI)))

        if ok(cap):
            self.working_radius = cap
            return cap
        lo, hi = 0.0, cap
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        if lo == 0.0:
            raise WorkingBallError("determinant leaves [1/2, 3/2] at every scale")
        self.working_radius = lo
        return lo


class CoefficientField:
    """Change-of-variables coefficient matrix of the straightening map.

    For s >= 0, A = |det DG| (DG)^{-1} (DG)^{-T}; for s < 0 the reflected
    matrix keeps the horizontal block and the corner entry even in s and
    flips the sign of the mixed column, which is what makes the odd
    extension solve one equation across {s = 0}.
    """

    def __init__(self, sm: StraighteningMap):
        self.sm = sm
        self.dimension = sm.domain.dimension

    def matrix(self, x, s) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        sign = np.where(s < 0.0, -1.0, 1.0)
        DG = self.sm.jacobian_DG(x, np.abs(s))
        det = np.linalg.det(DG)
        bad = (det < DET_LO) | (det > DET_HI)
        if np.any(bad):
            raise WorkingBallError(
                f"det DG = {det[bad][0]:.4f} outside [1/2, 3/2]; shrink the ball")
        inv = np.linalg.inv(DG)
        A = det[:, None, None] * np.einsum("nij,nkj->nik", inv, inv)
        A = 0.5 * (A + np.transpose(A, (0, 2, 1)))
        d = self.dimension
        A[:, :d - 1, d - 1] *= sign[:, None]
        A[:, d - 1, :d - 1] *= sign[:, None]
        return A

    def boundary_matrix(self, x) -> np.ndarray:
        """Closed-form limit at s = 0: scalar times a block-diagonal matrix."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = self.sm.domain.grad_phi(x)
        d = self.dimension
        c = np.sqrt(1.0 + np.sum(g * g, axis=1))
        out = np.zeros((x.shape[0], d, d))
        block = np.eye(d - 1)[None, :, :] + g[:, :, None] * g[:, None, :]
        out[:, :d - 1, :d - 1] = np.linalg.inv(block)
        out[:, d - 1, d - 1] = 1.0
        return c[:, None, None] * out

    def ellipticity(self, x, s) -> Tuple[float, float]:
        """Extreme eigenvalues over the batch of sample points."""
        A = self.matrix(x, s)
        ev = np.linalg.eigvalsh(A)
        return float(np.min(ev)), float(np.max(ev))


class ExtendedField(ScalarField):
    """Odd reflection of u composed with the straightening map.

    Value and gradient are analytic (chain rule through the Jacobian); the
    Hessian falls back to central differences of the gradient, which is all
    the critical-point refinement needs.
    """

    provenance = "extension"

    def __init__(self, base: ScalarField, sm: StraighteningMap):
        self.base = base
        self.sm = sm
        self.dimension = sm.domain.dimension

    def _split(self, P):
        return P[:, :-1], P[:, -1]

    def _value(self, P):
        x, s = self._split(P)
        sign = np.where(s < 0.0, -1.0, 1.0)
        vals = self.base._value(self.sm.map_G(x, np.abs(s)))
        return sign * vals

    def _gradient(self, P):
        x, s = self._split(P)
        sign = np.where(s < 0.0, -1.0, 1.0)
        s_abs = np.abs(s)
        DG = self.sm.jacobian_DG(x, s_abs)
        gu = self.base._gradient(self.sm.map_G(x, s_abs))
        grad = np.einsum("nkj,nk->nj", DG, gu)
        grad[:, :-1] *= sign[:, None]
        return grad

    def _hessian(self, P):
        n, d = P.shape
        out = np.empty((n, d, d))
        h = 1e-6 * max(1.0, float(np.max(np.abs(P))))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            out[:, :, j] = (self._gradient(P + e) - self._gradient(P - e)) / (2 * h)
        return 0.5 * (out + np.transpose(out, (0, 2, 1)))


# =====================================================================
# functional wrappers
# =====================================================================

def map_G(sm: StraighteningMap, x, s):
    """Image of one chart point; scalar x and s accepted."""
    out = sm.map_G(np.atleast_2d(x), [s] if np.isscalar(s) else s)
    return out[0] if np.isscalar(s) else out


def jacobian_DG(sm: StraighteningMap, x, s, self_check: bool = True):
    out = sm.jacobian_DG(np.atleast_2d(x), [s] if np.isscalar(s) else s,
                         self_check=self_check)
    return out[0] if np.isscalar(s) else out


def coefficient_A(sm: StraighteningMap, x, s):
    out = CoefficientField(sm).matrix(np.atleast_2d(x),
                                      [s] if np.isscalar(s) else s)
    return out[0] if np.isscalar(s) else out


def extend_field(field: ScalarField, sm: StraighteningMap) -> ExtendedField:
    """Odd extension of a boundary-vanishing field through the map."""
    return ExtendedField(field, sm)


# =====================================================================
# verification suite
# =====================================================================

def radial_bump(center: np.ndarray, radius: float):
    """Smooth compactly supported test profile with its gradient."""
    center = np.asarray(center, dtype=float)

    def value(P):
        t = np.linalg.norm(P - center[None, :], axis=1) / radius
        return _bump_profile(t)

    def gradient(P):
        diff = P - center[None, :]
        dist = np.linalg.norm(diff, axis=1)
        t = dist / radius
        mag = _bump_profile_deriv(t) / radius
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(dist[:, None] > 0.0,
                            diff / np.maximum(dist, 1e-300)[:, None], 0.0)
        return mag[:, None] * unit

    return value, gradient


def _half_ball(coef: CoefficientField, ext: ExtendedField, center, radius,
               bump_grad, flip: bool, spec) -> Tuple[float, float]:
    """Flux pairing and gradient mass over one side of {s = 0}."""
    d = coef.dimension
    half = GraphDomain.flat(R=max(10.0 * radius, 1.0), dimension=d)
    c = np.array(center, dtype=float)
    if flip:
        c = c.copy()
        c[-1] = -c[-1]

    def pull(P):
        if flip:
            Q = P.copy()
            Q[:, -1] = -Q[:, -1]
            return Q
        return P

    def flux_dot(P):
        Q = pull(P)
        A = coef.matrix(Q[:, :-1], Q[:, -1])
        gu = ext._gradient(Q)
        gb = bump_grad(Q)
        return np.einsum("nij,nj,ni->n", A, gu, gb)

    def grad_mass(P):
        gu = ext._gradient(pull(P))
        return np.sum(gu * gu, axis=1)

    pair = ball_integral(half, c, radius, flux_dot, spec).value
    mass = ball_integral(half, c, radius, grad_mass, spec).value
    return pair, mass


def weak_residual(coef: CoefficientField, ext: ExtendedField, center,
                  radius: float,
                  spec: Optional[QuadratureSpec] = None) -> float:
    """Weak-form residual of the extended equation against one test bump.

    Integrates the coefficient-weighted gradient of the extension against
    the gradient of a smooth bump supported in the ball, split at {s = 0}
    where the integrand kinks, and normalizes by the gradient masses.  Small
    values certify that the extension solves the reflected equation across
    the interface.
    """
    center = np.asarray(center, dtype=float)
    bump_val, bump_grad = radial_bump(center, radius)
    up_pair, up_mass = _half_ball(coef, ext, center, radius, bump_grad,
                                  False, spec)
    lo_pair, lo_mass = _half_ball(coef, ext, center, radius, bump_grad,
                                  True, spec)

    def bump_sq(P):
        g = bump_grad(P)
        return np.sum(g * g, axis=1)

    bump_mass = ball_integral(None, center, radius, bump_sq, spec).value
    denom = math.sqrt(max(up_mass + lo_mass, 1e-300)) * math.sqrt(bump_mass)
    return (up_pair + lo_pair) / denom


def conormal_jump(coef: CoefficientField, ext: ExtendedField, x,
                  h: float) -> float:
    """Sum of the two one-sided conormal fluxes at heights +h and -h.

    The flux from above pairs with the downward normal and the flux from
    below with the upward normal; their sum tends to zero as h does when
    the reflected matrix is parity-correct.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = coef.dimension
    e_down = np.zeros(d)
    e_down[-1] = -1.0
    up = np.concatenate([x, np.full((x.shape[0], 1), h)], axis=1)
    dn = np.concatenate([x, np.full((x.shape[0], 1), -h)], axis=1)
    A_up = coef.matrix(x, np.full(x.shape[0], h))
    A_dn = coef.matrix(x, np.full(x.shape[0], -h))
    f_up = np.einsum("nij,nj,i->n", A_up, ext._gradient(up), e_down)
    f_dn = np.einsum("nij,nj,i->n", A_dn, ext._gradient(dn), -e_down)
    return float(np.max(np.abs(f_up + f_dn)))


def separation_pairs(box: float, levels: int, per_level: int,
                     base_sep: float = 0.25, rough_point: float = 0.0,
                     dimension: int = 2) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Deterministic zoom ladder of pairs for modulus certification.

    Level j works at separation base_sep/4^j and places its chart positions
    at multiples of that separation around ``rough_point`` (on the first
    chart axis), so deeper levels zoom into the place where the coefficient
    roughness concentrates; pairs far from it only see the smooth local
    behavior and would certify any exponent.  Each position contributes a
    height pair straddling {s = 0}, a one-sided height pair, and a
    horizontal interface pair.  Refinement extends the ladder depth,
    driving separations to zero.
    """
    def _pt(x0, s):
        z = np.zeros(dimension)
        z[0] = x0
        z[-1] = s
        return z

    pairs = []
    for j in range(levels):
        sep = base_sep * 0.25 ** j
        for k in range(per_level):
            # positions at +-(k+1)/2 separations from the rough point
            off = sep * 0.5 * (k + 1)
            if off > box:
                off = box * (k + 0.5) / per_level
            for xk in (rough_point + off, rough_point - off):
                pairs.append((_pt(xk, sep / 2.0), _pt(xk, -sep / 2.0)))
                pairs.append((_pt(xk, 0.0), _pt(xk, sep)))
                pairs.append((_pt(xk - sep / 2.0, 0.0),
                              _pt(xk + sep / 2.0, 0.0)))
    return pairs


def modulus_certificate(coef: CoefficientField, alpha: float,
                        pairs: Sequence[Tuple[np.ndarray, np.ndarray]]) -> float:
    """Measured Hölder-alpha constant of the reflected coefficient matrix.

    Supremum over the pairs of the Frobenius-norm difference divided by the
    separation to the alpha; stable under refinement exactly when alpha is
    no larger than the true regularity.
    """
    sup = 0.0
    for z1, z2 in pairs:
        sep = float(np.linalg.norm(z1 - z2))
        if sep == 0.0:
            continue
        A1 = coef.matrix(z1[None, :-1], z1[-1:])[0]
        A2 = coef.matrix(z2[None, :-1], z2[-1:])[0]
        ratio = float(np.linalg.norm(A1 - A2)) / sep ** alpha
        sup = max(sup, ratio)
    return sup
