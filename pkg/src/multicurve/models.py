"""Parametric curve families: map a parameter vector to a sampled point set.

Every family exposes the same surface: an arc-length parameterization
``position(theta, s)`` for s in [0, L], uniform sampling at a resolution
delta, data-driven default bounds, and a direction-reversal map used when
comparing fitted parameters against ground truth.

Conventions shared by the road families:
  * the horizontal heading angle at arc length s is measured in radians
    against the +x axis, with the tangent (cos psi, sin psi);
  * s is the horizontal arc length; the vertical profile is the parabola
    z(s) = z0 + g0*s + 0.5*cv*s^2 over the same s.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import BSpline

from .core import (
    ConfigError,
    DegenerateModelError,
    ParamBounds,
    PointSet,
    UsageError,
    as_coords,
    closest_pair_distance,
    validate_params,
)

# Family-specific default envelopes (documented in the README); generous
# ranges around common highway-design values.
SLOPE_BOUND = 0.15            # start slope g0, dimensionless grade
VERTICAL_CURVATURE_BOUND = 0.01   # cv, 1/m
SPIRAL_CURVATURE_BOUND = 0.02     # kappa0, 1/m
SPIRAL_CURVATURE_RATE_BOUND = 1e-3  # kappa', 1/m^2
RADIUS_DIAGONAL_FACTOR = 4.0  # |R| <= factor * bbox diagonal
LENGTH_DIAGONAL_FACTOR = 1.5  # L <= factor * bbox diagonal

_DEGENERATE_EPS = 1e-12


class ModelFamily:
    """Base class for a named parametric curve family.

    Families are stateless: all methods are pure functions of (theta, ...)
    and safe to call concurrently.
    """

    def __init__(self, name: str, n_params: int, dimension: int, param_names: tuple[str, ...]):
        self.name = name
        self.n_params = n_params
        self.dimension = dimension
        self.param_names = param_names

    # -- core surface -------------------------------------------------

    def curve_length(self, theta) -> float:
        """Total arc length L of the instance; raises on degenerate theta."""
        raise NotImplementedError

    def positions(self, theta, s: np.ndarray) -> np.ndarray:
        """Vectorized arc-length positions; s values must lie in [0, L]."""
        raise NotImplementedError

    def arc_length_position(self, theta, s: float) -> np.ndarray:
        theta = validate_params(theta, self.n_params)
        length = self.curve_length(theta)
        if not 0.0 <= s <= length * (1 + 1e-12):
            raise UsageError(f"arc length {s} outside [0, {length}]")
        return self.positions(theta, np.asarray([min(s, length)], dtype=np.float64))[0]

    def sample(self, theta, delta: float) -> np.ndarray:
        """Uniform arc-length sample with spacing <= delta, endpoints included."""
        if not delta > 0:
            raise UsageError("delta must be positive")
        theta = validate_params(theta, self.n_params)
        length = self.curve_length(theta)
        n_segments = max(1, math.ceil(length / delta))
        stations = np.linspace(0.0, length, n_segments + 1)
        return self.positions(theta, stations)

    def reverse(self, theta) -> np.ndarray:
        """Parameters of the same curve traversed in the opposite direction."""
        raise NotImplementedError

    def default_bounds(self, data: PointSet | np.ndarray, margin: float = 0.1) -> ParamBounds:
        return fit_bounds_from_data(self, data, margin)

    def _bounds_parts(self, lo, hi, diag, delta_d, margin):
        raise NotImplementedError


def _bbox(data: PointSet | np.ndarray, dim: int):
    coords = as_coords(data, dim=dim)
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    diag = float(np.linalg.norm(hi - lo))
    if diag <= 0:
        raise UsageError("data bounding box is degenerate (all points coincide)")
    return coords, lo, hi, diag


def fit_bounds_from_data(family: ModelFamily, data: PointSet | np.ndarray, margin: float = 0.1) -> ParamBounds:
    """Data-driven parameter box: positions from the (expanded) bounding box,
    lengths and scales from the data resolution and box diagonal, angles over
    a full turn, curvatures and slopes from the family envelopes."""
    if margin < 0:
        raise UsageError("margin must be nonnegative")
    coords, lo, hi, diag = _bbox(data, family.dimension)
    pad = margin * diag
    delta_d = closest_pair_distance(coords) if len(coords) >= 2 else diag * 1e-3
    lower, upper = family._bounds_parts(lo - pad, hi + pad, diag + 2 * pad, delta_d, margin)
    return ParamBounds(np.asarray(lower, dtype=np.float64), np.asarray(upper, dtype=np.float64))


# ---------------------------------------------------------------------------
# 2D line segment
# ---------------------------------------------------------------------------

class LineSegment2D(ModelFamily):
    """Segment { p + t*q | t in [0, 1] } with theta = (px, py, qx, qy)."""

    def __init__(self):
        super().__init__(
            name="line2d",
            n_params=4,
            dimension=2,
            param_names=("px", "py", "qx", "qy"),
        )

    def curve_length(self, theta) -> float:
        theta = validate_params(theta, 4)
        length = float(np.hypot(theta[2], theta[3]))
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("line segment with |q| ~ 0")
        return length

    def positions(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, 4)
        length = self.curve_length(theta)
        t = np.asarray(s, dtype=np.float64) / length
        return theta[:2] + np.outer(t, theta[2:])

    def reverse(self, theta) -> np.ndarray:
        theta = validate_params(theta, 4)
        return np.concatenate([theta[:2] + theta[2:], -theta[2:]])

    def _bounds_parts(self, lo, hi, diag, delta_d, margin):
        lower = [lo[0], lo[1], -diag, -diag]
        upper = [hi[0], hi[1], diag, diag]
        return lower, upper


# ---------------------------------------------------------------------------
# 2D B-spline stroke
# ---------------------------------------------------------------------------

class BSplineStroke2D(ModelFamily):
    """Clamped uniform cubic B-spline stroke with a placement transform.

    theta = (cx, cy, scale, rotation, u1x, u1y, ..., u5x, u5y): five shape
    control points in a canonical frame, then scaled, rotated and
    translated. Clamped end knots make the curve interpolate the first and
    last control points, so stroke endpoints are identifiable.
    """

    N_CONTROL = 5
    DEGREE = 3

    def __init__(self):
        names = ["cx", "cy", "scale", "rotation"]
        for i in range(1, self.N_CONTROL + 1):
            names += [f"u{i}x", f"u{i}y"]
        super().__init__(
            name="bspline2d",
            n_params=4 + 2 * self.N_CONTROL,
            dimension=2,
            param_names=tuple(names),
        )
        # 5 control points, degree 3, clamped: one interior knot.
        self._knots = np.array([0, 0, 0, 0, 0.5, 1, 1, 1, 1], dtype=np.float64)

    def _control_points(self, theta) -> np.ndarray:
        cx, cy, scale, rotation = theta[:4]
        if scale < _DEGENERATE_EPS:
            raise DegenerateModelError("stroke with scale ~ 0")
        ctrl = theta[4:].reshape(self.N_CONTROL, 2)
        cos_r, sin_r = math.cos(rotation), math.sin(rotation)
        rot = np.array([[cos_r, -sin_r], [sin_r, cos_r]])
        return np.array([cx, cy]) + scale * ctrl @ rot.T

    def _polyline(self, theta, n_dense: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense curve polyline: (parameters, points, cumulative chord length)."""
        ctrl = self._control_points(theta)
        spline = BSpline(self._knots, ctrl, self.DEGREE)
        t = np.linspace(0.0, 1.0, n_dense)
        pts = spline(t)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return t, pts, cum

    def curve_length(self, theta) -> float:
        theta = validate_params(theta, self.n_params)
        _, _, cum = self._polyline(theta, 512)
        length = float(cum[-1])
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("stroke with all control points coincident")
        return length

    def _eval_at_arclength(self, theta, s: np.ndarray) -> np.ndarray:
        # Map arc length to spline parameter through a dense chord-length
        # table, then evaluate the spline there so returned points lie on
        # the curve itself rather than on the interpolating polyline.
        ctrl = self._control_points(theta)
        spline = BSpline(self._knots, ctrl, self.DEGREE)
        t = np.linspace(0.0, 1.0, 1024)
        pts = spline(t)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        length = float(cum[-1])
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("stroke with all control points coincident")
        s_clamped = np.clip(np.asarray(s, dtype=np.float64), 0.0, length)
        return spline(np.interp(s_clamped, cum, t))

    def positions(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, self.n_params)
        return self._eval_at_arclength(theta, s)

    def sample(self, theta, delta: float) -> np.ndarray:
        if not delta > 0:
            raise UsageError("delta must be positive")
        theta = validate_params(theta, self.n_params)
        ctrl = self._control_points(theta)
        spline = BSpline(self._knots, ctrl, self.DEGREE)
        t = np.linspace(0.0, 1.0, 1024)
        pts = spline(t)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        length = float(cum[-1])
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("stroke with all control points coincident")
        n_segments = max(1, math.ceil(length / delta))
        stations = np.linspace(0.0, length, n_segments + 1)
        return spline(np.interp(stations, cum, t))

    def reverse(self, theta) -> np.ndarray:
        theta = validate_params(theta, self.n_params)
        ctrl = theta[4:].reshape(self.N_CONTROL, 2)[::-1]
        return np.concatenate([theta[:4], ctrl.reshape(-1)])

    def _bounds_parts(self, lo, hi, diag, delta_d, margin):
        lower = [lo[0], lo[1], delta_d, 0.0] + [-1.0, -1.0] * self.N_CONTROL
        upper = [hi[0], hi[1], diag, 2.0 * math.pi] + [1.0, 1.0] * self.N_CONTROL
        return lower, upper


# ---------------------------------------------------------------------------
# 3D highway curves
# ---------------------------------------------------------------------------

def _vertical_profile(z0: float, g0: float, cv: float, s: np.ndarray) -> np.ndarray:
    return z0 + g0 * s + 0.5 * cv * s * s


class HighwayCircleParabola3D(ModelFamily):
    """Horizontal circular arc with a parabolic vertical profile.

    theta = (x0, y0, z0, L, phi0, g0, R, cv). The horizontal projection is
    an arc of signed radius R; using the chord form
        x(s) = x0 + 2R sin(s/2R) cos(phi0 + s/2R)
        y(s) = y0 + 2R sin(s/2R) sin(phi0 + s/2R)
    keeps the evaluation stable for near-straight curves (|R| huge).
    """

    def __init__(self):
        super().__init__(
            name="road-circle-parabola",
            n_params=8,
            dimension=3,
            param_names=("x0", "y0", "z0", "L", "phi0", "g0", "R", "cv"),
        )

    def curve_length(self, theta) -> float:
        theta = validate_params(theta, 8)
        length = float(theta[3])
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("road curve with L <= 0")
        if abs(theta[6]) < _DEGENERATE_EPS:
            raise DegenerateModelError("road curve with R = 0")
        return length

    def positions(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, 8)
        self.curve_length(theta)
        x0, y0, z0, _, phi0, g0, radius, cv = theta
        s = np.asarray(s, dtype=np.float64)
        half = s / (2.0 * radius)
        chord = 2.0 * radius * np.sin(half)
        x = x0 + chord * np.cos(phi0 + half)
        y = y0 + chord * np.sin(phi0 + half)
        z = _vertical_profile(z0, g0, cv, s)
        return np.column_stack([x, y, z])

    def heading(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, 8)
        return theta[4] + np.asarray(s, dtype=np.float64) / theta[6]

    def reverse(self, theta) -> np.ndarray:
        theta = validate_params(theta, 8)
        x0, y0, z0, length, phi0, g0, radius, cv = theta
        end = self.positions(theta, np.asarray([length]))[0]
        phi_end = phi0 + length / radius
        g_end = g0 + cv * length
        return np.array([
            end[0], end[1], end[2],
            length,
            (phi_end + math.pi) % (2.0 * math.pi),
            -g_end,
            -radius,
            cv,
        ])

    def _bounds_parts(self, lo, hi, diag, delta_d, margin):
        r_max = RADIUS_DIAGONAL_FACTOR * diag
        lower = [lo[0], lo[1], lo[2], delta_d, 0.0, -SLOPE_BOUND, -r_max, -VERTICAL_CURVATURE_BOUND]
        upper = [hi[0], hi[1], hi[2], LENGTH_DIAGONAL_FACTOR * diag, 2.0 * math.pi,
                 SLOPE_BOUND, r_max, VERTICAL_CURVATURE_BOUND]
        return lower, upper


class HighwaySpiralParabola3D(ModelFamily):
    """Clothoid (linearly varying curvature) with a parabolic vertical profile.

    theta = (x0, y0, z0, L, phi0, g0, kappa0, kappa_rate, cv); the heading
    is psi(s) = phi0 + kappa0*s + 0.5*kappa_rate*s^2 and the horizontal
    position follows by integrating (cos psi, sin psi). Gauss-Legendre
    panels are refined adaptively until successive refinements agree to
    1e-9 per station interval.
    """

    _GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)

    def __init__(self):
        super().__init__(
            name="road-spiral-parabola",
            n_params=9,
            dimension=3,
            param_names=("x0", "y0", "z0", "L", "phi0", "g0", "kappa0", "kappa_rate", "cv"),
        )

    def curve_length(self, theta) -> float:
        theta = validate_params(theta, 9)
        length = float(theta[3])
        if length < _DEGENERATE_EPS:
            raise DegenerateModelError("road curve with L <= 0")
        return length

    def heading(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, 9)
        s = np.asarray(s, dtype=np.float64)
        return theta[4] + theta[6] * s + 0.5 * theta[7] * s * s

    def _tangent_integrals(self, theta, s_lo: np.ndarray, s_hi: np.ndarray, panels: int) -> np.ndarray:
        """Integral of (cos psi, sin psi) over each [s_lo, s_hi], 'panels' GL panels each."""
        edges = np.linspace(s_lo, s_hi, panels + 1, axis=-1)  # (n, panels+1)
        a = edges[..., :-1]
        b = edges[..., 1:]
        halfw = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        # nodes: (n, panels, n_gl)
        pts = mid[..., None] + halfw[..., None] * self._GL_NODES
        psi = self.heading(theta, pts.reshape(-1)).reshape(pts.shape)
        w = halfw[..., None] * self._GL_WEIGHTS
        dx = np.sum(np.cos(psi) * w, axis=(-1, -2))
        dy = np.sum(np.sin(psi) * w, axis=(-1, -2))
        return np.column_stack([dx, dy])

    def _integrate_intervals(self, theta, s_lo: np.ndarray, s_hi: np.ndarray) -> np.ndarray:
        panels = 1
        result = self._tangent_integrals(theta, s_lo, s_hi, panels)
        for _ in range(8):
            panels *= 2
            refined = self._tangent_integrals(theta, s_lo, s_hi, panels)
            if np.max(np.abs(refined - result)) <= 1e-9:
                return refined
            result = refined
        return result

    def positions(self, theta, s: np.ndarray) -> np.ndarray:
        theta = validate_params(theta, 9)
        self.curve_length(theta)
        s = np.asarray(s, dtype=np.float64)
        order = np.argsort(s, kind="stable")
        s_sorted = s[order]
        boundaries = np.concatenate([[0.0], s_sorted])
        deltas = self._integrate_intervals(theta, boundaries[:-1], boundaries[1:])
        xy = theta[:2] + np.cumsum(deltas, axis=0)
        out_xy = np.empty_like(xy)
        out_xy[order] = xy
        z = _vertical_profile(theta[2], theta[5], theta[8], s)
        return np.column_stack([out_xy, z])

    def reverse(self, theta) -> np.ndarray:
        theta = validate_params(theta, 9)
        x0, y0, z0, length, phi0, g0, k0, k_rate, cv = theta
        end = self.positions(theta, np.asarray([length]))[0]
        psi_end = phi0 + k0 * length + 0.5 * k_rate * length * length
        g_end = g0 + cv * length
        # Reversed curve: psi'(s) = psi(L - s) + pi, so kappa'(s) = -kappa(L - s).
        return np.array([
            end[0], end[1], end[2],
            length,
            (psi_end + math.pi) % (2.0 * math.pi),
            -g_end,
            -(k0 + k_rate * length),
            k_rate,
            cv,
        ])

    def _bounds_parts(self, lo, hi, diag, delta_d, margin):
        lower = [lo[0], lo[1], lo[2], delta_d, 0.0, -SLOPE_BOUND,
                 -SPIRAL_CURVATURE_BOUND, -SPIRAL_CURVATURE_RATE_BOUND, -VERTICAL_CURVATURE_BOUND]
        upper = [hi[0], hi[1], hi[2], LENGTH_DIAGONAL_FACTOR * diag, 2.0 * math.pi, SLOPE_BOUND,
                 SPIRAL_CURVATURE_BOUND, SPIRAL_CURVATURE_RATE_BOUND, VERTICAL_CURVATURE_BOUND]
        return lower, upper


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

FAMILIES: dict[str, ModelFamily] = {
    family.name: family
    for family in (
        LineSegment2D(),
        BSplineStroke2D(),
        HighwayCircleParabola3D(),
        HighwaySpiralParabola3D(),
    )
}


def get_family(name: str) -> ModelFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        known = ", ".join(sorted(FAMILIES))
        raise ConfigError(f"unknown model family {name!r}; known families: {known}") from None
