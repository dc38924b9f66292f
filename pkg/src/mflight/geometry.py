"""Bezier airfoil geometry: design-vector decoding, surface sampling, validity checks.

An airfoil is built from two quartic Bezier curves (upper and lower surface)
that share fixed endpoints at the leading edge (0, 0) and trailing edge (1, 0).
Each curve has three free control points, giving 12 free coordinates; a
leading-edge radius makes 13. Actions arrive as normalized values in [-1, 1]
and are mapped affinely onto configurable geometric ranges.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, InvalidAction

N_DESIGN_VARS = 13

# Index layout of the 13-entry design vector:
#   0..5   upper control points, LE to TE, as (x1, y1, x2, y2, x3, y3)
#   6..11  lower control points, same layout
#   12     leading-edge radius
_UPPER = slice(0, 6)
_LOWER = slice(6, 12)
_RADIUS = 12


def _default_lo() -> np.ndarray:
    # x ranges are staggered thirds of [0.05, 0.95] so decoded x stays ordered
    # for any action, keeping each surface a single-valued curve.
    return np.array(
        [0.05, 0.0, 0.35, 0.0, 0.65, 0.0,
         0.05, -0.25, 0.35, -0.25, 0.65, -0.25,
         0.002],
        dtype=float,
    )


def _default_hi() -> np.ndarray:
    return np.array(
        [0.35, 0.25, 0.65, 0.25, 0.95, 0.25,
         0.35, 0.0, 0.65, 0.0, 0.95, 0.0,
         0.05],
        dtype=float,
    )


@dataclass(frozen=True)
class GeometryBounds:
    """Per-coordinate geometric ranges for the affine action decoding."""

    lo: np.ndarray = field(default_factory=_default_lo)
    hi: np.ndarray = field(default_factory=_default_hi)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != (N_DESIGN_VARS,) or hi.shape != (N_DESIGN_VARS,):
            raise ConfigError("geometry bounds must have 13 entries each")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ConfigError("geometry bounds must be finite")
        if not (lo < hi).all():
            raise ConfigError("geometry bounds require lo < hi per coordinate")
        if lo[_RADIUS] <= 0:
            raise ConfigError("leading-edge radius range must be positive")


@dataclass(frozen=True)
class DesignVector:
    """Normalized 13-entry action, every entry finite and in [-1, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (N_DESIGN_VARS,):
            raise InvalidAction(
                f"design vector must have {N_DESIGN_VARS} entries, got shape {values.shape}"
            )
        if not np.isfinite(values).all():
            raise InvalidAction("design vector contains non-finite entries")
        if (np.abs(values) > 1.0).any():
            worst = float(np.abs(values).max())
            raise InvalidAction(f"design vector entry out of [-1, 1] (max |v| = {worst})")


@dataclass(frozen=True)
class ControlPolygon:
    """Free Bezier control points plus the leading-edge radius.

    Endpoints are fixed at LE = (0, 0) and TE = (1, 0) and are not stored.
    ``upper`` and ``lower`` are (3, 2) arrays ordered LE to TE.
    """

    upper: np.ndarray
    lower: np.ndarray
    leading_edge_radius: float

    LE = (0.0, 0.0)
    TE = (1.0, 0.0)

    def __post_init__(self):
        upper = np.asarray(self.upper, dtype=float)
        lower = np.asarray(self.lower, dtype=float)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)
        if upper.shape != (3, 2) or lower.shape != (3, 2):
            raise ConfigError("control polygon needs 3 upper and 3 lower points")
        for pts in (upper, lower):
            if not np.isfinite(pts).all():
                raise ConfigError("control points must be finite")
            if (pts[:, 0] < 0.0).any() or (pts[:, 0] > 1.0).any():
                raise ConfigError("control point x-coordinates must lie in [0, 1]")
        if not (np.isfinite(self.leading_edge_radius) and self.leading_edge_radius > 0):
            raise ConfigError("leading-edge radius must be positive")

    def upper_curve(self) -> np.ndarray:
        """Full 5-point control sequence for the upper surface."""
        return np.vstack([self.LE, self.upper, self.TE])

    def lower_curve(self) -> np.ndarray:
        return np.vstack([self.LE, self.lower, self.TE])


@dataclass
class AirfoilShape:
    """Closed discrete surface polyline.

    ``points`` runs trailing edge -> lower surface -> leading edge -> upper
    surface -> trailing edge, first point equal to the last. ``valid`` is
    False for self-intersecting or non-positive-thickness shapes; such shapes
    are a normal outcome and are penalized upstream, never raised on.
    """

    points: np.ndarray
    valid: bool
    thickness_min: float
    thickness_max: float


def decode(design, bounds: GeometryBounds) -> ControlPolygon:
    """Map a normalized design vector onto its geometric ranges.

    Each entry v in [-1, 1] goes to lo + (v + 1)/2 * (hi - lo).
    """
    if not isinstance(design, DesignVector):
        design = DesignVector(np.asarray(design, dtype=float))
    g = bounds.lo + 0.5 * (design.values + 1.0) * (bounds.hi - bounds.lo)
    return ControlPolygon(
        upper=g[_UPPER].reshape(3, 2),
        lower=g[_LOWER].reshape(3, 2),
        leading_edge_radius=float(g[_RADIUS]),
    )


def encode(polygon: ControlPolygon, bounds: GeometryBounds) -> np.ndarray:
    """Inverse of :func:`decode`: recover the normalized design vector."""
    g = np.empty(N_DESIGN_VARS)
    g[_UPPER] = polygon.upper.ravel()
    g[_LOWER] = polygon.lower.ravel()
    g[_RADIUS] = polygon.leading_edge_radius
    return 2.0 * (g - bounds.lo) / (bounds.hi - bounds.lo) - 1.0


def bezier_eval(ctrl, t):
    """Evaluate a Bezier curve in Bernstein form.

    ``ctrl`` is an (n+1, 2) array of control points, ``t`` a scalar or array
    in [0, 1]. Returns points of shape (2,) or (len(t), 2).
    """
    ctrl = np.asarray(ctrl, dtype=float)
    if ctrl.ndim != 2 or ctrl.shape[0] < 2:
        raise DomainError("bezier_eval needs at least 2 control points")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if (t_arr < 0.0).any() or (t_arr > 1.0).any():
        raise DomainError("bezier parameter t must lie in [0, 1]")
    n = ctrl.shape[0] - 1
    i = np.arange(n + 1)
    coef = np.array([math.comb(n, k) for k in i], dtype=float)
    # basis[j, i] = C(n,i) t_j^i (1-t_j)^(n-i); 0**0 == 1 keeps endpoints exact
    basis = coef * t_arr[:, None] ** i * (1.0 - t_arr[:, None]) ** (n - i)
    out = basis @ ctrl
    return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out


def _cosine_params(n: int) -> np.ndarray:
    """n parameters in [0, 1] clustered toward both ends."""
    return 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, n)))


def _blend_nose_arc(pts: np.ndarray, radius: float, blend_fraction: float, side: float) -> np.ndarray:
    """Blend the first part of a surface toward a nose circle of given radius.

    The circle is tangent to the chord normal at the leading edge (center at
    (radius, 0)). Points within ``s_b = min(blend_fraction, 1.5 * radius)`` of
    arc length from the LE are pulled toward the circle with a smoothstep
    weight that decays to zero at s_b. ``side`` is +1 for upper, -1 for lower.
    """
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    s_b = min(blend_fraction, 1.5 * radius)
    out = pts.copy()
    inside = (s > 0.0) & (s < s_b)
    if not inside.any():
        return out
    si = s[inside]
    phi = si / radius
    circle = np.column_stack([radius * (1.0 - np.cos(phi)), side * radius * np.sin(phi)])
    u = si / s_b
    w = 1.0 - u * u * (3.0 - 2.0 * u)
    out[inside] = w[:, None] * circle + (1.0 - w[:, None]) * pts[inside]
    return out


def _segments_cross(points: np.ndarray) -> bool:
    """Vectorized proper-intersection test over all non-adjacent segment pairs."""
    p = points[:-1]
    q = points[1:]
    n = len(p)
    d = q - p

    def cross(o, a, b):
        # (a - o) x (b - o) for broadcastable stacks of points
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (
            a[..., 1] - o[..., 1]
        ) * (b[..., 0] - o[..., 0])

    pi = p[:, None, :]
    qi = q[:, None, :]
    pj = p[None, :, :]
    qj = q[None, :, :]
    d1 = cross(pi, qi, pj)
    d2 = cross(pi, qi, qj)
    d3 = cross(pj, qj, pi)
    d4 = cross(pj, qj, qi)
    proper = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)
    idx = np.arange(n)
    adjacent = np.abs(idx[:, None] - idx[None, :]) <= 1
    # first and last segments share the closing node of the polyline
    adjacent[0, n - 1] = adjacent[n - 1, 0] = True
    return bool((proper & ~adjacent).any())


def build_airfoil(polygon: ControlPolygon, n_points: int, blend_fraction: float = 0.02) -> AirfoilShape:
    """Sample the control polygon into a closed surface polyline.

    Each surface gets n_points/2 cosine-clustered stations; the nose is blended
    toward a circle of the polygon's leading-edge radius. Degenerate geometry
    (crossed surfaces, self-intersection) is reported via ``valid``, never
    raised.
    """
    if n_points < 40 or n_points % 2 != 0:
        raise ConfigError("n_points must be an even number >= 40")
    m = n_points // 2
    t = _cosine_params(m)
    upper = bezier_eval(polygon.upper_curve(), t)
    lower = bezier_eval(polygon.lower_curve(), t)
    r = polygon.leading_edge_radius
    upper = _blend_nose_arc(upper, r, blend_fraction, +1.0)
    lower = _blend_nose_arc(lower, r, blend_fraction, -1.0)

    # TE -> lower -> LE -> upper -> TE; endpoints are exact so the loop closes
    points = np.vstack([lower[::-1], upper[1:]])

    valid = bool(np.isfinite(points).all())
    thickness_min = 0.0
    thickness_max = 0.0
    xu, xl = upper[:, 0], lower[:, 0]
    monotone = (np.diff(xu) > 0).all() and (np.diff(xl) > 0).all()
    if valid and monotone:
        x_lo = max(xu[0], xl[0])
        x_hi = min(xu[-1], xl[-1])
        stations = np.linspace(x_lo, x_hi, 201)[1:-1]
        gap = np.interp(stations, xu, upper[:, 1]) - np.interp(stations, xl, lower[:, 1])
        thickness_min = float(gap.min())
        thickness_max = float(gap.max())
        if thickness_min <= 0.0:
            valid = False
    else:
        valid = False

    if valid and _segments_cross(points):
        valid = False

    return AirfoilShape(points=points, valid=valid,
                        thickness_min=thickness_min, thickness_max=thickness_max)


def selig_points(shape: AirfoilShape) -> np.ndarray:
    """Surface points in Selig order: TE -> upper -> LE -> lower -> TE."""
    return shape.points[::-1]


def write_selig(shape: AirfoilShape, path) -> None:
    """Write a two-column (x, y) coordinate file, one point per line.

    Written atomically (complete or absent).
    """
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        for x, y in selig_points(shape):
            fh.write(f"{float(x)!r} {float(y)!r}\n")
    os.replace(tmp, path)


def read_selig(path) -> np.ndarray:
    return np.loadtxt(path, dtype=float)
