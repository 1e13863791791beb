"""Domain types for persistent-task instances.

Speeds given by the user are physical (m/s).  Everything downstream works in
the normalized arc-length parameter ``theta`` in [0, 1), so a physical speed
``v`` becomes ``v / L`` with ``L`` the path length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


class PathSpec:
    """Closed polyline with a normalized arc-length parametrization.

    Parameters
    ----------
    vertices : array_like, shape (k, 2)
        Polyline vertices in meters.  The curve is closed automatically if
        the last vertex differs from the first.
    """

    def __init__(self, vertices):
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("path vertices must have shape (k, 2) with k >= 2")
        if not np.allclose(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[:1]])
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        keep = np.concatenate([[True], seglen > 0])
        pts = pts[keep]
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        self.vertices = pts
        self.length = float(seglen.sum())
        if self.length > 0:
            self.cumulative = np.concatenate([[0.0], np.cumsum(seglen)]) / self.length
            self.cumulative[-1] = 1.0
        else:
            self.cumulative = np.zeros(len(pts))
        self._headings = np.arctan2(seg[:, 1], seg[:, 0]) if len(seg) else np.zeros(0)

    def __repr__(self):
        return f"PathSpec({len(self.vertices) - 1} segments, length={self.length:.3f})"

    def position(self, theta):
        """Position(s) on the path at normalized arc length ``theta``."""
        th = np.mod(np.asarray(theta, dtype=float), 1.0)
        x = np.interp(th, self.cumulative, self.vertices[:, 0])
        y = np.interp(th, self.cumulative, self.vertices[:, 1])
        return np.stack([x, y], axis=-1)

    def heading(self, theta):
        """Tangent heading (rad) of the segment containing ``theta``."""
        th = np.mod(np.asarray(theta, dtype=float), 1.0)
        idx = np.searchsorted(self.cumulative, th, side="right") - 1
        idx = np.clip(idx, 0, len(self._headings) - 1)
        return self._headings[idx]

    def violations(self):
        out = []
        if not np.allclose(self.vertices[0], self.vertices[-1]):
            out.append("path: first and last vertex must coincide")
        if not self.length > 0:
            out.append("path: length must be > 0")
        if len(self.cumulative) > 1 and not np.all(np.diff(self.cumulative) > 0):
            out.append("path: cumulative arc length must be strictly increasing")
        return out


@dataclass(frozen=True)
class DiskFootprint:
    radius: float

    def contains(self, positions, headings, q):
        """Vectorized membership test; all arguments broadcast along axis 0."""
        d = np.asarray(q, dtype=float) - np.asarray(positions, dtype=float)
        return np.hypot(d[..., 0], d[..., 1]) <= self.radius

    def violations(self):
        if not self.radius > 0:
            return ["footprint: radius must be > 0"]
        return []

    def extent(self):
        return float(self.radius)


@dataclass(frozen=True)
class PolygonFootprint:
    """Polygon in the body frame (x forward along the path heading)."""

    vertices: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", tuple(tuple(map(float, v)) for v in self.vertices)
        )

    def contains(self, positions, headings, q):
        d = np.asarray(q, dtype=float) - np.asarray(positions, dtype=float)
        h = np.asarray(headings, dtype=float)
        ch, sh = np.cos(h), np.sin(h)
        # rotate world offset into the body frame
        bx = ch * d[..., 0] + sh * d[..., 1]
        by = -sh * d[..., 0] + ch * d[..., 1]
        return points_in_polygon(np.array(self.vertices), bx, by)

    def violations(self):
        v = np.array(self.vertices)
        if len(v) < 3:
            return ["footprint: polygon needs at least 3 vertices"]
        if not polygon_is_simple(v):
            return ["footprint: polygon must be simple (non-self-intersecting)"]
        return []

    def extent(self):
        return float(np.max(np.hypot(*np.array(self.vertices).T)))


Footprint = Union[DiskFootprint, PolygonFootprint]


def points_in_polygon(poly, x, y):
    """Even-odd ray casting for many query points against one polygon."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    k = len(poly)
    for i in range(k):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % k]
        crosses = (y1 > y) != (y2 > y)
        if y2 != y1:
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xint)
    return inside


def _segments_intersect(p1, p2, p3, p4):
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def polygon_is_simple(poly) -> bool:
    k = len(poly)
    for i in range(k):
        for j in range(i + 1, k):
            if abs(i - j) <= 1 or (i == 0 and j == k - 1):
                continue
            if _segments_intersect(poly[i], poly[(i + 1) % k], poly[j], poly[(j + 1) % k]):
                return False
    return True


def collapse_speed_table(breakpoints, values, n, kind):
    """Reduce a piecewise-constant speed table to per-cell limits.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])`` (the last
    entry runs to 1).  For ``kind="max"`` the cell limit is the infimum over
    the cell, for ``kind="min"`` the supremum, so the per-cell limits are
    never looser than the table.
    """
    bp = np.asarray(breakpoints, dtype=float)
    vals = np.asarray(values, dtype=float)
    if bp.shape != vals.shape or bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
        raise ValueError("breakpoints must start at 0, increase, and match values")
    reduce = {"max": np.min, "min": np.max}[kind]
    ends = np.append(bp[1:], 1.0)
    out = np.empty(n)
    for j in range(n):
        lo, hi = j / n, (j + 1) / n
        hit = (bp < hi) & (ends > lo)
        out[j] = reduce(vals[hit])
    return out


@dataclass(frozen=True)
class RobotModel:
    """Footprint, physical speed limits (m/s) and optional per-point consumption.

    ``v_min`` / ``v_max`` are scalars or per-basis-cell arrays.
    ``consumption`` (field units/s) is used for multi-robot tasks; single
    robot tasks fall back to each point's own consumption rate.
    """

    footprint: Footprint
    v_min: Union[float, Sequence[float]]
    v_max: Union[float, Sequence[float]]
    consumption: Union[None, float, Sequence[float]] = None

    def speed_limits(self, n):
        lo = np.broadcast_to(np.asarray(self.v_min, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.v_max, dtype=float), (n,)).copy()
        return lo, hi


@dataclass(frozen=True)
class InterestPoint:
    position: tuple
    production: float
    consumption: float = float("nan")


@dataclass(frozen=True)
class PersistentTask:
    robots: tuple
    paths: tuple
    points: tuple
    basis_sizes: tuple = field(default=())

    def __post_init__(self):
        for name in ("robots", "paths", "points", "basis_sizes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def n_robots(self):
        return len(self.robots)

    @property
    def production(self):
        return np.array([pt.production for pt in self.points], dtype=float)

    def consumption(self, r):
        """Per-point consumption rate for robot ``r``."""
        m = len(self.points)
        c = self.robots[r].consumption
        if c is None:
            return np.array([pt.consumption for pt in self.points], dtype=float)
        return np.broadcast_to(np.asarray(c, dtype=float), (m,)).copy()


def validate(task: PersistentTask) -> list:
    """Return a list of invariant violations; empty iff the task is well formed."""
    out = []
    N = len(task.robots)
    if N < 1:
        out.append("robots: at least one robot required")
    if len(task.paths) != N:
        out.append(f"paths: length mismatch ({len(task.paths)} paths for {N} robots)")
    if len(task.basis_sizes) != N:
        out.append(
            f"basis_sizes: length mismatch ({len(task.basis_sizes)} sizes for {N} robots)"
        )
    if len(task.points) < 1:
        out.append("points: at least one interest point required")

    for r, path in enumerate(task.paths):
        out += [f"paths[{r}]: {v}" for v in path.violations()]

    for r, robot in enumerate(task.robots):
        out += [f"robots[{r}].{v}" for v in robot.footprint.violations()]
        n = task.basis_sizes[r] if r < len(task.basis_sizes) else 1
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            out.append(f"basis_sizes[{r}]: must be an integer >= 1")
            continue
        try:
            lo, hi = robot.speed_limits(n)
        except ValueError:
            out.append(f"robots[{r}].v_min/v_max: need a scalar or {n} per-cell values")
            continue
        if not np.all(lo > 0):
            out.append(f"robots[{r}].v_min: 0 < v_min(j) violated")
        if not np.all(lo <= hi):
            out.append(f"robots[{r}].v_min/v_max: v_min(j) <= v_max(j) violated")
        if robot.consumption is not None:
            c = np.asarray(robot.consumption, dtype=float)
            if c.ndim > 0 and c.shape != (len(task.points),):
                out.append(f"robots[{r}].consumption: one value per point required")
            elif np.any(c < 0):
                out.append(f"robots[{r}].consumption: must be >= 0")

    single_c = None
    if N == 1:
        try:
            single_c = task.consumption(0)
        except ValueError:
            pass
    for i, pt in enumerate(task.points):
        p = pt.production
        if single_c is not None:
            c = single_c[i]
            if not (c > p > 0):
                out.append(f"points[{i}]: c > p > 0 violated (p={p}, c={c})")
        elif not p > 0:
            out.append(f"points[{i}]: p > 0 violated (p={p})")
    return out
