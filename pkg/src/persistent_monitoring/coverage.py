"""Coverage sets F(q): path parameters at which a footprint covers a point.

A coverage set is a union of disjoint circular intervals on [0, 1).  An
interval that runs through theta = 1 -> 0 is stored unsplit with ``x > y``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .task_model import PathSpec, PersistentTask

log = logging.getLogger(__name__)

BISECTION_TOL = 1e-6


class EmptyCoverage(ValueError):
    """The point is never inside the footprint."""


class FullCircle(ValueError):
    """The point is covered from every path position; there are no endpoints."""


def arc_length(a, b):
    """Length of the forward arc a -> b on the unit circle (0 if a == b)."""
    return (b - a) % 1.0


@dataclass(frozen=True)
class CoverageSet:
    intervals: tuple = ()
    full: bool = False

    def __post_init__(self):
        iv = tuple(sorted((float(x) % 1.0, float(y) % 1.0) for x, y in self.intervals))
        object.__setattr__(self, "intervals", iv)

    @property
    def empty(self):
        return not self.full and len(self.intervals) == 0

    @property
    def n_intervals(self):
        return len(self.intervals)

    @property
    def measures(self):
        return np.array([arc_length(x, y) for x, y in self.intervals])

    @property
    def measure(self):
        if self.full:
            return 1.0
        return float(self.measures.sum())

    def contains(self, theta):
        th = np.mod(np.asarray(theta, dtype=float), 1.0)
        if self.full:
            return np.ones(th.shape, dtype=bool)
        out = np.zeros(th.shape, dtype=bool)
        for x, y in self.intervals:
            if x <= y:
                out |= (th >= x) & (th <= y)
            else:
                out |= (th >= x) | (th <= y)
        return out

    def violations(self):
        out = []
        ell = len(self.intervals)
        if ell:
            # intervals and the gaps between them must tile the circle exactly once
            total = sum(
                arc_length(x, y) + arc_length(y, self.intervals[(k + 1) % ell][0])
                for k, (x, y) in enumerate(self.intervals)
            )
            if abs(total - 1.0) > 1e-9:
                out.append("intervals are not disjoint in circular order")
            if any(x == y for x, y in self.intervals):
                out.append("degenerate zero-length interval")
        if not 0.0 <= self.measure <= 1.0 + 1e-12:
            out.append("total measure outside [0, 1]")
        return out


def decompose(cov: CoverageSet):
    """Endpoint arrays (x_1..x_l, y_1..y_l) in circular order.

    Raises
    ------
    FullCircle
        When the point is always covered.
    EmptyCoverage
        When the point is never covered.
    """
    if cov.full:
        raise FullCircle("coverage is the whole path")
    if cov.empty:
        raise EmptyCoverage("coverage set is empty")
    x = np.array([a for a, _ in cov.intervals])
    y = np.array([b for _, b in cov.intervals])
    return x, y


def point_in_footprint(footprint, pose, q) -> bool:
    """True iff ``q`` lies in ``footprint`` placed at ``pose = (x, y, heading)``."""
    x, y, h = pose
    return bool(footprint.contains(np.array([x, y]), h, np.asarray(q, dtype=float)))


def _membership(path, footprint, thetas, q):
    pos = path.position(thetas)
    return footprint.contains(pos, path.heading(thetas), q)


def coverage_sets(path: PathSpec, footprint, points, samples: int, tol=BISECTION_TOL):
    """Coverage sets for many points on one path (vectorized over points).

    The path is sampled at ``theta_i = i / samples``.  Each change of
    membership between neighbouring samples is refined by bisection until the
    bracket is below ``tol``; the bracket midpoint becomes the endpoint.
    """
    Q = np.atleast_2d(np.asarray(points, dtype=float))
    m = len(Q)
    if samples < 2:
        raise ValueError("samples must be >= 2")
    spacing = path.length / samples
    if 2 * footprint.extent() < 5 * spacing:
        warnings.warn(
            f"footprint diameter {2 * footprint.extent():.3g} m is not much larger than the "
            f"sample spacing {spacing:.3g} m; coverage may miss short intervals",
            stacklevel=2,
        )
    thetas = np.arange(samples) / samples
    pos = path.position(thetas)
    head = path.heading(thetas)
    inside = np.empty((m, samples), dtype=bool)
    chunk = max(1, 2_000_000 // samples)
    for s in range(0, m, chunk):
        qq = Q[s : s + chunk, None, :]
        inside[s : s + chunk] = footprint.contains(pos[None], head[None], qq)

    # transitions between sample i and i+1 (circular)
    nxt = np.roll(inside, -1, axis=1)
    rise_i, rise_s = np.nonzero(~inside & nxt)  # entering: endpoint x
    fall_i, fall_s = np.nonzero(inside & ~nxt)  # leaving: endpoint y

    def refine(pt_idx, s_idx, entering):
        lo = thetas[s_idx].copy()
        hi = lo + 1.0 / samples
        q = Q[pt_idx]
        while np.any(hi - lo > tol):
            mid = 0.5 * (lo + hi)
            inn = _membership(path, footprint, mid, q)
            # entering: lo outside, hi inside; leaving: the reverse
            move_lo = inn != entering
            lo = np.where(move_lo, mid, lo)
            hi = np.where(move_lo, hi, mid)
        return np.mod(0.5 * (lo + hi), 1.0)

    xs = refine(rise_i, rise_s, True) if len(rise_i) else np.zeros(0)
    ys = refine(fall_i, fall_s, False) if len(fall_i) else np.zeros(0)

    out = []
    for i in range(m):
        if inside[i].all():
            out.append(CoverageSet(full=True))
            continue
        xi = np.sort(xs[rise_i == i])
        yi = np.sort(ys[fall_i == i])
        if len(xi) == 0:
            out.append(CoverageSet())
            continue
        # pair each x with the first y after it, circularly
        pairs = []
        for x in xi:
            d = np.mod(yi - x, 1.0)
            pairs.append((x, yi[np.argmin(d)]))
        out.append(CoverageSet(tuple(pairs)))
    return out


def compute_coverage_set(path, footprint, q, samples: int, tol=BISECTION_TOL) -> CoverageSet:
    """Coverage set of a single point; see :func:`coverage_sets`."""
    cov = coverage_sets(path, footprint, [q], samples, tol)[0]
    if cov.empty:
        log.info("point %s is never covered", tuple(q))
    return cov


def cell_overlap(a, b, n):
    """|cell_j intersect arc(a -> b)| for the n rectangular cells.

    The arc runs forward from ``a`` to ``b`` and wraps through 1 -> 0 when
    ``b < a``.
    """
    lo = np.arange(n) / n
    hi = np.arange(1, n + 1) / n

    def seg(u, v):
        return np.clip(np.minimum(v, hi) - np.maximum(u, lo), 0.0, None)

    if b >= a:
        return seg(a, b)
    return seg(a, 1.0) + seg(0.0, b)


@dataclass(frozen=True)
class Segments:
    """Per-cell overlaps of the covered intervals and the gaps after them.

    Row ``k`` of ``covered`` is |cell_j intersect [x_k, y_k]|; row ``k`` of
    ``gap`` is |cell_j intersect [y_k, x_{k+1}]| (indices modulo l).
    """

    covered: np.ndarray
    gap: np.ndarray
    full: bool
    empty: bool

    @property
    def n_intervals(self):
        return len(self.covered)

    @property
    def total(self):
        n = self.covered.shape[1]
        if self.full:
            return np.full(n, 1.0 / n)
        return self.covered.sum(axis=0)


def segments(cov: CoverageSet, n: int) -> Segments:
    if cov.full or cov.empty:
        z = np.zeros((0, n))
        return Segments(z, z, cov.full, cov.empty)
    x, y = decompose(cov)
    ell = len(x)
    covered = np.array([cell_overlap(x[k], y[k], n) for k in range(ell)])
    gap = np.array([cell_overlap(y[k], x[(k + 1) % ell], n) for k in range(ell)])
    return Segments(covered, gap, False, False)


@dataclass(frozen=True, eq=False)
class CoveredTask:
    """Analysis-ready task: coverage per (robot, point), rates and alpha bounds.

    ``alpha_lo[r]`` / ``alpha_hi[r]`` are the per-cell reciprocal speed bounds
    ``1/v_max(j)`` and ``1/v_min(j)`` in seconds per unit theta.
    """

    coverage: tuple
    production: np.ndarray
    consumption: tuple
    alpha_lo: tuple
    alpha_hi: tuple
    lengths: tuple = ()
    positions: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "coverage", tuple(tuple(c) for c in self.coverage))
        object.__setattr__(self, "production", np.asarray(self.production, dtype=float))
        object.__setattr__(
            self, "consumption", tuple(np.asarray(c, dtype=float) for c in self.consumption)
        )
        object.__setattr__(self, "alpha_lo", tuple(np.asarray(a, dtype=float) for a in self.alpha_lo))
        object.__setattr__(self, "alpha_hi", tuple(np.asarray(a, dtype=float) for a in self.alpha_hi))
        if not self.lengths:
            object.__setattr__(self, "lengths", (1.0,) * len(self.coverage))

    @property
    def n_robots(self):
        return len(self.coverage)

    @property
    def n_points(self):
        return len(self.production)

    @property
    def basis_sizes(self):
        return tuple(len(a) for a in self.alpha_lo)

    @cached_property
    def _segments(self):
        return [
            [segments(cov, len(self.alpha_lo[r])) for cov in self.coverage[r]]
            for r in range(self.n_robots)
        ]

    def segments(self, r, i) -> Segments:
        return self._segments[r][i]

    def overlap_matrix(self, r=0):
        """Rows: points; columns: |cell_j intersect F_r(q_i)|."""
        return np.array([s.total for s in self._segments[r]])

    @classmethod
    def from_intervals(cls, intervals, production, consumption, alpha_lo, alpha_hi):
        """Build a task directly from coverage intervals (no geometry).

        ``intervals[r][i]`` is either the string ``"full"`` or a sequence of
        ``(x, y)`` pairs.  Scalars in ``alpha_lo`` / ``alpha_hi`` are not
        accepted; pass one array per robot.
        """
        cov = []
        for per_robot in intervals:
            row = []
            for iv in per_robot:
                row.append(CoverageSet(full=True) if iv == "full" else CoverageSet(tuple(iv)))
            cov.append(row)
        return cls(tuple(cov), production, tuple(consumption), tuple(alpha_lo), tuple(alpha_hi))


def prepare(task: PersistentTask, samples=None, tol=BISECTION_TOL) -> CoveredTask:
    """Compute coverage for every (robot, point) and convert speed limits.

    ``samples`` defaults to ``10 * n_r`` path samples for robot ``r``.
    """
    Q = np.array([pt.position for pt in task.points], dtype=float)
    cov, lo, hi = [], [], []
    for r, (robot, path) in enumerate(zip(task.robots, task.paths)):
        n = task.basis_sizes[r]
        s = samples if samples is not None else 10 * n
        if s < n:
            raise ValueError(f"samples ({s}) must be >= basis size ({n})")
        cov.append(coverage_sets(path, robot.footprint, Q, s, tol))
        vmin, vmax = robot.speed_limits(n)
        # normalized speed v/L, reciprocal bounds in seconds per unit theta
        lo.append(path.length / vmax)
        hi.append(path.length / vmin)
    return CoveredTask(
        tuple(cov),
        task.production,
        tuple(task.consumption(r) for r in range(task.n_robots)),
        tuple(lo),
        tuple(hi),
        lengths=tuple(p.length for p in task.paths),
        positions=Q,
    )
