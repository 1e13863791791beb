"""Closed-form steady state of a single-robot periodic controller.

For a stabilizing controller the field at every point settles, in finite
time, onto a profile that depends only on the robot position.  Within a
covered interval it falls at rate ``(c - p) / v`` (never below zero) and
within a gap it rises at rate ``p / v``; so the profile is fixed by its
values at the interval ends ``y_k``, which have a closed form as the largest
net change accumulated backwards over whole interval-plus-gap blocks.

Interval indices below are 0-based and taken modulo the number of
intervals ``l``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .controller import ReciprocalProfile, cycle_time
from .coverage import Segments, decompose


class DivergentFieldError(ArithmeticError):
    """The controller does not stabilize the point; no steady state exists."""

    def __init__(self, point, growth_per_cycle):
        self.point = point
        self.growth_per_cycle = growth_per_cycle
        super().__init__(
            f"point {point}: field grows by {growth_per_cycle:.6g} per cycle (no steady state)"
        )


def reduction_table(seg: Segments, p, c):
    """Coefficients of the net change from ``y_{k-b}`` to ``y_k``.

    Returns an array of shape ``(l, l + 1, n)``; entry ``[k, b]`` dotted with
    the per-cell reciprocal speeds gives
    ``p * time(y_{k-b} -> y_k) - c * sum_{w<b} time(x_{k-w} -> y_{k-w})``.
    ``b = 0`` is identically zero and ``b = l`` is a full cycle.
    """
    ell, n = seg.covered.shape
    out = np.zeros((ell, ell + 1, n))
    for k in range(ell):
        for b in range(1, ell + 1):
            w = b - 1
            block = p * seg.gap[(k - w - 1) % ell] + (p - c) * seg.covered[(k - w) % ell]
            out[k, b] = out[k, b - 1] + block
    return out


def peak_table(seg: Segments, p, c):
    """Coefficients of the candidate peaks ``X_{k,b}``, shape ``(l, l, n)``.

    ``X_{k,b} = N_{k-b,k} + p * time(y_k -> x_{k+1})``: the value reached at
    the start of the next covered interval when the field was last zero at
    ``y_{k-b}``.
    """
    red = reduction_table(seg, p, c)[:, :-1, :]
    return red + p * seg.gap[:, None, :]


def _point(data, i, robot=0):
    seg = data.segments(robot, i)
    return seg, data.production[i], data.consumption[robot][i]


def growth_per_cycle(data, i, profile: ReciprocalProfile, robot=0):
    """``p T - c tau`` for point ``i``: the per-cycle change while the field stays positive."""
    seg, p, c = _point(data, i, robot)
    a = profile.cell_inverse_speed()
    if seg.full:
        return (p - c) * cycle_time(profile)
    return float(p * a.mean() - c * (seg.covered.sum(axis=0) @ a))


def _check_stable(data, i, profile, robot):
    g = growth_per_cycle(data, i, profile, robot)
    if g >= 0:
        raise DivergentFieldError(i, g)


def reduction(data, i, k, b, profile: ReciprocalProfile, robot=0):
    """Net field change ``N_{k-b,k}`` between the ends of intervals ``k-b`` and ``k``."""
    seg, p, c = _point(data, i, robot)
    if seg.full or seg.empty:
        raise ValueError("reduction needs a point with interval endpoints")
    ell = seg.n_intervals
    if not 0 <= b <= ell:
        raise ValueError(f"b must lie in 0..{ell}")
    return float(reduction_table(seg, p, c)[k % ell, b] @ profile.cell_inverse_speed())


def endpoint_values(data, i, profile: ReciprocalProfile, robot=0):
    """Steady-state field at each interval end ``y_k``.

    Raises
    ------
    DivergentFieldError
        If the profile does not stabilize point ``i``.
    """
    seg, p, c = _point(data, i, robot)
    _check_stable(data, i, profile, robot)
    if seg.full:
        return np.zeros(0)
    red = reduction_table(seg, p, c)[:, :-1, :] @ profile.cell_inverse_speed()
    return red.max(axis=1)


def peak_field(data, i, profile: ReciprocalProfile, robot=0):
    """Largest steady-state field at point ``i`` and the ``theta`` where it occurs."""
    seg, p, c = _point(data, i, robot)
    _check_stable(data, i, profile, robot)
    if seg.full:
        return 0.0, 0.0
    X = peak_table(seg, p, c) @ profile.cell_inverse_speed()
    k, _ = np.unravel_index(np.argmax(X), X.shape)
    x, _ = decompose(data.coverage[robot][i])
    return float(X.max()), float(x[(k + 1) % len(x)])


def peak_field_all(data, profile: ReciprocalProfile, robot=0):
    """``(H, per_point)``: worst steady-state field over all points."""
    per = np.array([peak_field(data, i, profile, robot)[0] for i in range(data.n_points)])
    return float(per.max()), per


def peak_field_batch(data, alphas, robot=0):
    """Vectorized steady-state peak for many candidate profiles.

    ``alphas`` has shape ``(K, n)`` (per-cell reciprocal speeds).  Returns
    ``(H, stable)`` with ``H = inf`` for profiles that are not stabilizing.
    """
    A = np.atleast_2d(np.asarray(alphas, dtype=float))
    H = np.zeros(len(A))
    stable = np.ones(len(A), dtype=bool)
    for i in range(data.n_points):
        seg, p, c = _point(data, i, robot)
        if seg.full:
            continue
        if seg.empty:
            stable[:] = False
            continue
        g = p * A.mean(axis=1) - c * (A @ seg.covered.sum(axis=0))
        stable &= g < 0
        X = peak_table(seg, p, c).reshape(-1, A.shape[1])
        H = np.maximum(H, (A @ X.T).max(axis=1))
    return np.where(stable, H, np.inf), stable


def field_profile(data, i, profile: ReciprocalProfile, resolution=200, robot=0):
    """Steady-state field as a function of robot position over one cycle.

    The curve is piecewise linear in ``theta``; the returned samples contain
    every breakpoint (cell edges, interval ends, zero crossings) plus a
    uniform grid of ``resolution`` points, sorted by ``theta`` in [0, 1).
    """
    seg, p, c = _point(data, i, robot)
    _check_stable(data, i, profile, robot)
    cov = data.coverage[robot][i]
    grid = np.arange(resolution) / resolution
    if seg.full:
        th = np.union1d(grid, [0.0])
        return th, np.zeros_like(th)

    inv = profile.cell_inverse_speed()
    n = len(inv)
    x, y = decompose(cov)
    zy = endpoint_values(data, i, profile, robot)
    k0 = int(np.argmin(zy))
    start = y[k0]
    # breakpoints in unwrapped coordinates starting at the zero anchor
    edges = np.arange(n + 1) / n
    cuts = np.concatenate([edges, edges + 1, x, y, x + 1, y + 1])
    cuts = np.unique(cuts[(cuts > start) & (cuts < start + 1)])
    pts = np.concatenate([[start], cuts, [start + 1]])
    theta_out, z_out = [start], [0.0]
    z = 0.0
    for u, v in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (u + v)
        rate = inv[min(int((mid % 1.0) * n), n - 1)]
        covered = bool(cov.contains(mid % 1.0))
        dz = (p - c if covered else p) * rate * (v - u)
        if covered and z + dz < 0:
            hit = u + z / ((c - p) * rate)
            if hit < v:
                theta_out.append(hit)
                z_out.append(0.0)
            z = 0.0
        else:
            z = z + dz
        theta_out.append(v)
        z_out.append(z)
    th = np.array(theta_out[:-1])
    zz = np.array(z_out[:-1])
    # closing the loop must return to the anchor value
    zz = np.maximum(zz, 0.0)
    wrapped = np.mod(th, 1.0)
    order = np.argsort(wrapped, kind="stable")
    wrapped, zz = wrapped[order], zz[order]
    extra = np.setdiff1d(grid, wrapped)
    ext = np.concatenate([wrapped, [wrapped[0] + 1.0]])
    zext = np.concatenate([zz, [zz[0]]])
    zg = np.interp(extra, ext, zext, period=None)
    th_all = np.concatenate([wrapped, extra])
    z_all = np.concatenate([zz, zg])
    order = np.argsort(th_all, kind="stable")
    return th_all[order], z_all[order]


@dataclass
class SteadyStateProfile:
    point: int
    stable: bool
    peak: float = float("inf")
    peak_theta: float = float("nan")
    endpoint_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    growth_per_cycle: float = 0.0


def analyze(data, profile: ReciprocalProfile, robot=0):
    """Steady-state summary for every point; divergent points are flagged, not raised."""
    out = []
    for i in range(data.n_points):
        g = growth_per_cycle(data, i, profile, robot)
        if g >= 0:
            out.append(SteadyStateProfile(i, False, growth_per_cycle=g))
            continue
        H, th = peak_field(data, i, profile, robot)
        out.append(SteadyStateProfile(i, True, H, th, endpoint_values(data, i, profile, robot), g))
    return out


def write_profiles_csv(path, data, profile: ReciprocalProfile, points=None, resolution=200, robot=0):
    """Write ``theta, Z(q_i)...`` columns on a common theta grid."""
    points = range(data.n_points) if points is None else points
    grid = np.arange(resolution) / resolution
    cols = []
    for i in points:
        th, z = field_profile(data, i, profile, resolution, robot)
        cols.append(np.interp(grid, np.append(th, th[0] + 1), np.append(z, z[0])))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta"] + [f"z_{i + 1}" for i in points])
        for k, t in enumerate(grid):
            w.writerow([f"{t:.10g}"] + [f"{col[k]:.12g}" for col in cols])
