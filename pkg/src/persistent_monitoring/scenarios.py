"""Ready-made task instances.

The path shapes are reconstructions: a figure-eight and smooth clover
curves rescaled to the stated path lengths and arena sizes.  The interest
points and the production surface are generated from fixed seeds.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .task_model import DiskFootprint, InterestPoint, PathSpec, PersistentTask, RobotModel


def _polyline_length(xy):
    d = np.diff(np.vstack([xy, xy[:1]]), axis=0)
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def figure_eight(length, half_width, samples=2000, center=(0.0, 0.0)):
    """Closed figure-eight ``(a sin t, b sin 2t / 2)`` of the requested length.

    ``a = half_width`` fixes the horizontal extent; ``b`` is solved for.
    """
    t = np.arange(samples) / samples * 2 * np.pi

    def curve(b):
        return np.c_[half_width * np.sin(t), b * np.sin(2 * t) / 2]

    b = brentq(lambda b: _polyline_length(curve(b)) - length, 1e-3, 50 * length)
    return curve(b) + np.asarray(center)


def clover(length, radius, leaves, samples=4000, center=(0.0, 0.0), square=0.0, rotation=0.0):
    """Closed ``leaves``-lobed curve ``r = R (1 - d + d |cos(k phi / 2)|)``.

    ``square`` in [0, 1] stretches the curve toward the bounding square
    (``r / max(|cos phi|, |sin phi|) ** square``) so lobes reach into the
    corners; ``rotation`` (rad) turns the lobes.  The lobe depth ``d`` is solved for so the curve has the
    requested length.
    """
    phi = np.arange(samples) / samples * 2 * np.pi
    ang = phi + rotation
    stretch = np.maximum(np.abs(np.cos(ang)), np.abs(np.sin(ang))) ** -square

    def curve(d):
        r = radius * (1 - d + d * np.abs(np.cos(leaves * phi / 2))) * stretch
        return np.c_[r * np.cos(ang), r * np.sin(ang)]

    lo, hi = _polyline_length(curve(0.0)), _polyline_length(curve(0.99))
    if not min(lo, hi) <= length <= max(lo, hi):
        raise ValueError(f"length {length} not reachable (range {lo:.0f}..{hi:.0f})")
    d = brentq(lambda d: _polyline_length(curve(d)) - length, 0.0, 0.99)
    return curve(d) + np.asarray(center)


def gaussian_production(X, Y, peak, mean, n_bumps=6, seed=3, side=None):
    """Smooth bumpy production surface rescaled to the given max and mean."""
    rng = np.random.default_rng(seed)
    side = side if side is not None else float(np.ptp(X))
    g = np.zeros_like(X, dtype=float)
    x0, y0 = X.min(), Y.min()
    for _ in range(n_bumps):
        cx, cy = x0 + rng.uniform(0.1, 0.9, 2) * side
        s = rng.uniform(0.06, 0.18) * side
        g += rng.uniform(0.3, 1.0) * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * s**2))
    # affine map: g -> a g + b with the requested max and mean
    a = (peak - mean) / (g.max() - g.mean())
    b = peak - a * g.max()
    if b <= 0:
        raise ValueError("surface too peaked for requested mean; change n_bumps or seed")
    return a * g + b


def grid_points(nx, ny, bounds):
    """Cell-center grid over ``bounds = (xmin, ymin, xmax, ymax)``, row-major in y."""
    xmin, ymin, xmax, ymax = bounds
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    X, Y = np.meshgrid(xs, ys)
    return X, Y


def ten_point_task(n=150, seed=25):
    """Ground robot on a 300 m figure-eight in a 70 m arena, ten points.

    Nine points produce at 0.15 and one at 0.35; consumption is 1; the
    footprint is a 12 m disk and speeds lie in [0.2, 2] m/s.  Points are
    scattered around three spots near the path; with the default seed 8 of
    them are unstable at any constant speed while the task stays feasible.
    """
    path = PathSpec(figure_eight(300.0, 33.0, center=(35.0, 35.0)))
    rng = np.random.default_rng(seed)
    spots = rng.uniform(0, 1, 3)
    label = rng.integers(0, 3, 10)
    base = path.position(spots[label] + rng.normal(0, 0.01, 10))
    pts = np.clip(base + rng.normal(0, 6.0, (10, 2)), 0.0, 70.0)
    prod = np.full(10, 0.15)
    prod[0] = 0.35
    points = [InterestPoint(tuple(q), float(p), 1.0) for q, p in zip(pts, prod)]
    robot = RobotModel(DiskFootprint(12.0), 0.2, 2.0)
    return PersistentTask([robot], [path], points, [n])


def grid_task(n=280, nx=32, ny=32, seed=3):
    """Aerial robot on a 4200 m six-leaf clover over a 665 m arena.

    A ``nx x ny`` grid of points, production max 0.74 and mean 0.21,
    consumption 5, 133 m footprint, speeds in [1.5, 15] m/s.
    """
    side = 665.0
    c = (side / 2, side / 2)
    path = PathSpec(clover(4200.0, 315.0, 6, center=c, square=1.0))
    X, Y = grid_points(nx, ny, (0.0, 0.0, side, side))
    P = gaussian_production(X, Y, 0.74, 0.21, seed=seed, side=side)
    points = [InterestPoint((x, y), float(p), 5.0) for x, y, p in zip(X.ravel(), Y.ravel(), P.ravel())]
    robot = RobotModel(DiskFootprint(133.0), 1.5, 15.0)
    return PersistentTask([robot], [path], points, [n])


def two_robot_grid_task(n=150, nx=32, ny=32, seed=3):
    """Two aerial robots over a 690 m arena with a shared production surface.

    Robot 1: 2630 m figure-eight, 100 m footprint, [1.5, 15] m/s.
    Robot 2: 2250 m four-leaf clover, 133 m footprint, [2, 20] m/s.
    Consumption is 1 for both.
    """
    side = 690.0
    c = (side / 2, side / 2)
    p1 = PathSpec(figure_eight(2630.0, 0.42 * side, center=c))
    p2 = PathSpec(clover(2250.0, 300.0, 4, center=c, square=0.5, rotation=np.pi / 4))
    X, Y = grid_points(nx, ny, (0.0, 0.0, side, side))
    P = gaussian_production(X, Y, 0.74, 0.21, seed=seed, side=side) / 5.0
    points = [InterestPoint((x, y), float(p)) for x, y, p in zip(X.ravel(), Y.ravel(), P.ravel())]
    robots = [
        RobotModel(DiskFootprint(100.0), 1.5, 15.0, consumption=1.0),
        RobotModel(DiskFootprint(133.0), 2.0, 20.0, consumption=1.0),
    ]
    return PersistentTask(robots, [p1, p2], points, [n, n])
