"""Reciprocal speed controllers over a finite basis.

A controller is stored through its reciprocal speed ``1/v(theta)`` in
seconds per unit of normalized arc length.  On the rectangular basis with
``n`` cells, ``1/v`` is constant on ``[(j-1)/n, j/n)``.

Multi-robot controllers are kept in normalized form: the coefficients sum
to one against basis functions of unit integral (cell height ``n``), and a
separate frequency ``f = 1/T`` sets the overall pace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .coverage import CoverageSet, cell_overlap


@dataclass(frozen=True)
class RectBasis:
    """Indicator functions of ``n`` equal cells, optionally scaled to unit integral."""

    n: int
    normalized: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("basis needs n >= 1")

    @property
    def height(self):
        return float(self.n) if self.normalized else 1.0

    def cell(self, theta):
        th = np.mod(np.asarray(theta, dtype=float), 1.0)
        return np.minimum((th * self.n).astype(int), self.n - 1)

    def integrals(self, a, b):
        """Integral of every basis function over the forward arc a -> b."""
        return self.height * cell_overlap(a, b, self.n)


class FunctionBasis:
    """Arbitrary basis functions on [0, 1], integrated numerically.

    Only usable through the sampled-constraint synthesis path; the analysis
    and simulation tools require the rectangular basis.
    """

    def __init__(self, funcs: Sequence[Callable[[float], float]]):
        self.funcs = list(funcs)
        self.n = len(self.funcs)

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        return np.stack([np.broadcast_to(f(th), th.shape) for f in self.funcs], axis=-1)

    def integrals(self, a, b):
        def one(f, u, v):
            return integrate.quad(f, u, v, limit=200)[0]

        if b >= a:
            return np.array([one(f, a, b) for f in self.funcs])
        return np.array([one(f, a, 1.0) + one(f, 0.0, b) for f in self.funcs])


@dataclass(frozen=True)
class ReciprocalProfile:
    alpha: np.ndarray
    normalized: bool = False
    frequency: Optional[float] = None

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float).copy()
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        if self.normalized and not (self.frequency and self.frequency > 0):
            raise ValueError("normalized profiles need a positive frequency")

    @property
    def n(self):
        return len(self.alpha)

    @property
    def basis(self):
        return RectBasis(self.n, self.normalized)

    def cell_inverse_speed(self):
        """Reciprocal speed on each cell (seconds per unit theta)."""
        if self.normalized:
            return self.alpha * self.n / self.frequency
        return np.array(self.alpha)

    @classmethod
    def constant(cls, n, inverse_speed):
        return cls(np.full(n, float(inverse_speed)))

    @classmethod
    def from_inverse_speed(cls, a, normalized=False):
        """Wrap per-cell reciprocal speeds, optionally in normalized form."""
        a = np.asarray(a, dtype=float)
        if not normalized:
            return cls(a)
        T = a.mean()
        return cls(a / a.sum(), True, 1.0 / T)

    def violations(self, lo=None, hi=None, tol=1e-9):
        out = []
        inv = self.cell_inverse_speed()
        if not np.all(inv > 0):
            out.append("reciprocal speed must be positive everywhere")
        if self.normalized and abs(self.alpha.sum() - 1.0) > tol:
            out.append("normalized coefficients must sum to 1")
        if lo is not None and np.any(inv < np.asarray(lo) * (1 - tol)):
            out.append("speed above v_max on some cell")
        if hi is not None and np.any(inv > np.asarray(hi) * (1 + tol)):
            out.append("speed below v_min on some cell")
        return out


def eval_reciprocal(profile: ReciprocalProfile, theta):
    """``1/v(theta)``, seconds per unit theta."""
    return profile.cell_inverse_speed()[profile.basis.cell(theta)]


def cycle_time(profile: ReciprocalProfile) -> float:
    return float(profile.cell_inverse_speed().mean())


def coverage_time(profile: ReciprocalProfile, cov: CoverageSet) -> float:
    """Time per cycle spent with the point inside the footprint."""
    if cov.full:
        return cycle_time(profile)
    inv = profile.cell_inverse_speed()
    return float(sum(inv @ cell_overlap(x, y, profile.n) for x, y in cov.intervals))


def travel_time(profile: ReciprocalProfile, a, b) -> float:
    """Seconds to move forward from ``theta = a`` to ``theta = b`` (wrapping)."""
    return float(profile.cell_inverse_speed() @ cell_overlap(a % 1.0, b % 1.0, profile.n))


def stability_margin(profile: ReciprocalProfile, data, robot=0):
    """Per-point ``c(q) tau(q) - p(q) T`` for a single-robot task.

    The profile is field stabilizing iff every entry is strictly positive.
    """
    T = cycle_time(profile)
    tau = np.array([coverage_time(profile, cov) for cov in data.coverage[robot]])
    return data.consumption[robot] * tau - data.production * T


def multi_stability_margin(profiles, data):
    """Per-point ``sum_r c_r tau_r / T_r - p`` (field units per second)."""
    total = np.zeros(data.n_points)
    for r, prof in enumerate(profiles):
        T = cycle_time(prof)
        tau = np.array([coverage_time(prof, cov) for cov in data.coverage[r]])
        total += data.consumption[r] * tau / T
    return total - data.production


def average_controllers(profiles: Sequence[ReciprocalProfile]) -> ReciprocalProfile:
    """Periodic controller from per-cycle controllers by averaging ``1/v``.

    Equivalent to ``v = k / sum_l (1/v_l)``; the result inherits any per-cell
    speed bounds the inputs share.
    """
    if not profiles:
        raise ValueError("need at least one profile")
    n = profiles[0].n
    if any(p.n != n for p in profiles):
        raise ValueError("profiles must share the same basis")
    inv = np.mean([p.cell_inverse_speed() for p in profiles], axis=0)
    return ReciprocalProfile(inv)
