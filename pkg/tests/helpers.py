"""Random task generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from persistent_monitoring import CoveredTask, ReciprocalProfile, coverage_time, cycle_time


def random_intervals(rng, max_intervals=3, min_gap=2e-3):
    """Circular intervals with random count, lengths and rotation (may wrap)."""
    while True:
        ell = int(rng.integers(1, max_intervals + 1))
        cuts = np.sort(rng.uniform(0, 1, 2 * ell))
        spacing = np.diff(np.append(cuts, cuts[0] + 1))
        if spacing.min() > min_gap:
            break
    shift = rng.uniform()
    return [((cuts[2 * k] + shift) % 1.0, (cuts[2 * k + 1] + shift) % 1.0) for k in range(ell)]


def random_cover(rng, max_intervals=3, p_full=0.05, p_empty=0.0):
    u = rng.uniform()
    if u < p_full:
        return "full"
    if u < p_full + p_empty:
        return []
    return random_intervals(rng, max_intervals)


def random_bounds(rng, n):
    lo = rng.uniform(0.2, 1.0, n)
    hi = lo * rng.uniform(1.5, 5.0, n)
    return lo, hi


def random_alpha(rng, lo, hi):
    return lo + rng.uniform(0, 1, len(lo)) * (hi - lo)


def single_task(intervals, production, consumption, lo, hi):
    return CoveredTask.from_intervals([intervals], production, [consumption], [lo], [hi])


def random_single(rng, m=None, n=None, max_intervals=3, ratio=(0.5, 1.4), p_full=0.05):
    """Single-robot task plus a profile inside its speed bounds.

    Production is set relative to the profile's own break-even rate
    ``c tau / T`` times a factor drawn from ``ratio``, so both stabilized
    and divergent points occur.
    """
    m = m or int(rng.integers(1, 11))
    n = n or int(rng.integers(1, 21))
    ivs = [random_cover(rng, max_intervals, p_full) for _ in range(m)]
    lo, hi = random_bounds(rng, n)
    prof = ReciprocalProfile(random_alpha(rng, lo, hi))
    c = rng.uniform(1.0, 10.0, m)
    probe = single_task(ivs, np.ones(m), c, lo, hi)
    T = cycle_time(prof)
    tau = np.array([coverage_time(prof, cov) for cov in probe.coverage[0]])
    p = np.minimum(c * tau / T * rng.uniform(*ratio, m), 0.97 * c)
    return single_task(ivs, p, c, lo, hi), prof


def random_multi(rng, N=None, m=None, ratio=(0.6, 1.3)):
    """2-3 robot task plus normalized profiles; production set as in :func:`random_single`."""
    N = N or int(rng.integers(2, 4))
    m = m or int(rng.integers(1, 11))
    ivs, lo, hi, cons, profs = [], [], [], [], []
    for _ in range(N):
        n = int(rng.integers(1, 21))
        ivs.append([random_cover(rng, 3, p_full=0.05, p_empty=0.3) for _ in range(m)])
        a, b = random_bounds(rng, n)
        lo.append(a)
        hi.append(b)
        cons.append(rng.uniform(1.0, 6.0, m))
        profs.append(ReciprocalProfile.from_inverse_speed(random_alpha(rng, a, b), normalized=True))
    probe = CoveredTask.from_intervals(ivs, np.ones(m), cons, lo, hi)
    rate = np.zeros(m)
    for r, prof in enumerate(profs):
        tau = np.array([coverage_time(prof, cov) for cov in probe.coverage[r]])
        rate += cons[r] * tau / cycle_time(prof)
    # points nobody covers still need p > 0
    p = np.where(rate > 0, rate * rng.uniform(*ratio, m), rng.uniform(0.1, 1.0, m))
    return CoveredTask.from_intervals(ivs, p, cons, lo, hi), profs


def with_production(data: CoveredTask, production):
    return CoveredTask(data.coverage, production, data.consumption, data.alpha_lo, data.alpha_hi,
                       data.lengths)
