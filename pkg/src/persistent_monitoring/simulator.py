"""Field simulation for one or several robots on their paths.

Between consecutive events every point's field changes at a constant rate
``p + eps - sum_r c_r [covered by r]``, clamped at zero.  With constant
rates the clamp is exact in the Lindley form

    Z_{k+1} = max(Z_k + a_k, 0)  =>  Z_k = S_k - min(-Z_0, min_{j<=k} S_j)

with ``S`` the running sum of the increments ``a_k``, which lets whole
blocks of events be advanced with a cumulative sum and a running minimum.

Events are cell boundaries and coverage endpoints crossed by any robot.
The fixed-step mode samples the same robot motion every ``dt`` seconds and
applies forward Euler with clamping; it is the only mode that supports
production noise.
"""

from __future__ import annotations

import csv
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .controller import ReciprocalProfile, cycle_time, coverage_time

log = logging.getLogger(__name__)

_CHUNK = 2_000_000  # values per (time x point) block


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``noise`` is the half-width of the uniform production noise drawn per
    step and point, ``epsilon`` a constant production offset and ``eta`` the
    half-width of the multiplicative speed perturbation, redrawn every time
    a robot enters a new basis cell.
    """

    horizon: float
    mode: str = "event"
    dt: Optional[float] = None
    z0: object = 0.0
    theta0: object = 0.0
    noise: float = 0.0
    epsilon: float = 0.0
    eta: float = 0.0
    seed: int = 0
    record: str = "full"

    def violations(self):
        out = []
        if not self.horizon > 0:
            out.append("horizon must be > 0")
        if self.mode not in ("event", "fixed"):
            out.append("mode must be 'event' or 'fixed'")
        if self.mode == "fixed" and self.dt is not None and not self.dt > 0:
            out.append("dt must be > 0")
        if self.noise < 0 or self.epsilon < 0 or self.eta < 0:
            out.append("noise, epsilon and eta must be >= 0")
        if self.eta >= 1:
            out.append("eta must be < 1 (speed factor stays positive)")
        if self.noise > 0 and self.mode != "fixed":
            out.append("production noise needs mode='fixed'")
        if self.record not in ("full", "max", "none"):
            out.append("record must be 'full', 'max' or 'none'")
        if np.any(np.asarray(self.z0, dtype=float) < 0):
            out.append("initial field must be >= 0")
        return out


@dataclass
class SimTrace:
    """Simulation output.

    ``times`` / ``theta`` / ``z`` hold the recorded rows (``z`` is ``None``
    unless ``record="full"``; ``zmax`` holds the max over points).  In event
    mode with full recording the rows include every zero crossing, so linear
    interpolation between rows is exact.

    A point is flagged ``divergent`` when its maximum over the last quarter
    of the horizon exceeds the maximum over the preceding quarter by more
    than 1% and its field stayed positive throughout the last quarter.
    """

    times: np.ndarray
    theta: np.ndarray
    z: Optional[np.ndarray]
    zmax: np.ndarray
    z_end: np.ndarray
    max_field: float
    final_window_max: float
    point_final_max: np.ndarray
    point_prev_max: np.ndarray
    point_final_min: np.ndarray
    slope: np.ndarray
    divergent: np.ndarray
    horizon: float
    mode: str
    extra: dict = field(default_factory=dict)

    @property
    def converged_periodic(self):
        return not bool(self.divergent.any())

    def sample(self, t, point=None):
        """Field at times ``t`` (exact between recorded rows in event mode)."""
        if self.z is None:
            raise ValueError("trace was recorded without per-point values")
        t = np.asarray(t, dtype=float)
        cols = range(self.z.shape[1]) if point is None else [point]
        out = np.stack([np.interp(t, self.times, self.z[:, i]) for i in cols], axis=-1)
        return out[..., 0] if point is not None else out

    def summary(self):
        return {
            "max_field": float(self.max_field),
            "final_window_max": float(self.final_window_max),
            "converged_periodic": self.converged_periodic,
            "divergent_points": [int(i) for i in np.flatnonzero(self.divergent)],
            "max_growth_slope": float(np.max(self.slope, initial=0.0)),
            "horizon": float(self.horizon),
            "mode": self.mode,
        }


# --------------------------------------------------------------------------
# robot motion


@dataclass
class _Timeline:
    start: np.ndarray  # piece start times, increasing, start[0] = 0
    theta_start: np.ndarray  # unwrapped theta at piece start
    theta_len: np.ndarray
    duration: np.ndarray
    mask: np.ndarray  # (pieces per cycle, m) coverage of each cyclic piece
    piece: np.ndarray  # cyclic piece id of every timeline piece

    def locate(self, t):
        return np.clip(np.searchsorted(self.start, t, side="right") - 1, 0, len(self.start) - 1)

    def theta_at(self, t, k=None):
        k = self.locate(t) if k is None else k
        frac = (t - self.start[k]) / self.duration[k]
        return self.theta_start[k] + np.clip(frac, 0.0, 1.0) * self.theta_len[k]


def _cycle_pieces(profile: ReciprocalProfile, coverage, theta0):
    """Pieces of one loop starting at ``theta0``: (theta_start, length, cell, mask)."""
    n = profile.n
    cuts = [np.arange(n) / n, [theta0 % 1.0]]
    for cov in coverage:
        if not cov.full:
            for x, y in cov.intervals:
                cuts.append([x, y])
    pts = np.unique(np.mod(np.concatenate(cuts), 1.0))
    start = theta0 % 1.0
    rel = np.sort(np.mod(pts - start, 1.0))
    rel = np.unique(rel[rel < 1.0 - 1e-15])
    edges = np.append(rel, 1.0)
    lo, ln = start + edges[:-1], np.diff(edges)
    keep = ln > 1e-15
    lo, ln = lo[keep], ln[keep]
    mid = np.mod(lo + ln / 2, 1.0)
    cell = np.minimum((mid * n).astype(int), n - 1)
    mask = np.stack([cov.contains(mid) for cov in coverage], axis=1) if coverage else np.zeros((len(mid), 0), bool)
    return lo, ln, cell, mask


def _timeline(profile, coverage, theta0, horizon, eta, rng):
    lo, ln, cell, mask = _cycle_pieces(profile, coverage, theta0)
    inv = profile.cell_inverse_speed()
    base = inv[cell] * ln
    T = base.sum()
    cycles = int(np.ceil(horizon * (1 + eta) / T)) + 2
    piece = np.tile(np.arange(len(lo)), cycles)
    dur = np.tile(base, cycles)
    if eta > 0:
        seq = np.tile(cell, cycles)
        run = np.cumsum(np.r_[True, seq[1:] != seq[:-1]]) - 1
        factor = rng.uniform(1 - eta, 1 + eta, run[-1] + 1)
        dur = dur / factor[run]
    start = np.r_[0.0, np.cumsum(dur)[:-1]]
    reps = np.repeat(np.arange(cycles), len(lo))
    keep = start <= horizon
    return _Timeline(start[keep], (lo[piece] + reps)[keep], ln[piece][keep], dur[keep], mask, piece[keep])


# --------------------------------------------------------------------------
# core


def _as_profiles(profiles):
    if isinstance(profiles, ReciprocalProfile):
        return [profiles]
    return list(profiles)


def _period(profiles):
    return max(cycle_time(p) for p in profiles)


def _lindley(z0, inc):
    """Values after each increment row of ``inc`` (k x m), starting from z0."""
    S = np.cumsum(inc, axis=0)
    run_min = np.minimum.accumulate(S, axis=0)
    return S - np.minimum(-z0, run_min)


def simulate(data, profiles, config: SimConfig) -> SimTrace:
    """Integrate the field for ``config.horizon`` seconds.

    Parameters
    ----------
    data : CoveredTask
    profiles : ReciprocalProfile or list of them, one per robot
    config : SimConfig
    """
    bad = config.violations()
    if bad:
        raise ValueError("; ".join(bad))
    profiles = _as_profiles(profiles)
    N, m = data.n_robots, data.n_points
    if len(profiles) != N:
        raise ValueError(f"{len(profiles)} profiles for {N} robots")
    H = float(config.horizon)
    rng = np.random.default_rng(config.seed)
    theta0 = np.broadcast_to(np.asarray(config.theta0, dtype=float), (N,))
    z0 = np.broadcast_to(np.asarray(config.z0, dtype=float), (m,)).copy()
    p_eff = data.production + config.epsilon

    lines = [
        _timeline(profiles[r], data.coverage[r], theta0[r], H, config.eta, rng) for r in range(N)
    ]
    Tmax = _period(profiles)
    if H < 4 * Tmax:
        warnings.warn("horizon shorter than four cycles; divergence classification is unreliable",
                      stacklevel=2)
    forced = [H / 2, 3 * H / 4, H] + ([H - Tmax] if N == 1 and H > Tmax else [])
    if config.mode == "event":
        times = np.unique(np.concatenate([ln.start for ln in lines] + [forced, [0.0]]))
    else:
        dt = config.dt if config.dt is not None else default_dt(profiles)
        times = np.unique(np.r_[np.arange(0.0, H, dt), forced])
    times = times[times <= H]
    K = len(times)

    # per-robot piece index at each row, and consumption for the following interval
    idx = [ln.locate(times) for ln in lines]
    consume = [data.consumption[r][None, :] for r in range(N)]

    record_full = config.record == "full"
    Z_rows = np.empty((K, m)) if record_full else None
    zmax = np.empty(K)
    w_prev = (times >= H / 2) & (times <= 3 * H / 4)
    w_last = times >= 3 * H / 4
    prev_max = np.zeros(m)
    last_max = np.zeros(m)
    last_min = np.full(m, np.inf)
    rates = np.empty((K - 1, m)) if (record_full and config.mode == "event") else None

    # reference row for the growth slope: one cycle back (single robot) or mid-horizon
    single = N == 1 and H > Tmax
    t_ref = H - Tmax if single else H / 2
    k_ref = int(np.searchsorted(times, t_ref))
    z_ref = z0.copy()

    z = z0
    rows = max(1, _CHUNK // max(m, 1))
    zmax[0] = z.max(initial=0.0)
    if record_full:
        Z_rows[0] = z
    prev_max = np.where(w_prev[0], np.maximum(prev_max, z), prev_max)
    last_max = np.where(w_last[0], np.maximum(last_max, z), last_max)
    last_min = np.where(w_last[0], np.minimum(last_min, z), last_min)
    for s in range(0, K - 1, rows):
        e = min(K - 1, s + rows)
        dts = times[s + 1 : e + 1] - times[s:e]
        rate = np.broadcast_to(p_eff, (e - s, m)).copy()
        for r in range(N):
            cov = lines[r].mask[lines[r].piece[idx[r][s:e]]]
            rate -= cov * consume[r]
        if config.noise > 0:
            rate += rng.uniform(-config.noise, config.noise, size=(e - s, m))
        zz = _lindley(z, rate * dts[:, None])
        zz = np.maximum(zz, 0.0)
        z = zz[-1]
        zmax[s + 1 : e + 1] = zz.max(axis=1, initial=0.0)
        if record_full:
            Z_rows[s + 1 : e + 1] = zz
            if rates is not None:
                rates[s:e] = rate
        if s + 1 <= k_ref <= e:
            z_ref = zz[k_ref - s - 1].copy()
        wp, wl = w_prev[s + 1 : e + 1], w_last[s + 1 : e + 1]
        if wp.any():
            prev_max = np.maximum(prev_max, zz[wp].max(axis=0))
        if wl.any():
            last_max = np.maximum(last_max, zz[wl].max(axis=0))
            last_min = np.minimum(last_min, zz[wl].min(axis=0))

    theta = np.stack([lines[r].theta_at(times, idx[r]) for r in range(N)], axis=1)

    slope = (z - z_ref) / (H - times[k_ref])
    # a stabilized field keeps returning to zero; a diverging one eventually stays positive
    divergent = (last_max > prev_max * 1.01 + 1e-12) & (last_min > 0)

    if record_full and config.mode == "event":
        times, theta, Z_rows = _insert_zero_hits(times, theta, Z_rows, rates, lines, idx)
        zmax = Z_rows.max(axis=1, initial=0.0)
    if config.record == "none":
        times, theta, zmax = times[[0, -1]], theta[[0, -1]], zmax[[0, -1]]

    return SimTrace(
        times=times,
        theta=np.mod(theta, 1.0),
        z=Z_rows,
        zmax=zmax,
        z_end=z,
        max_field=float(max(zmax.max(initial=0.0), last_max.max(initial=0.0))),
        final_window_max=float(last_max.max(initial=0.0)),
        point_final_max=last_max,
        point_prev_max=prev_max,
        point_final_min=last_min,
        slope=slope,
        divergent=divergent,
        horizon=H,
        mode=config.mode,
    )


def _insert_zero_hits(times, theta, Z, rates, lines, idx):
    """Add the instants where some point's field reaches zero mid-interval."""
    z0, zr = Z[:-1], rates
    hit = (z0 > 0) & (zr < 0) & (z0 + zr * np.diff(times)[:, None] < 0)
    if not hit.any():
        return times, theta, Z
    k, i = np.nonzero(hit)
    th = times[k] + z0[k, i] / -zr[k, i]
    th, first = np.unique(th, return_index=True)
    k, i = k[first], i[first]
    inside = (th > times[k]) & (th < times[k + 1])
    th, i = th[inside], i[inside]
    k = np.searchsorted(times, th, side="right") - 1
    Znew = np.maximum(Z[k] + rates[k] * (th - times[k])[:, None], 0.0)
    # the point that triggered the row is exactly at zero there
    Znew[np.arange(len(th)), i] = 0.0
    thetanew = np.stack([lines[r].theta_at(th, idx[r][k]) for r in range(len(lines))], axis=1)
    t_all = np.concatenate([times, th])
    order = np.argsort(t_all, kind="stable")
    return t_all[order], np.vstack([theta, thetanew])[order], np.vstack([Z, Znew])[order]


def default_dt(profiles):
    """A tenth of the shortest cell transit time."""
    return min(float(np.min(p.cell_inverse_speed())) / p.n for p in _as_profiles(profiles)) / 10


# --------------------------------------------------------------------------
# analytic reference values


def analytic_threshold(data, profiles):
    """Largest constant production offset the profiles tolerate.

    Single robot: ``min_q (c tau - p T) / T``; several robots:
    ``min_q (sum_r c_r tau_r / T_r - p)``.  Offsets at or above it make some
    point diverge.
    """
    profiles = _as_profiles(profiles)
    total = np.zeros(data.n_points)
    for r, prof in enumerate(profiles):
        T = cycle_time(prof)
        tau = np.array([coverage_time(prof, cov) for cov in data.coverage[r]])
        total += data.consumption[r] * tau / T
    return float(np.min(total - data.production))


def corollary_bound(data, profile):
    """Guaranteed offset ``min_i B c_i / T`` with ``B = min_i (tau_i - p_i T / c_i)``."""
    T = cycle_time(profile)
    tau = np.array([coverage_time(profile, cov) for cov in data.coverage[0]])
    B = float(np.min(tau - data.production * T / data.consumption[0]))
    return max(B, 0.0) * float(np.min(data.consumption[0])) / T


# --------------------------------------------------------------------------
# sweeps


def _one_run(args):
    data, profiles, cfg = args
    return simulate(data, profiles, cfg)


def trial_seed(base, trial):
    """Independent, reproducible seed for one trial of a sweep."""
    return int(np.random.SeedSequence([base, trial]).generate_state(1)[0])


def parameter_sweep(data, profiles, param, values, trials=20, horizon=None, seed=0,
                    base: Optional[SimConfig] = None, workers=1):
    """Per-value statistics of the per-trial maximum field.

    ``param`` is ``"noise"``, ``"epsilon"`` or ``"eta"``.  Returns a list of
    dicts with ``value, mean, min, max, std, bounded`` (fraction of trials
    classified bounded).
    """
    if param not in ("noise", "epsilon", "eta"):
        raise ValueError("param must be noise, epsilon or eta")
    profiles = _as_profiles(profiles)
    if base is None:
        base = SimConfig(horizon=horizon if horizon is not None else 8 * _period(profiles),
                         record="none")
    elif horizon is not None:
        base = replace(base, horizon=horizon)
    if param == "noise" and base.mode != "fixed":
        base = replace(base, mode="fixed")
    jobs = [
        (data, profiles, replace(base, **{param: float(v)}, seed=trial_seed(seed, t)))
        for v in values
        for t in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            traces = list(ex.map(_one_run, jobs))
    else:
        traces = [_one_run(j) for j in jobs]
    out = []
    for a, v in enumerate(values):
        tr = traces[a * trials : (a + 1) * trials]
        mx = np.array([t.max_field for t in tr])
        out.append({
            "value": float(v),
            "mean": float(mx.mean()),
            "min": float(mx.min()),
            "max": float(mx.max()),
            "std": float(mx.std()),
            "bounded": float(np.mean([t.converged_periodic for t in tr])),
        })
    return out


def noise_sweep(data, profiles, levels, trials=20, horizon=None, seed=0, dt=None, workers=1):
    """Statistics of the maximum field under uniform production noise."""
    profiles = _as_profiles(profiles)
    H = horizon if horizon is not None else 8 * _period(profiles)
    base = SimConfig(horizon=H, mode="fixed", dt=dt, record="none")
    return parameter_sweep(data, profiles, "noise", levels, trials, seed=seed, base=base,
                           workers=workers)


def epsilon_threshold(data, profiles, eps_grid, horizon=None, mode="event"):
    """Largest grid offset for which every offset up to it stays bounded.

    Returns a dict with the empirical threshold, the analytic threshold and
    (single robot) the guaranteed bound, plus the per-offset verdicts.
    """
    profiles = _as_profiles(profiles)
    H = horizon if horizon is not None else 12 * _period(profiles)
    grid = np.sort(np.asarray(eps_grid, dtype=float))
    verdicts = []
    for e in grid:
        tr = simulate(data, profiles, SimConfig(horizon=H, mode=mode, epsilon=float(e)))
        verdicts.append(tr.converged_periodic)
    ok = np.array(verdicts)
    bad = np.flatnonzero(~ok)
    last = (bad[0] - 1) if len(bad) else len(grid) - 1
    out = {
        "empirical": float(grid[last]) if last >= 0 else float("nan"),
        "analytic": analytic_threshold(data, profiles),
        "grid": grid.tolist(),
        "bounded": ok.tolist(),
    }
    if data.n_robots == 1:
        out["guaranteed"] = corollary_bound(data, profiles[0])
    return out


# --------------------------------------------------------------------------
# output


def write_trace_csv(path, trace: SimTrace, max_only=False, every=1):
    """``t, theta_1..theta_N, z_1..z_m`` rows (or ``z_max`` with ``max_only``)."""
    N = trace.theta.shape[1]
    full = trace.z is not None and not max_only
    head = ["t"] + [f"theta_{r + 1}" for r in range(N)]
    head += [f"z_{i + 1}" for i in range(trace.z.shape[1])] if full else ["z_max"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head)
        for k in range(0, len(trace.times), every):
            vals = trace.z[k] if full else [trace.zmax[k]]
            w.writerow([f"{trace.times[k]:.12g}"] + [f"{v:.12g}" for v in trace.theta[k]]
                       + [f"{v:.12g}" for v in vals])


def write_stats_csv(path, rows, param="noise"):
    """Sweep rows as CSV; ``path`` may also be an open text stream."""
    if hasattr(path, "write"):
        _stats_rows(csv.writer(path, lineterminator="\n"), rows, param)
        return
    with open(path, "w", newline="") as fh:
        _stats_rows(csv.writer(fh), rows, param)


def _stats_rows(w, rows, param):
    w.writerow([param, "mean", "min", "max", "std", "bounded_fraction"])
    for r in rows:
        w.writerow([f"{r['value']:.12g}", f"{r['mean']:.12g}", f"{r['min']:.12g}",
                    f"{r['max']:.12g}", f"{r['std']:.12g}", f"{r['bounded']:.6g}"])
