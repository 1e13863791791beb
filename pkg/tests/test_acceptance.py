"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import sys
import time

import numpy as np
import pytest

from persistent_monitoring import (
    ReciprocalProfile,
    SimConfig,
    analytic_threshold,
    average_controllers,
    coverage_time,
    cycle_time,
    endpoint_values,
    field_profile,
    multi_stability_margin,
    noise_sweep,
    peak_field,
    prepare,
    robustness_bound,
    simulate,
    stability_margin,
    synthesize,
    travel_time,
)
from persistent_monitoring.coverage import decompose
from persistent_monitoring.lp import solve
from persistent_monitoring.scenarios import grid_task, ten_point_task
from persistent_monitoring.steady_state import peak_field_batch
from persistent_monitoring.synthesis import INFEASIBLE, build_feasibility_lp, build_multi_lp
from helpers import random_multi, random_single, single_task

MIN_REL_MARGIN = 0.02  # |margin| / (p T): closer to zero needs unbounded horizons
MAX_CYCLES = 20_000


def report(capsys, k, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k}: {detail}", flush=True)
    assert ok, detail


def coverage_rates(data, profiles):
    """Per point ``sum_r c_r tau_r`` and ``sum_r c_r tau_r / T_r``."""
    total, rate = np.zeros(data.n_points), np.zeros(data.n_points)
    for r, prof in enumerate(profiles):
        tau = np.array([coverage_time(prof, cov) for cov in data.coverage[r]])
        total += data.consumption[r] * tau
        rate += data.consumption[r] * tau / cycle_time(prof)
    return total, rate


# --------------------------------------------------------------------------
# 1. stability equivalence


def _draw_task(rng):
    """A random task whose per-point margins all clear MIN_REL_MARGIN."""
    while True:
        N = int(rng.integers(1, 4))
        if N == 1:
            data, prof = random_single(rng, ratio=(0.6, 1.5))
            profiles = [prof]
            rel = stability_margin(prof, data) / (data.production * cycle_time(prof))
        else:
            data, profiles = random_multi(rng, N=N, ratio=(0.6, 1.5))
            rel = multi_stability_margin(profiles, data) / data.production
        if np.all(np.abs(rel) >= MIN_REL_MARGIN):
            return data, profiles


def _horizon(data, profiles):
    Tmax = max(cycle_time(p) for p in profiles)
    total, rate = coverage_rates(data, profiles)
    gap = np.abs(rate - data.production)  # field units per second
    if len(profiles) == 1:
        # positive through the final quarter once (K - 2) g > c tau, g = gap T
        cycles = 2 * np.max(total / (gap * Tmax)) + 8
    else:
        # mid-horizon slope error is at most 4 sum(c tau) / (gap H)
        cycles = 80 * np.max(total / gap) / Tmax
    return float(min(max(cycles, 40), MAX_CYCLES) * Tmax)


def test_criterion_1_stability_equivalence(capsys):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    n_tasks, mismatches, slope_err, n_div, n_slopes = 240, [], 0.0, 0, 0
    for k in range(n_tasks):
        data, profiles = _draw_task(rng)
        if len(profiles) == 1:
            T = cycle_time(profiles[0])
            expect = -stability_margin(profiles[0], data) / T  # growth per second
        else:
            expect = -multi_stability_margin(profiles, data)
        H = _horizon(data, profiles)
        theta0 = rng.uniform(0, 1, len(profiles))
        tr = simulate(data, profiles, SimConfig(horizon=H, theta0=theta0, record="none"))
        predicted = expect > 0
        if not np.array_equal(predicted, tr.divergent):
            mismatches.append(k)
        n_div += bool(predicted.any())
        for i in np.flatnonzero(predicted):
            slope_err = max(slope_err, abs(tr.slope[i] - expect[i]) / expect[i])
            n_slopes += 1
    wall = time.perf_counter() - t0
    ok = not mismatches and slope_err <= 0.05 and wall < 120
    report(capsys, 1, ok,
           f"{n_tasks} tasks ({n_div} with divergent points), verdict mismatches {len(mismatches)}, "
           f"worst slope error {100 * slope_err:.3f}% over {n_slopes} points, {wall:.1f} s")


# --------------------------------------------------------------------------
# 2. steady-state oracle


def _steady_check(data, prof):
    T = cycle_time(prof)
    K = 4
    tr = simulate(data, prof, SimConfig(horizon=K * T))
    worst = 0.0
    touches = True
    for i in range(data.n_points):
        p, c = data.production[i], data.consumption[0][i]
        tol = 1e-9 * (p + c) * T
        last = (tr.times >= (K - 1) * T) & (tr.times <= K * T)
        if data.coverage[0][i].full:
            worst = max(worst, np.max(tr.z[last, i]) / tol)
            continue
        H, _ = peak_field(data, i, prof)
        worst = max(worst, abs(tr.z[last, i].max() - H) / tol)
        _, y = decompose(data.coverage[0][i])
        t_end = (K - 1) * T + np.array([travel_time(prof, 0.0, yk) for yk in y])
        worst = max(worst, np.max(np.abs(tr.sample(t_end, i) - endpoint_values(data, i, prof))) / tol)
        th, z = field_profile(data, i, prof, resolution=64)
        t_curve = (K - 1) * T + np.array([travel_time(prof, 0.0, t) for t in th])
        worst = max(worst, np.max(np.abs(tr.sample(t_curve, i) - z)) / tol)
        for cyc in range(1, K):
            win = (tr.times >= cyc * T) & (tr.times <= (cyc + 1) * T)
            touches &= tr.z[win, i].min() == 0.0
    return worst, touches


def test_criterion_2_steady_state_oracle(capsys):
    rng = np.random.default_rng(7)
    e1 = single_task([[(0.2, 0.3), (0.6, 0.7)]], [1.0], [6.0], np.full(4, 0.5), np.full(4, 2.0))
    ones = ReciprocalProfile(np.ones(4))
    H_e1 = peak_field(e1, 0, ones)[0]
    worst, touches = _steady_check(e1, ones)
    count = 0
    while count < 120:
        data, prof = random_single(rng, ratio=(0.2, 0.95))
        if np.min(stability_margin(prof, data)) <= 0:
            continue
        w, t = _steady_check(data, prof)
        worst, touches = max(worst, w), touches and t
        count += 1
    ok = abs(H_e1 - 0.5) < 1e-12 and worst <= 1.0 and touches
    report(capsys, 2, ok,
           f"E1 H = {H_e1:.12g}; {count} random instances, worst deviation "
           f"{worst:.3g} x 1e-9 (p+c)T; zero touched every cycle: {touches}")


# --------------------------------------------------------------------------
# 3. min-max optimality against grid search


def test_criterion_3_minmax_grid_oracle(capsys):
    import itertools

    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    gaps, self_err, count, at_grid = [], 0.0, 0, 0
    while count < 24:
        n = int(rng.integers(2, 7))
        data, _ = random_single(rng, m=int(rng.integers(1, 5)), n=n, ratio=(0.3, 0.9), p_full=0.0)
        res = synthesize(data, "minmax")
        if not res.feasible:
            continue
        axes = [np.linspace(a, b, 5) for a, b in zip(data.alpha_lo[0], data.alpha_hi[0])]
        A = np.array(list(itertools.product(*axes)))
        H, _ = peak_field_batch(data, A)
        gaps.append(H.min() - res.objective)
        at_grid += abs(H.min() - res.objective) <= 1e-6
        H_lp = max(peak_field(data, i, res.profiles[0])[0] for i in range(data.n_points))
        self_err = max(self_err, abs(H_lp - res.objective))
        count += 1
    wall = time.perf_counter() - t0
    ok = min(gaps) >= -1e-6 and self_err <= 1e-6 and wall < 300
    report(capsys, 3, ok,
           f"{count} instances, min(grid best - LP optimum) = {min(gaps):.3g} "
           f"(grid reaches the optimum in {at_grid}), LP self-consistency {self_err:.2g}, {wall:.1f} s")


# --------------------------------------------------------------------------
# 4. robustness bound


def _diverges(data, prof, eps):
    T = cycle_time(prof)
    g = (data.production + eps) * T - data.consumption[0] * np.array(
        [coverage_time(prof, cov) for cov in data.coverage[0]])
    ctau = (data.production + eps) * T - g
    pos = g > 0
    cycles = 2 * np.max(ctau[pos] / g[pos]) + 8 if pos.any() else 8
    H = min(max(cycles, 16), MAX_CYCLES) * T
    return not simulate(data, prof, SimConfig(horizon=H, epsilon=eps, record="none")).converged_periodic


def test_criterion_4_robustness_bound(capsys):
    rng = np.random.default_rng(5)
    cases = [(ten_point_task(), None)]
    bound_ok, stable_ok, unstable_ok, count = True, True, True, 0
    pair = None
    items = []
    while len(items) < 30:
        data, _ = random_single(rng, m=int(rng.integers(1, 8)), ratio=(0.3, 1.1))
        items.append(data)
    items.insert(0, prepare(cases[0][0]))
    for data in items:
        res = synthesize(data, "margin")
        if not res.stabilizing or res.objective <= 0:
            continue
        prof = res.profiles[0]
        eps_b = float(np.min(robustness_bound(res, data)))
        eps_star = analytic_threshold(data, prof)
        bound_ok &= eps_b <= eps_star * (1 + 1e-9)
        for eps in np.linspace(0.0, eps_b * (1 - 1e-3), 4):
            stable_ok &= not _diverges(data, prof, eps)
        above = eps_star * 1.05 + 1e-3 * float(np.mean(data.production))
        unstable_ok &= _diverges(data, prof, above)
        if pair is None:
            pair = (eps_b, eps_star)
        count += 1
    ok = bound_ok and stable_ok and unstable_ok and count >= 20
    report(capsys, 4, ok,
           f"{count} margin-LP controllers: bound <= exact threshold {bound_ok}, stable up to bound "
           f"{stable_ok}, divergent above threshold {unstable_ok}; ten-point task bound "
           f"{pair[0]:.4g} vs exact threshold {pair[1]:.4g}")


# --------------------------------------------------------------------------
# 5. multi-robot program


def test_criterion_5_multi_robot(capsys):
    rng = np.random.default_rng(99)
    n_feas = n_infeas = 0
    bounded_ok = verdict_ok = True
    runs = 0
    k = 0
    while n_feas < 50 or n_infeas < 10:
        k += 1
        data, _ = random_multi(rng, ratio=(0.3, 1.5))
        res = synthesize(data, "multi")
        best = solve(build_multi_lp(data, margin=True), "highs")
        delta = 1e-6 * float(np.max(data.production))
        if res.status == INFEASIBLE:
            n_infeas += 1
            verdict_ok &= best.success and best.objective <= delta * (1 + 1e-6) + 1e-9
            continue
        assert res.stabilizing
        verdict_ok &= best.objective >= delta * (1 - 1e-6) - 1e-9
        n_feas += 1
        ctl = synthesize(data, "multi-margin")
        Tmax = max(cycle_time(p) for p in ctl.profiles)
        total, rate = coverage_rates(data, ctl.profiles)
        margin = float(np.min(rate - data.production))
        H = min(max(40 * Tmax, 8 * np.max(total) / margin), MAX_CYCLES * Tmax)
        for profs in (ctl.profiles, res.profiles):
            total, _ = coverage_rates(data, profs)
            for _ in range(8):
                theta0 = rng.uniform(0, 1, data.n_robots)
                tr = simulate(data, profs, SimConfig(horizon=H, theta0=theta0, record="none"))
                runs += 1
                # positive margin: the field never exceeds sum_r c_r tau_r from a zero start
                bounded_ok &= bool(np.all(tr.point_final_max <= total * (1 + 1e-9)))
                if profs is ctl.profiles:
                    bounded_ok &= tr.converged_periodic
    ok = bounded_ok and verdict_ok and n_feas >= 50 and n_infeas >= 1
    report(capsys, 5, ok,
           f"{n_feas} feasible tasks ({runs} phase runs bounded: {bounded_ok}), {n_infeas} infeasible "
           f"verdicts confirmed by the margin maximization: {verdict_ok}")


# --------------------------------------------------------------------------
# 6. averaging per-cycle controllers


def test_criterion_6_averaging(capsys):
    rng = np.random.default_rng(31)
    ok_count, some_bad = 0, 0
    total = 60
    for _ in range(total):
        k = int(rng.integers(1, 6))
        data, _ = random_single(rng)
        n = data.basis_sizes[0]
        profs = [ReciprocalProfile(rng.uniform(0.2, 5.0, n) * rng.uniform(0.2, 5.0)) for _ in range(k)]
        tau = np.array([[coverage_time(p, cov) for cov in data.coverage[0]] for p in profs]).sum(axis=0)
        T = sum(cycle_time(p) for p in profs)
        c = data.consumption[0]
        # aggregate inequality: sum_l c tau_l > sum_l p T_l at every point
        p = np.minimum(c * tau / T * rng.uniform(0.3, 0.999, len(c)), 0.99 * c)
        data = single_task([list(cv.intervals) if not cv.full else "full" for cv in data.coverage[0]],
                           p, c, data.alpha_lo[0], data.alpha_hi[0])
        some_bad += any(np.min(stability_margin(q, data)) <= 0 for q in profs)
        ok_count += bool(np.all(stability_margin(average_controllers(profs), data) > 0))
    ok = ok_count == total
    report(capsys, 6, ok,
           f"{ok_count}/{total} averaged controllers stabilizing ({some_bad} constructions contain "
           f"a per-cycle controller that alone is not)")


# --------------------------------------------------------------------------
# 7. scale


def test_criterion_7_scale(capsys):
    t0 = time.perf_counter()
    data = prepare(grid_task())
    res = synthesize(data, "margin")
    grid_wall = time.perf_counter() - t0
    small = prepare(ten_point_task())
    t1 = time.perf_counter()
    feas = solve(build_feasibility_lp(small))
    small_wall = time.perf_counter() - t1
    T = cycle_time(res.profiles[0])
    ok = res.feasible and grid_wall < 60 and feas.success and small_wall < 1
    report(capsys, 7, ok,
           f"grid margin program (n=280, m={data.n_points}): {grid_wall:.2f} s, B = {res.objective:.4g} s, "
           f"T = {T:.4g} s; ten-point feasibility program: {1000 * small_wall:.1f} ms")


# --------------------------------------------------------------------------
# 8. noise sweep


def test_criterion_8_noise_sweep(capsys):
    data = prepare(ten_point_task())
    res = synthesize(data, "margin")
    prof = res.profiles[0]
    eps_b = float(np.min(robustness_bound(res, data)))
    levels = np.linspace(0.0, 0.9 * eps_b, 6)
    rows = noise_sweep(data, prof, levels, trials=20, horizon=2500.0, seed=1)
    mean = np.array([r["mean"] for r in rows])
    spread = np.array([r["max"] - r["min"] for r in rows])
    sem = np.array([r["std"] for r in rows]) / np.sqrt(20)
    zero = rows[0]
    coincide = zero["mean"] == zero["min"] == zero["max"] and zero["std"] == 0.0
    mean_trend = np.polyfit(levels, mean, 1)[0] > 0 and np.all(np.diff(mean) >= -2 * (sem[1:] + sem[:-1]))
    spread_trend = np.polyfit(levels, spread, 1)[0] > 0 and spread[-1] > spread[0]
    bounded = all(r["bounded"] == 1.0 for r in rows)
    ok = coincide and mean_trend and spread_trend and bounded
    table = ", ".join(f"{lv:.4f}: {m:.3f}/{s:.3f}" for lv, m, s in zip(levels, mean, spread))
    report(capsys, 8, ok,
           f"zero-noise statistics coincide {coincide}; mean/spread by level [{table}]; "
           f"trends up {mean_trend}/{spread_trend}; all bounded {bounded} (bound {eps_b:.4f})")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
