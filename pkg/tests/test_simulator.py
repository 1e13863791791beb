import numpy as np
import pytest
from hypothesis import given, strategies as st

from persistent_monitoring import (
    CoveredTask,
    ReciprocalProfile,
    SimConfig,
    analytic_threshold,
    corollary_bound,
    coverage_time,
    cycle_time,
    epsilon_threshold,
    multi_stability_margin,
    noise_sweep,
    parameter_sweep,
    simulate,
    stability_margin,
)
from persistent_monitoring.simulator import default_dt, trial_seed, write_stats_csv, write_trace_csv
from helpers import random_multi, random_single, single_task

ONES = ReciprocalProfile(np.ones(4))


def e1(p=1.0):
    return single_task([[(0.2, 0.3), (0.6, 0.7)]], [p], [6.0], np.full(4, 0.5), np.full(4, 2.0))


def test_e1_event_exact_periodic():
    tr = simulate(e1(), ONES, SimConfig(horizon=20.0))
    last = (tr.times >= 19.0) & (tr.times <= 20.0)
    assert tr.z[last, 0].max() == pytest.approx(0.5, abs=1e-12)
    assert tr.z[last, 0].min() == 0.0
    t = np.linspace(19, 20, 333)
    np.testing.assert_allclose(tr.sample(t, 0), tr.sample(t - 1, 0), atol=1e-12)
    assert tr.converged_periodic


def test_always_covered_point_drains():
    data = single_task(["full"], [1.0], [6.0], np.ones(2), np.ones(2))
    tr = simulate(data, ReciprocalProfile(np.ones(2)), SimConfig(horizon=5.0, z0=7.0))
    assert tr.sample(1.4 - 1e-9, 0) > 0
    assert tr.sample(1.4, 0) == pytest.approx(0.0, abs=1e-12)
    assert np.all(tr.z[tr.times >= 1.4, 0] == 0.0)
    assert np.any(np.isclose(tr.times, 1.4))


def test_unstable_point_grows_by_margin_per_cycle():
    tr = simulate(e1(1.3), ONES, SimConfig(horizon=40.0))
    t = np.linspace(30, 31, 50)
    np.testing.assert_allclose(tr.sample(t + 1, 0) - tr.sample(t, 0), 0.1, atol=1e-12)
    assert not tr.converged_periodic
    assert tr.slope[0] == pytest.approx(0.1, rel=1e-9)


def test_fixed_step_matches_event_mode():
    data = e1()
    prof = ReciprocalProfile([1.0, 0.7, 1.3, 0.9])
    ev = simulate(data, prof, SimConfig(horizon=10 * cycle_time(prof)))
    for dt in (1e-2, 2e-3):
        fx = simulate(data, prof, SimConfig(horizon=10 * cycle_time(prof), mode="fixed", dt=dt))
        events_per_cycle = prof.n + 4
        C = (1.0 + 6.0) * events_per_cycle
        err = np.max(np.abs(fx.z[:, 0] - ev.sample(fx.times, 0)))
        assert err <= C * dt


def test_same_seed_is_bit_identical():
    data = e1()
    cfg = SimConfig(horizon=12.0, mode="fixed", noise=0.3, eta=0.2, seed=9)
    a, b = simulate(data, ONES, cfg), simulate(data, ONES, cfg)
    np.testing.assert_array_equal(a.z, b.z)
    np.testing.assert_array_equal(a.theta, b.theta)
    c = simulate(data, ONES, SimConfig(horizon=12.0, mode="fixed", noise=0.3, eta=0.2, seed=10))
    assert not np.array_equal(a.z, c.z)


def test_field_stays_nonnegative_and_theta_advances():
    rng = np.random.default_rng(0)
    data, prof = random_single(rng, m=6, n=9)
    tr = simulate(data, prof, SimConfig(horizon=15 * cycle_time(prof), mode="fixed", noise=0.5, seed=1))
    assert np.all(tr.z >= 0)
    unwrapped = np.unwrap(tr.theta[:, 0] * 2 * np.pi) / (2 * np.pi)
    assert np.all(np.diff(unwrapped) > 0)


def test_config_validation():
    assert SimConfig(horizon=1.0, noise=0.1).violations()
    assert SimConfig(horizon=-1.0).violations()
    assert SimConfig(horizon=1.0, eta=1.0).violations()
    assert not SimConfig(horizon=1.0, mode="fixed", noise=0.1).violations()
    with pytest.raises(ValueError):
        simulate(e1(), ONES, SimConfig(horizon=1.0, noise=0.1))


def test_epsilon_threshold_e1():
    data = e1()
    out = epsilon_threshold(data, ONES, [0.0, 0.1, 0.19, 0.25, 0.4], horizon=60.0)
    assert out["analytic"] == pytest.approx(0.2)
    assert out["guaranteed"] == pytest.approx(0.2)
    assert out["bounded"] == [True, True, True, False, False]
    assert out["empirical"] == pytest.approx(0.19)
    tr = simulate(data, ONES, SimConfig(horizon=60.0, epsilon=0.25))
    # growth 0.05 per cycle = (eps - threshold) * T
    assert tr.slope[0] == pytest.approx(0.05, rel=1e-9)


def test_corollary_bound_below_analytic_threshold():
    rng = np.random.default_rng(5)
    for _ in range(30):
        data, prof = random_single(rng, ratio=(0.2, 0.9))
        assert corollary_bound(data, prof) <= analytic_threshold(data, prof) + 1e-12


def test_noise_free_sweep_statistics_coincide():
    rows = noise_sweep(e1(), ONES, [0.0], trials=5, horizon=10.0)
    r = rows[0]
    assert r["mean"] == r["min"] == r["max"] and r["std"] == 0.0
    assert r["bounded"] == 1.0


def test_small_noise_stays_bounded():
    data = e1()
    half = 0.5 * corollary_bound(data, ONES)
    rows = noise_sweep(data, ONES, [half], trials=6, horizon=60.0, dt=2e-3)
    assert rows[0]["bounded"] == 1.0


def test_single_trial_has_zero_std_and_seeds_differ():
    rows = parameter_sweep(e1(), ONES, "eta", [0.3], trials=1, horizon=10.0)
    assert rows[0]["std"] == 0.0
    assert trial_seed(0, 1) != trial_seed(0, 2) and trial_seed(3, 1) == trial_seed(3, 1)


def test_multi_robot_two_robot_example():
    data = CoveredTask.from_intervals(
        [[[(0.2, 0.3), (0.6, 0.7)]], [[(0.5, 0.6)]]], [1.0], [[6.0], [6.0]],
        [np.full(4, 0.5), np.full(5, 1.0)], [np.full(4, 2.0), np.full(5, 4.0)])
    profs = [ReciprocalProfile(np.full(4, 0.25), True, 1.0), ReciprocalProfile(np.full(5, 0.2), True, 0.5)]
    assert multi_stability_margin(profs, data)[0] == pytest.approx(0.8)
    rng = np.random.default_rng(1)
    for _ in range(8):
        tr = simulate(data, profs, SimConfig(horizon=80.0, theta0=rng.uniform(0, 1, 2), record="none"))
        assert tr.converged_periodic
        assert tr.max_field <= 6.0 * 2.0 + 1e-9


@given(st.integers(0, 2**32 - 1))
def test_multi_margin_sign_predicts_boundedness(seed):
    rng = np.random.default_rng(seed)
    data, profs = random_multi(rng, ratio=(0.5, 0.8))
    if np.min(multi_stability_margin(profs, data)) <= 0:
        return
    Tmax = max(cycle_time(p) for p in profs)
    tr = simulate(data, profs, SimConfig(horizon=40 * Tmax, theta0=rng.uniform(0, 1, len(profs)),
                                         record="none"))
    assert tr.converged_periodic
    # from a zero start the field never exceeds sum_r c_r tau_r when the margin is positive
    bound = sum(data.consumption[r] * np.array([coverage_time(p, cov) for cov in data.coverage[r]])
                for r, p in enumerate(profs))
    assert np.all(tr.point_final_max <= bound * (1 + 1e-12))


def test_default_dt():
    prof = ReciprocalProfile([2.0, 0.5, 1.0])
    assert default_dt(prof) == pytest.approx(0.5 / 3 / 10)


def test_trace_and_stats_csv(tmp_path):
    tr = simulate(e1(), ONES, SimConfig(horizon=4.0))
    path = tmp_path / "trace.csv"
    write_trace_csv(path, tr)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,theta_1,z_1"
    assert len(lines) == len(tr.times) + 1
    write_trace_csv(path, tr, max_only=True)
    assert path.read_text().splitlines()[0] == "t,theta_1,z_max"
    rows = noise_sweep(e1(), ONES, [0.0, 0.1], trials=2, horizon=4.0)
    write_stats_csv(tmp_path / "s.csv", rows)
    head = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert head == "noise,mean,min,max,std,bounded_fraction"


def test_short_horizon_warns():
    with pytest.warns(UserWarning):
        simulate(e1(), ONES, SimConfig(horizon=2.0))


def test_margin_sign_matches_classification_for_random_single_tasks():
    rng = np.random.default_rng(11)
    for _ in range(10):
        data, prof = random_single(rng, m=4, ratio=(0.3, 0.7))
        T = cycle_time(prof)
        assert np.min(stability_margin(prof, data)) > 0
        tr = simulate(data, prof, SimConfig(horizon=8 * T, record="none"))
        assert tr.converged_periodic
