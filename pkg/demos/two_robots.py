"""Two robots sharing the coverage of points on a 32 x 32 grid."""

import numpy as np

from persistent_monitoring import SimConfig, cycle_time, multi_stability_margin, prepare, simulate, synthesize
from persistent_monitoring.scenarios import two_robot_grid_task

data = prepare(two_robot_grid_task())

res = synthesize(data, "multi-margin")
print("multi-robot program:", res.status, f"margin {res.objective:.4g} per second")
margin = multi_stability_margin(res.profiles, data)
print("smallest per-point margin:", margin.min())

Tmax = max(cycle_time(p) for p in res.profiles)
rng = np.random.default_rng(0)
for _ in range(3):
    theta0 = rng.uniform(0, 1, data.n_robots)
    tr = simulate(data, res.profiles, SimConfig(horizon=40 * Tmax, theta0=theta0, record="none"))
    print(f"  start {np.round(theta0, 2)}: max field {tr.max_field:.2f}, bounded {tr.converged_periodic}")
