"""Speed controllers for ten points along a figure-eight path."""

import time

import numpy as np

from persistent_monitoring import ReciprocalProfile, analyze, cycle_time, prepare, synthesize
from persistent_monitoring.scenarios import ten_point_task

task = ten_point_task()
t0 = time.perf_counter()
data = prepare(task)
print(f"coverage sets for {data.n_points} points in {time.perf_counter() - t0:.2f} s")

# driving at a constant 1 m/s leaves most points uncontrolled
const = ReciprocalProfile(np.full(data.basis_sizes[0], task.paths[0].length / data.basis_sizes[0]))
unstable = [r.point + 1 for r in analyze(data, const) if not r.stable]
print("constant speed, unstable points:", unstable)

for objective in ("feasible", "margin", "minmax"):
    t0 = time.perf_counter()
    res = synthesize(data, objective)
    wall = time.perf_counter() - t0
    prof = res.profiles[0]
    worst = max(r.peak for r in analyze(data, prof))
    print(f"{objective:8s} {res.status:10s} objective {res.objective:9.4f}  "
          f"T = {cycle_time(prof):7.1f} s  worst peak {worst:7.3f}  ({wall:.2f} s)")
