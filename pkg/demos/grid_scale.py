"""Margin program for a 32 x 32 grid of points with 280 speed cells."""

import time

from persistent_monitoring import cycle_time, prepare, synthesize
from persistent_monitoring.scenarios import grid_task

t0 = time.perf_counter()
data = prepare(grid_task())
t1 = time.perf_counter()
res = synthesize(data, "margin")
t2 = time.perf_counter()
print(f"{data.n_points} points, coverage in {t1 - t0:.2f} s, program in {t2 - t1:.2f} s")
print(f"margin {res.objective:.2f} s, cycle {cycle_time(res.profiles[0]):.0f} s")
