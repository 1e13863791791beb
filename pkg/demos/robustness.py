"""How much extra production a margin-maximizing controller tolerates."""

import numpy as np

from persistent_monitoring import analytic_threshold, epsilon_threshold, prepare, robustness_bound, synthesize
from persistent_monitoring.scenarios import ten_point_task

data = prepare(ten_point_task())
res = synthesize(data, "margin")
prof = res.profiles[0]

bound = float(np.min(robustness_bound(res, data)))
exact = analytic_threshold(data, prof)
print(f"margin B = {res.objective:.3f} s")
print(f"guaranteed tolerance {bound:.5f}, exact threshold {exact:.5f}")

trial = np.array([0.5, 0.9, 0.99, 1.01, 1.2]) * exact
out = epsilon_threshold(data, prof, trial, horizon=20000.0)
for eps, ok in zip(trial, out["bounded"]):
    print(f"  epsilon {eps:.5f}: {'bounded' if ok else 'divergent'}")
