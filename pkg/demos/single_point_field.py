"""Steady-state field of one point seen twice per cycle, checked by simulation."""

import numpy as np

from persistent_monitoring import (
    CoveredTask,
    ReciprocalProfile,
    SimConfig,
    endpoint_values,
    field_profile,
    peak_field,
    simulate,
    stability_margin,
)

# one point covered on [0.2, 0.3] and [0.6, 0.7]; p = 1, c = 6, unit speed
data = CoveredTask.from_intervals([[[(0.2, 0.3), (0.6, 0.7)]]], [1.0], [[6.0]],
                                  [np.full(4, 0.5)], [np.full(4, 2.0)])
prof = ReciprocalProfile(np.ones(4))

print("margin (s):", stability_margin(prof, data)[0])
H, at = peak_field(data, 0, prof)
print(f"steady-state peak {H:.4f} at theta = {at:.2f}")
print("values at the interval ends:", endpoint_values(data, 0, prof))

tr = simulate(data, prof, SimConfig(horizon=10.0))
print("simulated max over the last cycle:", tr.z[tr.times >= 9.0, 0].max())

th, z = field_profile(data, 0, prof, resolution=10)
for t, v in zip(th, z):
    print(f"  theta {t:.2f}  Z {v:.3f}  " + "#" * int(40 * v))
