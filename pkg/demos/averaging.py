"""Averaging per-cycle controllers into one fixed controller."""

import numpy as np

from persistent_monitoring import CoveredTask, ReciprocalProfile, average_controllers, stability_margin

# point 1 is seen on [0.1, 0.3], point 2 on [0.6, 0.8]
data = CoveredTask.from_intervals([[[(0.1, 0.3)], [(0.6, 0.8)]]], [0.7, 0.7], [[4.0, 4.0]],
                                  [np.full(4, 0.1)], [np.full(4, 10.0)])
# each controller lingers over one point and rushes past the other
first = ReciprocalProfile([3.0, 3.0, 0.3, 0.3])
second = ReciprocalProfile([0.3, 0.3, 3.0, 3.0])
for name, prof in (("first", first), ("second", second)):
    print(f"{name:7s} alone: margins {np.round(stability_margin(prof, data), 3)} s")
avg = average_controllers([first, second])
print(f"average      : margins {np.round(stability_margin(avg, data), 3)} s, alpha = {np.round(avg.alpha, 3)}")
