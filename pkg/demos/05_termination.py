"""Stopping rules: IGD stagnation of the normalized front and HV stagnation."""

import numpy as np

from pspblemo.metrics import HvTerminationMonitor, IgdTerminationMonitor

t = np.linspace(0, 1, 20)
front = np.column_stack([t, 1 - t])

# %% A frozen front stops after omega + 1 generations
igd_m = IgdTerminationMonitor(epsilon=1e-2, omega=5)
hv_m = HvTerminationMonitor(threshold=1e-3, omega=10, ref_point=[1.1, 1.1])
print("IGD monitor stops at generation", [igd_m.update(front) for _ in range(20)].index(True) + 1)
print("HV monitor stops at generation", [hv_m.update(front) for _ in range(20)].index(True) + 1)

# %% A front whose ideal point keeps moving never satisfies the IGD rule
moving = IgdTerminationMonitor(epsilon=1e-2, omega=5)
stops = [moving.update(front - 0.02 * g) for g in range(50)]
print("moving front stopped:", any(stops))
print("last change terms (ideal, nadir, IGD):", np.round(moving.deltas[-1], 4))
