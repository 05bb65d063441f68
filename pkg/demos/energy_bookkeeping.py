"""Which energy actually decreases along the flow.

Tracks two candidate Lyapunov functions on a noise-free run with a fourth
order integrator:

    V  = U + 0.5 |bias error|^2
    Vw = U + 0.5 |bias error|^2 / k_o

U is the landmark cost. With bias gain k_o < 1 only the weighted Vw is
non-increasing; V can rise while the bias estimate is still far off.
"""

from dataclasses import replace

import numpy as np

from slamobs.experiments import preset_experiment1, simulate, without_noise
from slamobs.hybrid import HybridRunConfig

cfg = without_noise(preset_experiment1())
cfg = replace(cfg, run=HybridRunConfig(dt=0.01, t_end=30.0, integrator="rkmk4"))
tr = simulate(cfg, "smooth").trace

k_o = cfg.gains.k_o
U = tr.column("measured_cost")
bias_sq = 2 * tr.column("bias_w_err") ** 2 + tr.column("bias_v_err") ** 2
V = U + 0.5 * bias_sq
Vw = U + 0.5 * bias_sq / k_o

for name, series in (("V ", V), ("Vw", Vw)):
    rises = np.diff(series)
    print(f"{name}: start {series[0]:9.4f}  end {series[-1]:.2e}  largest one-step rise {rises.max():+.2e} "
          f"at t={tr.times[1 + np.argmax(rises)]:.2f}s")
