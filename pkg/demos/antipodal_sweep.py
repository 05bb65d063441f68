"""Why the jumps matter: attitude errors close to a half turn.

A gradient flow on the rotation group has critical points at half-turn
errors, so the smooth observer crawls when started near one. The hybrid
observer compares its cost with a few rotated candidates and jumps when one
is better by at least delta.

Here only the attitude is wrong; position and map start at the truth.
"""

import math
from dataclasses import replace

from slamobs.experiments import InitialEstimate, preset_experiment1, sweep, without_noise

base = without_noise(preset_experiment1())
base = replace(base, initial_estimate=InitialEstimate(0.0, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1.0))

angles = [f * math.pi for f in (0.5, 0.9, 0.95, 0.99)]
rows = sweep(base, angles, t_end=30.0)

print("initial   observer  jumps  att err @30s  Lyapunov @30s")
for r in rows:
    print(f"{r['initial_angle_rad'] / math.pi:5.2f} pi  {r['observer']:>8}  {r['jumps']:5d}"
          f"  {r['final_att_err_rad']:12.2e}  {r['final_lyapunov']:13.2e}")

for r in rows:
    if r["observer"] == "hybrid" and r["jumps"]:
        jumps = [rec for rec in r["trace"] if rec.event == "jump"]
        print(f"\n{r['initial_angle_rad'] / math.pi:.2f} pi: jumps at t = "
              + ", ".join(f"{j.time.t:.2f}s (q={j.state.q})" for j in jumps))
