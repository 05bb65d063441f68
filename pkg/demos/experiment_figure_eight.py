"""Figure-eight trajectory at 4 m height.

The yaw rate flips sign after every full turn, tracing two tangent circles.
Compares the final and steady-state errors of both observers.

Usage: python demos/experiment_figure_eight.py [output_dir]
"""

import json
import sys

from slamobs.experiments import preset_experiment2, run_experiment

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out/eight"
bundle = run_experiment(preset_experiment2(seed=7, output_dir=out))

for name, summ in bundle["summary"]["observers"].items():
    print(f"\n{name}: {summ['jump_count']} jumps")
    print("  final       ", json.dumps({k: round(v, 4) for k, v in summ["final"].items()}))
    print("  last 20% avg", json.dumps({k: round(v, 4) for k, v in summ["steady_state_mean_last_20pct"].items()}))
