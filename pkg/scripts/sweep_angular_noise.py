#!/usr/bin/env python3
"""Sweep the manual operator's residual-error level and report the resulting
alignment-error range (the no-guidance condition's accuracy band).

Usage:
    python scripts/sweep_angular_noise.py --levels 3,6,16 --seeds 5
"""

import argparse
import statistics
import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gds.engine import run
from gds.metrics import compute_metrics
from gds.presets import experiment_one_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", default="3,6,16", help="noise std-dev list [deg]")
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    print(f"{'noise [deg]':>12s} {'eps_phi [deg]':>16s} {'eps_theta [deg]':>16s}")
    for level in (float(x) for x in args.levels.split(",")):
        phis, thetas = [], []
        for seed in range(args.seeds):
            sc = experiment_one_scenario(
                "without", seed=seed, operator={"angular_noise": level}
            )
            m = compute_metrics(run(sc), sc.targets)
            phis.append(m.eps_phi_avg)
            thetas.append(m.eps_theta_avg)
        print(
            f"{level:12.1f} {statistics.mean(phis):8.2f} +- {statistics.stdev(phis):5.2f}"
            f" {statistics.mean(thetas):8.2f} +- {statistics.stdev(thetas):5.2f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
