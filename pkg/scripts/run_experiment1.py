#!/usr/bin/env python3
"""Reproduce the guided-vs-manual drilling comparison with virtual operators.

Runs the built-in three-hole scenario under both conditions over a seed
list, averages the session metrics per condition, and prints the percent
relative differences (negative = guidance reduced the metric).

Usage:
    python scripts/run_experiment1.py --seeds 20 --out results/exp1
"""

import argparse
import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gds.engine import run
from gds.metrics import METRIC_FIELDS, compare, compute_metrics, mean_metrics
from gds.presets import experiment_one_scenario


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20, help="number of seeds (0..N-1)")
    ap.add_argument("--out", default=None, help="directory for the report JSON")
    ap.add_argument("--angular-noise", type=float, default=6.0,
                    help="manual-operator residual error std dev [deg]")
    args = ap.parse_args()

    per_condition = {"with": [], "without": []}
    for seed in range(args.seeds):
        for condition in ("with", "without"):
            sc = experiment_one_scenario(
                condition, seed=seed, operator={"angular_noise": args.angular_noise}
            )
            trace = run(sc)
            if not trace.complete:
                print(f"warning: {condition}/seed{seed} incomplete", file=sys.stderr)
            m = compute_metrics(trace, sc.targets)
            per_condition[condition].append(m)
            print(
                f"{condition:8s} seed={seed:2d}  t_tot={m.t_tot:7.2f}s  "
                f"E_tot={m.e_total:6.2f}J  eps=({m.eps_phi_avg:.2f}, {m.eps_theta_avg:.2f}) deg"
            )

    avg_w = mean_metrics(per_condition["with"])
    avg_wo = mean_metrics(per_condition["without"])
    report = compare(avg_w, avg_wo)

    print("\npercent relative difference, guided vs manual "
          "(negative = guidance reduced the metric):")
    for name in METRIC_FIELDS:
        d = report.percent_diff[name]
        shown = "undefined" if d is None else f"{d:+7.1f} %"
        print(f"  {name:14s} {shown}")

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "experiment1_report.json")
        with open(path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"\nreport written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
