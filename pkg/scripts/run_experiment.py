#!/usr/bin/env python3
"""End-to-end desk experiment: generate a cohort, inspect its statistics, and
run the cross-validated sweep, leaving every artifact in one output directory.

Usage:
    python scripts/run_experiment.py --out runs/demo --n 472 --seed 7 [--quick]
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from fbcsurv.cli import main as cli_main


def run(argv: list[str]) -> None:
    code = cli_main(argv)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/demo")
    parser.add_argument("--n", type=int, default=472)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--jobs", type=int, default=2)
    parser.add_argument("--quick", action="store_true", help="small k range and v1 only")
    args = parser.parse_args()

    out = Path(args.out)
    cohort = out / "cohort"
    run(["synth", "--n", str(args.n), "--seed", str(args.seed), "--out", str(cohort)])
    run(["stats", "--in", str(cohort), "--out", str(out / "stats")])
    run(["label", "--in", str(cohort), "--out", str(out / "labels")])
    run(["features", "--in", str(cohort), "--out", str(out / "features"), "--version", "v1"])
    run(["select", "--features", str(out / "features" / "features.csv"), "--k", "25", "--out", str(out / "ranking")])

    evaluate = [
        "evaluate", "--in", str(cohort), "--out", str(out / "evaluation"),
        "--seed", str(args.seed), "--jobs", str(args.jobs),
    ]
    if args.quick:
        evaluate += ["--versions", "v1", "--k-min", "5", "--k-max", "10"]
    run(evaluate)

    with open(out / "evaluation" / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: float(r["mean_accuracy"]), reverse=True)
    print("\ntop cells by mean CV accuracy:")
    for row in rows[:8]:
        print(
            f"  {row['version']:>3} {row['model']:>13} k={row['k']:>2} "
            f"mean={float(row['mean_accuracy']):.3f} std={float(row['std']):.3f}"
        )
    print(f"\nartifacts under {out}/")


if __name__ == "__main__":
    main()
