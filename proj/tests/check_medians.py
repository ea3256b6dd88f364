#!/usr/bin/env python3
"""Recompute the medians table from runs.csv and compare with medians.csv.

usage: check_medians.py <tacbench> <work-dir>
"""

import csv
import shutil
import statistics
import subprocess
import sys
from pathlib import Path

ORGANS = ["Brain", "Heart", "Kidney", "Lung", "Bladder"]


def run(*args, expect_ok=True):
    proc = subprocess.run(args, capture_output=True, text=True)
    if expect_ok and proc.returncode != 0:
        sys.exit(f"command failed ({proc.returncode}): {' '.join(map(str, args))}\n{proc.stderr}")
    return proc


def main():
    tacbench, work = sys.argv[1], Path(sys.argv[2])
    shutil.rmtree(work, ignore_errors=True)

    bad = run(tacbench, "run", "--out", str(work / "nothing"), expect_ok=False)
    if bad.returncode == 0 or "tacbench:" not in bad.stderr:
        sys.exit("run without a manifest should fail with a diagnostic")

    run(tacbench, "generate", "--patients", "4", "--curves-per-organ", "40", "--seed", "7", "--out", str(work))
    run(tacbench, "run", "--quiet", "--out", str(work),
        "--methods", "KMeans,GMM,FCM,DBSCAN,Birch,PcaMBK", "--set", "Birch.threshold=100")
    run(tacbench, "report", "--out", str(work))
    stats = run(tacbench, "stats", "--out", str(work), "--a", "GMM", "--b", "KMeans", "--m", "15")
    if '"wilcoxonAccuracy"' not in stats.stdout:
        sys.exit("stats output lacks the Wilcoxon entry")

    columns = ["accuracy"] + [f"precision_{o}" for o in ORGANS] + [f"recall_{o}" for o in ORGANS]
    values = {}
    with open(work / "runs.csv", newline="") as f:
        for row in csv.DictReader(f):
            if row["status"] != "ok":
                continue
            per_method = values.setdefault(row["method"], {c: [] for c in columns})
            for c in columns:
                per_method[c].append(float(row[c]))

    checked = 0
    with open(work / "medians.csv", newline="") as f:
        for row in csv.DictReader(f):
            method = row["method"]
            if method not in values:
                sys.exit(f"{method}: in medians.csv but has no successful runs")
            for c in columns:
                sample = values[method][c]
                want = statistics.median(sample)
                got = float(row[f"{c}_median"])
                if got != want:
                    sys.exit(f"{method} {c}: median {got!r} != recomputed {want!r}")
                sd = statistics.pstdev(sample)
                if abs(float(row[f"{c}_sd"]) - sd) > 1e-12:
                    sys.exit(f"{method} {c}: sd {row[f'{c}_sd']} != recomputed {sd!r}")
                checked += 1
    if checked != len(values) * len(columns):
        sys.exit(f"checked {checked} cells, expected {len(values) * len(columns)}")
    print(f"{checked} median cells match")


if __name__ == "__main__":
    main()
