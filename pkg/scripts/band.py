"""Scattering reduction across a band as wide as the central frequency.

    python scripts/band.py [--out DIR] [--n-freq 101]

A smaller --n-freq writes a reduced copy of the bundled scenario first.
"""
import argparse
import csv
import json
import os
import sys

from quietzone import cli
from quietzone.config import bundled_path


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--n-freq", type=int, default=101)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()
    scenario = "paper_fig2"
    if args.n_freq != 101:
        doc = json.loads(bundled_path("paper_fig2.json").read_text())
        doc.update(n_freq=args.n_freq, output_dir=f"band_{args.n_freq}")
        os.makedirs(args.out, exist_ok=True)
        scenario = os.path.join(args.out, f"band_{args.n_freq}.json")
        with open(scenario, "w") as fh:
            json.dump(doc, fh, indent=2)
    code = cli.main(["solve", scenario, "--out", args.out, "--workers", str(args.workers)])
    if code:
        return code
    name = "paper_fig2" if args.n_freq == 101 else f"band_{args.n_freq}"
    with open(os.path.join(args.out, name, "metrics.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'f (GHz)':>8}  reduction (%)")
    for r in rows:
        print(f"{float(r['omega_hz']) / 1e9:8.3f}  {float(r['reduction_percent']):.3e}")
    worst = max(float(r["reduction_percent"]) for r in rows)
    print(f"worst over {len(rows)} frequencies: {worst:.3e} %")
    return 0


if __name__ == "__main__":
    sys.exit(main())
