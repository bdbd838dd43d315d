"""Residuals and device radius as the cloak grows (delta = 5 alpha, gamma = 10 alpha).

    python scripts/radius_sweep.py [--alphas 2,4,6,8,10] [--out DIR]
"""
import argparse
import csv
import math
import os
import sys

from quietzone import cli


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--alphas", default="2,4,6,8,10")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()
    code = cli.main(["sweep-radius", "paper_fig4", "--alphas", args.alphas,
                     "--out", args.out, "--workers", str(args.workers)])
    if code:
        return code
    with open(os.path.join(args.out, "paper_fig4", "sweep_radius.csv"), newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'alpha':>6} {'f (GHz)':>7} {'cloak':>10} {'quiet':>10} {'radius/alpha':>12}")
    for r in rows:
        print(f"{float(r['alpha_over_lambda0']):6g} {float(r['frequency_hz']) / 1e9:7.1f} "
              f"{float(r['residual_cloak']):10.2e} {float(r['residual_quiet']):10.2e} "
              f"{float(r['device_radius_over_alpha']):12.3f}")
    print(f"devices stay disjoint below {5 * math.sqrt(3) / 2:.3f} alpha")
    return 0


if __name__ == "__main__":
    sys.exit(main())
