"""Time-domain frames of a pulse passing the cloak, devices inactive and active.

    python scripts/movie.py [--frames 40] [--out DIR]

Frames are binary PPM images under <out>/paper_movie/movie/{inactive,active}/.
"""
import argparse
import json
import os
import sys

from quietzone import cli


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs")
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = p.parse_args()
    code = cli.main(["movie", "paper_movie", "--frames", str(args.frames), "--out", args.out,
                     "--workers", str(args.workers)])
    if code:
        return code
    path = os.path.join(args.out, "paper_movie", "movie", "summary.json")
    with open(path) as fh:
        s = json.load(fh)
    print(f"probes outside gamma: {s['probe_count']}")
    print(f"peak disturbance / peak incident, devices inactive: {s['inactive_probe_ratio']:.3e}")
    print(f"peak disturbance / peak incident, devices active:   {s['active_probe_ratio']:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
