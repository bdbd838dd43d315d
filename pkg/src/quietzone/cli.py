"""``quietzone`` command line: solve, sweep-radius, movie, validate.

Exit status: 0 success, 1 invalid scenario or arguments, 2 synthesis or
numerical failure, 3 a validation suite failed.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace
from functools import partial
from pathlib import Path

import numpy as np

from . import broadband, export
from .config import ScenarioError, load_config, resolve_scenario
from .errors import DegenerateMetric, EstimationFailure, QuietzoneError, SynthesisFailure
from .geometry import device_points
from .metrics import FieldGrid, device_radius, residual_pair, scattering_reduction
from .synthesis import solve_devices
from .validation import run_all

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SYNTHESIS = 2
EXIT_VALIDATE = 3

OUT_ENV = "QUIETZONE_OUT"
DEFAULT_OUT = "quietzone_out"

METRICS_HEADER = ("omega_hz", "residual_cloak", "residual_quiet", "reduction_percent",
                  "device_radius_over_alpha")
SWEEP_HEADER = ("alpha_over_lambda0", "frequency_hz", "residual_cloak", "residual_quiet",
                "device_radius_over_alpha")
COEFF_HEADER = ("m", "n", "re", "im")
MOVIE_HEADER = ("frame", "time_ns", "incident_max", "disturbance_inactive_outside",
                "disturbance_active_outside")

# probe sampling for the time-domain figure of merit, in carrier periods
PROBE_SAMPLES_PER_PERIOD = 16
ARRIVAL_SIGMAS = 5.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _out_dir(cfg, out_arg):
    root = out_arg or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return Path(root) / cfg.output_dir


def _say(msg):
    print(msg, file=sys.stderr, flush=True)


# ---------------------------------------------------------------- solve

@dataclass(frozen=True)
class _MetricRow:
    omega: float
    residual_cloak: float
    residual_quiet: float
    reduction_percent: float
    radius_over_alpha: float
    note: str = ""

    def row(self):
        return (self.omega / (2 * math.pi), self.residual_cloak, self.residual_quiet,
                self.reduction_percent, self.radius_over_alpha)


def _metrics_one(cfg, result):
    sc, omega, coeffs = cfg.scenario, result.omega, result.coeffs
    rc, rq = residual_pair(sc, coeffs, omega)
    red = float("nan")
    if cfg.obstacle is not None:
        try:
            red = scattering_reduction(sc, coeffs, cfg.obstacle, omega)
        except DegenerateMetric:
            pass
    radius, note = float("nan"), ""
    if cfg.device_radius:
        try:
            radius = device_radius(coeffs, device_points(sc), sc, omega) / sc.alpha
        except EstimationFailure as exc:
            note = str(exc)
    return _MetricRow(omega, rc, rq, red, radius, note)


def _coeff_rows(coeffs):
    mat = coeffs.as_matrix()
    orders = range(-coeffs.n_multipole, coeffs.n_multipole + 1)
    for m in range(coeffs.device_count):
        for col, n in enumerate(orders):
            v = mat[m, col]
            yield (m + 1, n, v.real, v.imag)


def _sidecar(cfg, cutoff, result):
    rep = result.report
    return {
        "omega": result.omega,
        "frequency_hz": result.omega / (2 * math.pi),
        "n_multipole": result.coeffs.n_multipole,
        "device_count": result.coeffs.device_count,
        "cutoff": cutoff,
        "residual_cloak": rep.residual_cloak,
        "residual_quiet": rep.residual_quiet,
        "residual_cloak_step1": rep.residual_cloak_step1,
        "rank_step1": rep.rank_step1,
        "rank_step2": rep.rank_step2,
        "sigma_max_step1": rep.sigma_max_step1,
        "scenario": cfg.name,
    }


def _display_field(total, incident, mask):
    """Single-frequency display: Re(u) / |u_i|, clipped to [-1, 1]; masked points are 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(mask, total.real / np.abs(incident), 0.0)
    return np.clip(np.nan_to_num(v), -1.0, 1.0)


def _field_mask(cfg, pts):
    lam0 = cfg.scenario.wavelength0
    return broadband.field_mask(cfg.scenario, cfg.obstacle, pts,
                                source_clearance=lam0 / 2, device_clearance=lam0 / 2)


def write_field_images(cfg, result, out_dir):
    g = cfg.grid
    pts = FieldGrid.lattice(g.window, g.nx, g.ny)
    mask = _field_mask(cfg, pts)
    ff = broadband.frequency_fields(cfg.scenario, cfg.obstacle, pts, mask, result)
    inactive = _display_field(ff.incident + ff.disturbance_off, ff.incident, mask)
    active = _display_field(ff.incident + ff.disturbance_on, ff.incident, mask)
    export.write_ppm(out_dir / "fields" / "inactive.ppm", inactive)
    export.write_ppm(out_dir / "fields" / "active.ppm", active)


def run_solve(cfg, out_dir, cutoff=None, workers=1):
    cutoff = cfg.cutoff if cutoff is None else cutoff
    grid = broadband.scenario_grid(cfg.scenario)
    _say(f"solving {len(grid)} frequencies")
    results = broadband.band_synthesis(cfg.scenario, cutoff, workers, grid)
    rows = broadband.parallel_map(partial(_metrics_one, cfg), results, workers)
    for i, res in enumerate(results):
        stem = out_dir / "coefficients" / f"omega_{i:03d}"
        export.write_csv(stem.with_suffix(".csv"), COEFF_HEADER, _coeff_rows(res.coeffs))
        export.write_json(stem.with_suffix(".json"), _sidecar(cfg, cutoff, res))
    for r in rows:
        if r.note:
            _say(f"warning: device radius at {r.omega / (2 * math.pi):.6e} Hz: {r.note}")
    export.write_csv(out_dir / "metrics.csv", METRICS_HEADER, [r.row() for r in rows])
    if cfg.grid is not None:
        center = int(np.argmin(np.abs(grid.omegas - cfg.scenario.omega0)))
        write_field_images(cfg, results[center], out_dir)
    return results, rows


# ---------------------------------------------------------------- sweep-radius

def sweep_scenario(cfg, alpha_l0, frequency_hz):
    sc = cfg.scenario
    sw = cfg.sweep
    lam0 = cfg.lambda0
    alpha = alpha_l0 * lam0
    src = sc.source
    if src.kind == "point_source":
        if sw.source_over_alpha is not None:
            pos = tuple(alpha * v for v in sw.source_over_alpha)
        else:
            pos = tuple(v * alpha / sc.alpha for v in src.position)
        src = replace(src, position=pos)
    return sc.with_(alpha=alpha, delta=sw.delta_over_alpha * alpha,
                    gamma=sw.gamma_over_alpha * alpha, omega0=2 * math.pi * frequency_hz,
                    bandwidth=0.0, n_freq=1, source=src)


def _sweep_one(cfg, cutoff, task):
    alpha_l0, freq = task
    sc = sweep_scenario(cfg, alpha_l0, freq)
    omega = sc.omega0
    coeffs, _ = solve_devices(sc, omega, cutoff)
    rc, rq = residual_pair(sc, coeffs, omega)
    try:
        radius = device_radius(coeffs, device_points(sc), sc, omega) / sc.alpha
    except EstimationFailure:
        radius = float("nan")
    return (alpha_l0, freq, rc, rq, radius)


def run_sweep(cfg, out_dir, alphas=None, frequencies=None, cutoff=None, workers=1):
    cutoff = cfg.cutoff if cutoff is None else cutoff
    alphas = cfg.sweep.alphas if alphas is None else alphas
    freqs = cfg.sweep.frequencies_hz if frequencies is None else frequencies
    tasks = [(float(a), float(f)) for a in alphas for f in freqs]
    _say(f"sweeping {len(tasks)} (alpha, frequency) pairs")
    rows = broadband.parallel_map(partial(_sweep_one, cfg, cutoff), tasks, workers)
    export.write_csv(out_dir / "sweep_radius.csv", SWEEP_HEADER, rows)
    return rows


# ---------------------------------------------------------------- movie

def arrival_times(scenario, pts):
    src = scenario.source
    pts = np.asarray(pts, dtype=float)
    if src.kind == "point_source":
        d = np.hypot(*(pts - np.asarray(src.position)).reshape(-1, 2).T)
    else:
        d = pts.reshape(-1, 2) @ np.asarray(src.direction)
    return (d / scenario.c0).reshape(pts.shape[:-1])


@dataclass(frozen=True)
class MovieSummary:
    probe_count: int
    active_probe_ratio: float
    inactive_probe_ratio: float
    final_frame_inactive: float
    final_frame_active: float

    def as_dict(self):
        return dict(self.__dict__)


def probe_ratios(scenario, pts, mask, fields, grid, env, duration, probe_band):
    """max_t |disturbance| / max_t |incident| per probe, maximised over probes.

    Probes are masked lattice points outside gamma whose pulse peak arrives
    (with ARRIVAL_SIGMAS of margin) before ``duration``.  Time is sampled at
    PROBE_SAMPLES_PER_PERIOD samples per period of the highest frequency.
    """
    r = np.hypot(pts[..., 0], pts[..., 1])
    arrive = arrival_times(scenario, pts)
    sigma = scenario.source.sigma
    probes = mask & (r > scenario.gamma) & (arrive + ARRIVAL_SIGMAS * sigma <= duration)
    idx = np.flatnonzero(probes.reshape(-1))
    if idx.size == 0:
        return 0, float("nan"), float("nan")
    dt = 2 * math.pi / grid.omegas.max() / PROBE_SAMPLES_PER_PERIOD
    times = np.arange(0.0, duration + 0.5 * dt, dt)
    peak = {}
    for name, key in (("inc", "incident"), ("off", "disturbance_off"), ("on", "disturbance_on")):
        vals = [getattr(f, key).reshape(-1)[idx] for f in fields]
        peak[name] = np.zeros(idx.size)
        for lo in range(0, len(times), probe_band):
            sig = broadband.time_samples(vals, grid, env, times[lo:lo + probe_band])
            peak[name] = np.maximum(peak[name], np.abs(sig).max(axis=0))
    return (int(idx.size), float((peak["on"] / peak["inc"]).max()),
            float((peak["off"] / peak["inc"]).max()))


def run_movie(cfg, out_dir, n_frames=None, cutoff=None, workers=1):
    if cfg.grid is None:
        raise ScenarioError("invalid scenario key 'grid': movie needs a grid window", key="grid")
    cutoff = cfg.cutoff if cutoff is None else cutoff
    sc = cfg.scenario
    n_frames = cfg.n_frames if n_frames is None else n_frames
    duration = cfg.duration or broadband.default_duration(sc)
    grid = broadband.scenario_grid(sc)
    env = broadband.envelope_values(sc, grid)
    _say(f"movie: {len(grid)} frequencies, {n_frames} frames over {duration * 1e9:.3f} ns")
    results = broadband.band_synthesis(sc, cutoff, workers, grid)
    g = cfg.grid
    pts = FieldGrid.lattice(g.window, g.nx, g.ny)
    mask = _field_mask(cfg, pts)
    fields = broadband.band_fields(sc, cfg.obstacle, pts, mask, results, workers)
    for f in fields:
        if not (np.all(np.isfinite(f.disturbance_on)) and np.all(np.isfinite(f.disturbance_off))):
            raise SynthesisFailure(f"non-finite field on the movie grid at omega={f.omega:.6e}",
                                   omega=f.omega)

    times = broadband.snapshot_times(duration, n_frames)
    inc = broadband.time_samples([f.incident for f in fields], grid, env, times)
    off = broadband.time_samples([f.disturbance_off for f in fields], grid, env, times)
    on = broadband.time_samples([f.disturbance_on for f in fields], grid, env, times)
    outside = mask & (np.hypot(pts[..., 0], pts[..., 1]) > sc.gamma)

    manifest, stats = [], []
    for i, t in enumerate(times):
        scale = np.abs(inc[i][mask]).max()
        scale = scale if scale > 0 else 1.0
        for label, dist in (("inactive", off[i]), ("active", on[i])):
            frame = np.clip(np.where(mask, (inc[i] + dist) / scale, 0.0), -1.0, 1.0)
            export.write_ppm(out_dir / "movie" / label / f"frame_{i:04d}.ppm", frame)
        manifest.append((i, t * 1e9))
        stats.append((i, t * 1e9, scale, np.abs(off[i][outside]).max(initial=0.0),
                      np.abs(on[i][outside]).max(initial=0.0)))
    export.write_csv(out_dir / "movie" / "manifest.csv", ("frame", "time_ns"), manifest)
    export.write_csv(out_dir / "movie" / "frame_metrics.csv", MOVIE_HEADER, stats)

    n_probe, ratio_on, ratio_off = probe_ratios(sc, pts, mask, fields, grid, env, duration, 64)
    summary = MovieSummary(n_probe, ratio_on, ratio_off, stats[-1][3], stats[-1][4])
    export.write_json(out_dir / "movie" / "summary.json",
                      {**summary.as_dict(), "duration_s": duration, "n_frames": n_frames,
                       "n_freq": len(grid)})
    return summary


# ---------------------------------------------------------------- main

def _parse_list(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not values or any(not v > 0 for v in values):
        raise argparse.ArgumentTypeError("values must be positive")
    return values


def build_parser():
    p = _Parser(prog="quietzone", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario JSON file or bundled scenario name")
        sp.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--cutoff", type=float, help="TSVD cutoff (overrides cutoff_rel)")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="worker processes (default: CPU count)")

    common(sub.add_parser("solve", help="synthesize device coefficients and metrics"))
    sp = sub.add_parser("sweep-radius", help="residuals and device radius versus alpha")
    common(sp)
    sp.add_argument("--alphas", type=_parse_list, help="cloak radii in wavelengths, e.g. 2,4,6")
    sp.add_argument("--frequencies", type=_parse_list, help="frequencies in Hz")
    sp = sub.add_parser("movie", help="time-domain frames with devices inactive and active")
    common(sp)
    sp.add_argument("--frames", type=int, help="number of frames (overrides n_frames)")
    sp = sub.add_parser("validate", help="run the built-in oracle suites")
    sp.add_argument("--fast", action="store_true", help="reduced suite sizes")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        results = run_all(fast=args.fast)
        for r in results:
            print(r.line())
        return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATE

    cutoff = args.cutoff
    if cutoff is not None and not 0 < cutoff < 1:
        _say(f"error: invalid value '--cutoff': must lie in (0, 1), got {cutoff}")
        return EXIT_INVALID
    if args.workers < 1:
        _say("error: invalid value '--workers': must be >= 1")
        return EXIT_INVALID
    try:
        cfg = load_config(resolve_scenario(args.scenario))
        if args.command == "movie" and args.frames is not None and args.frames < 1:
            raise ScenarioError("invalid value '--frames': must be >= 1", key="n_frames")
        if args.command == "movie" and cfg.grid is None:
            raise ScenarioError("invalid scenario key 'grid': movie needs a grid window", key="grid")
    except ScenarioError as exc:
        _say(f"error: {exc}")
        return EXIT_INVALID

    out_dir = _out_dir(cfg, args.out)
    try:
        if args.command == "solve":
            run_solve(cfg, out_dir, cutoff, args.workers)
        elif args.command == "sweep-radius":
            run_sweep(cfg, out_dir, args.alphas, args.frequencies, cutoff, args.workers)
        elif args.command == "movie":
            summary = run_movie(cfg, out_dir, args.frames, cutoff, args.workers)
            _say(f"active/inactive probe ratios: {summary.active_probe_ratio:.3e} / "
                 f"{summary.inactive_probe_ratio:.3e}")
    except SynthesisFailure as exc:
        omega = exc.omega
        where = f" at omega={omega:.6e} rad/s" if omega is not None else ""
        _say(f"error: synthesis failed{where}: {exc}")
        return EXIT_SYNTHESIS
    except QuietzoneError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_SYNTHESIS
    _say(f"wrote {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
