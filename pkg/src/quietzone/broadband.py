"""Frequency sweeps and the inverse transform to time-domain snapshots.

A real pulse is rebuilt from its positive-frequency band,

    u(x, t) = Re[ sum_j w_j g(w_j) u(x, w_j) exp(-i w_j t) ] / pi,

with trapezoidal weights w_j on a uniform grid covering the band.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ContractError, QuietzoneError, SynthesisFailure
from .geometry import device_points
from .incident import envelope, incident_field
from .linalg import DEFAULT_CUTOFF
from .metrics import FieldGrid, boundary_traces
from .scattering import scattered_field, solve_scattering
from .synthesis import DeviceCoefficients, SynthesisReport, device_field, solve_devices

DURATION_WAVELENGTHS = 50.5


@dataclass(frozen=True)
class FrequencyGrid:
    omegas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.omegas.shape != self.weights.shape or self.omegas.ndim != 1:
            raise ContractError("omegas and weights must be matching 1-D arrays")
        if np.any(np.diff(self.omegas) <= 0):
            raise ContractError("omegas must be strictly ascending")

    def __len__(self):
        return len(self.omegas)


@dataclass(frozen=True)
class BandResult:
    omega: float
    coeffs: DeviceCoefficients
    report: SynthesisReport


@dataclass(frozen=True)
class TimeSeriesField:
    times: np.ndarray
    grids: tuple

    def __post_init__(self):
        if len(self.times) != len(self.grids):
            raise ContractError("one grid per time is required")
        if self.grids and not all(g.same_window(self.grids[0]) for g in self.grids):
            raise ContractError("time grids must share one window")

    def stack(self):
        return np.stack([g.values for g in self.grids])


def frequency_grid(omega0, bandwidth, n_freq):
    """Uniform grid on [omega0 - B/2, omega0 + B/2], endpoints included."""
    if n_freq < 1:
        raise ContractError("n_freq must be >= 1")
    if n_freq == 1 or bandwidth == 0:
        if n_freq != 1:
            raise ContractError("a zero bandwidth admits a single frequency only")
        return FrequencyGrid(np.array([float(omega0)]), np.array([1.0]))
    lo, hi = omega0 - bandwidth / 2, omega0 + bandwidth / 2
    if lo <= 0:
        raise ContractError("band must stay at positive frequencies")
    omegas = np.linspace(lo, hi, n_freq)
    omegas[0], omegas[-1] = lo, hi
    h = (hi - lo) / (n_freq - 1)
    weights = np.full(n_freq, h)
    weights[[0, -1]] = h / 2
    return FrequencyGrid(omegas, weights)


def scenario_grid(scenario):
    return frequency_grid(scenario.omega0, scenario.bandwidth, scenario.n_freq)


def envelope_values(scenario, grid):
    src = scenario.source
    return np.array([envelope(w, scenario.omega0, scenario.bandwidth, src.sigma)
                     for w in grid.omegas])


def parallel_map(fn, items, workers=1):
    """Ordered map, in a process pool when ``workers`` > 1."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _solve_one(scenario, cutoff, omega):
    try:
        coeffs, report = solve_devices(scenario, float(omega), cutoff)
    except SynthesisFailure:
        raise
    except QuietzoneError as exc:
        raise SynthesisFailure(f"synthesis failed at omega={omega:.6e}: {exc}", omega=omega) from exc
    return BandResult(float(omega), coeffs, report)


def band_synthesis(scenario, cutoff=DEFAULT_CUTOFF, workers=1, grid=None):
    """solve_devices at every band frequency, ordered by omega."""
    grid = scenario_grid(scenario) if grid is None else grid
    return parallel_map(partial(_solve_one, scenario, cutoff), grid.omegas, workers)


def field_mask(scenario, boundary, points, source_clearance=None, device_clearance=None):
    """Points where the exterior field is physical and finite.

    Excluded: the obstacle interior, a half-wavelength around a point source
    and, by default, a disk of radius delta - alpha around each device point
    (the devices occupy that region; the field there is not part of the
    experiment and grows without bound at x_m).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    lam0 = scenario.wavelength0
    keep = np.ones(len(pts), dtype=bool)
    src = scenario.source
    if src.kind == "point_source":
        clear = lam0 / 2 if source_clearance is None else source_clearance
        keep &= np.hypot(*(pts - np.asarray(src.position)).T) > clear
    clear = scenario.delta - scenario.alpha if device_clearance is None else device_clearance
    for xm in device_points(scenario):
        keep &= np.hypot(*(pts - xm).T) > clear
    if boundary is not None:
        keep[keep] &= ~boundary.contains(pts[keep])
    return keep.reshape(np.shape(points)[:-1])


@dataclass(frozen=True)
class FrequencyFields:
    """Incident field and the two disturbances (devices off / on) at one omega."""

    omega: float
    incident: np.ndarray
    disturbance_off: np.ndarray
    disturbance_on: np.ndarray


def frequency_fields(scenario, boundary, points, mask, result):
    """u_i, u_s(off) and u_d + u_s(on) at masked points; zero elsewhere."""
    omega = result.omega
    k = scenario.wavenumber(omega)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    keep = np.asarray(mask).reshape(-1)
    sub = pts[keep]
    out = [np.zeros(len(pts), dtype=complex) for _ in range(3)]
    out[0][keep] = incident_field(scenario.source, sub, k)
    coeffs = result.coeffs
    u_d = device_field(coeffs, device_points(scenario), sub, k)
    if boundary is None:
        out[2][keep] = u_d
    else:
        trace_off, trace_on = boundary_traces(scenario, coeffs, boundary, k)
        dens_off = solve_scattering(boundary, trace_off, k, omega)
        dens_on = solve_scattering(boundary, trace_on, k, omega)
        out[1][keep] = scattered_field(boundary, dens_off, sub, k)
        out[2][keep] = u_d + scattered_field(boundary, dens_on, sub, k)
    shape = np.shape(points)[:-1]
    return FrequencyFields(omega, *(v.reshape(shape) for v in out))


def band_fields(scenario, boundary, points, mask, results, workers=1):
    fn = partial(frequency_fields, scenario, boundary, points, mask)
    return parallel_map(fn, results, workers)


def _check_band(values, grid, env):
    if len(values) != len(grid) or len(env) != len(grid):
        raise ContractError(
            f"need one field and one envelope value per frequency ({len(grid)}), "
            f"got {len(values)} and {len(env)}")


def time_samples(values, grid, env, times):
    """Real signals at ``times`` for per-frequency complex samples.

    ``values[j]`` holds u(., omega_j) on any point layout; the result has
    shape (len(times),) + values[j].shape.  Frequencies are summed in grid
    order so the reduction is deterministic.
    """
    _check_band(values, grid, env)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    shape = np.shape(values[0])
    acc = np.zeros((len(times),) + shape, dtype=complex)
    for v, w, g, om in zip(values, grid.weights, env, grid.omegas):
        v = np.asarray(v)
        if v.shape != shape:
            raise ContractError("per-frequency samples differ in shape")
        if g == 0.0 or w == 0.0:
            continue
        phase = np.exp(-1j * om * times).reshape((-1,) + (1,) * len(shape))
        acc += (w * g) * v[None] * phase
    return acc.real / math.pi


def time_field(grids, grid, env, t):
    """Snapshot at time ``t`` from one complex FieldGrid per frequency."""
    if not grids:
        raise ContractError("no frequency grids given")
    if not all(g.same_window(grids[0]) for g in grids):
        raise ContractError("frequency grids do not share one window")
    values = time_samples([g.values for g in grids], grid, env, [t])[0]
    return grids[0].with_values(values)


def time_series(grids, grid, env, times):
    if not grids:
        raise ContractError("no frequency grids given")
    if not all(g.same_window(grids[0]) for g in grids):
        raise ContractError("frequency grids do not share one window")
    frames = time_samples([g.values for g in grids], grid, env, times)
    return TimeSeriesField(np.asarray(times, dtype=float),
                           tuple(grids[0].with_values(f) for f in frames))


def default_duration(scenario):
    """Travel time over 50.5 central wavelengths (about 21 ns at 2.4 GHz)."""
    return DURATION_WAVELENGTHS * scenario.wavelength0 / scenario.c0


def snapshot_times(duration, n_frames):
    if not duration > 0:
        raise ContractError("duration must be positive")
    if n_frames < 1:
        raise ContractError("n_frames must be >= 1")
    if n_frames == 1:
        return np.array([0.0])
    times = np.linspace(0.0, duration, n_frames)
    times[-1] = duration
    return times
