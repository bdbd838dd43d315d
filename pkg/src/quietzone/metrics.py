"""Figures of merit for a synthesized cloak."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegenerateMetric, EstimationFailure
from .geometry import circle_points, control_point_count, device_points
from .incident import POINT_SOURCE, incident_field
from .scattering import scattered_field, solve_scattering
from .synthesis import METRIC_DENSITY, device_field, metric_circle

RAY_COUNT = 360
RAY_STEPS_PER_WAVELENGTH = 50
_COARSE = 10
THRESHOLD_FACTOR = 100.0


@dataclass(frozen=True)
class FieldGrid:
    """Samples on a uniform nx-by-ny lattice covering ``window`` = (xmin, ymin, xmax, ymax).

    ``values`` has shape (ny, nx); row j is y = ys[j].
    """

    window: tuple
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.window
        if not (xmax > xmin and ymax > ymin):
            raise ContractError(f"degenerate window {self.window}")
        if self.values.shape != (self.ny, self.nx):
            raise ContractError(f"values shape {self.values.shape} != ({self.ny}, {self.nx})")

    @staticmethod
    def lattice(window, nx, ny):
        xmin, ymin, xmax, ymax = window
        xs = np.linspace(xmin, xmax, nx)
        ys = np.linspace(ymin, ymax, ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)

    def points(self):
        return self.lattice(self.window, self.nx, self.ny)

    def same_window(self, other):
        return (tuple(self.window) == tuple(other.window)
                and (self.nx, self.ny) == (other.nx, other.ny))

    def with_values(self, values):
        return FieldGrid(self.window, self.nx, self.ny, values)

    def bilinear(self, x):
        """Bilinear interpolation of the samples at points ``x`` (..., 2)."""
        xmin, ymin, xmax, ymax = self.window
        x = np.asarray(x, dtype=float)
        fx = (x[..., 0] - xmin) / (xmax - xmin) * (self.nx - 1)
        fy = (x[..., 1] - ymin) / (ymax - ymin) * (self.ny - 1)
        i0 = np.clip(np.floor(fx).astype(int), 0, self.nx - 2)
        j0 = np.clip(np.floor(fy).astype(int), 0, self.ny - 2)
        tx, ty = fx - i0, fy - j0
        v = self.values
        return ((1 - tx) * (1 - ty) * v[j0, i0] + tx * (1 - ty) * v[j0, i0 + 1]
                + (1 - tx) * ty * v[j0 + 1, i0] + tx * ty * v[j0 + 1, i0 + 1])


@dataclass(frozen=True)
class CloakMetrics:
    omega: float
    residual_cloak: float
    residual_quiet: float
    reduction_percent: float
    device_radius_estimate: float


def min_circle_samples(radius, k):
    """Samples needed at lambda/4 spacing (at least 16)."""
    lam = 2 * math.pi / k
    return max(16, math.ceil(2 * math.pi * radius / (lam / 4)))


def l2_circle(field, radius, n_samples, k, offset=0.0):
    """sqrt(2 pi r / n * sum |u(x_j)|^2) over equispaced samples of |x| = radius.

    ``field`` maps an (n, 2) array of points to n complex values.
    """
    need = min_circle_samples(radius, k)
    if n_samples < need:
        raise ContractError(f"{n_samples} samples on r={radius} undersample; need >= {need}")
    pts = circle_points(radius, n_samples, offset)
    vals = np.asarray(field(pts))
    return math.sqrt(2 * math.pi * radius / n_samples * float(np.sum(np.abs(vals) ** 2)))


def _panel_edges(radius, k, n_grade=40):
    """Angle panels on (0, 2 pi), graded geometrically toward both ends.

    Panels away from the ends span at most a quarter wavelength of arc.
    """
    lam = 2 * math.pi / k
    graded = 0.5 * np.pi * 2.0 ** -np.arange(n_grade, 0, -1.0)
    pieces = max(2, math.ceil(radius * np.pi / (lam / 4)))
    middle = np.linspace(0.5 * np.pi, 1.5 * np.pi, pieces + 1)
    return np.concatenate([[0.0], graded, middle, 2 * np.pi - graded[::-1], [2 * np.pi]])


def incident_norm(spec, radius, k, order=16):
    """L2 norm of u_i on |x| = radius, robust to a source on or near the circle.

    The trapezoid rule converges slowly when the point source's logarithmic
    singularity touches the circle, so the angle is measured from the source
    direction and integrated with Gauss-Legendre panels refined toward it.
    """
    if spec.kind != POINT_SOURCE:
        n = 4 * min_circle_samples(radius, k)
        return l2_circle(lambda p: incident_field(spec, p, k), radius, n, k, 0.5)
    edges = _panel_edges(radius, k)
    x, w = np.polynomial.legendre.leggauss(order)
    lo, width = edges[:-1, None], np.diff(edges)[:, None]
    t = (lo + width * (x + 1) / 2).ravel()
    wt = (width * w / 2).ravel()
    theta_s = math.atan2(spec.position[1], spec.position[0])
    pts = radius * np.stack([np.cos(theta_s + t), np.sin(theta_s + t)], axis=-1)
    vals = incident_field(spec, pts, k)
    return math.sqrt(radius * float(np.sum(wt * np.abs(vals) ** 2)))


def _ratio(num, den, what):
    if den == 0.0:
        raise DegenerateMetric(f"{what}: reference norm vanishes")
    return num / den


def residual_pair(scenario, coeffs, omega, offset=0.5):
    """(||u_i + u_d|| / ||u_i|| on |x| = alpha, ||u_d|| / ||u_i|| on |x| = gamma)."""
    k = scenario.wavenumber(omega)
    lam = scenario.wavelength(omega)
    devices = device_points(scenario)
    src = scenario.source
    over = scenario.control_oversample

    def samples(radius):
        n = METRIC_DENSITY * control_point_count(radius, lam, over)
        return max(n, min_circle_samples(radius, k))

    # the cloak ratio shares one sampling, so b = 0 gives exactly 1
    n_a = samples(scenario.alpha)
    num_a = l2_circle(lambda p: incident_field(src, p, k) + device_field(coeffs, devices, p, k),
                      scenario.alpha, n_a, k, offset)
    den_a = l2_circle(lambda p: incident_field(src, p, k), scenario.alpha, n_a, k, offset)
    num_g = l2_circle(lambda p: device_field(coeffs, devices, p, k),
                      scenario.gamma, samples(scenario.gamma), k, offset)
    den_g = incident_norm(src, scenario.gamma, k)
    return (_ratio(num_a, den_a, "cloak residual"), _ratio(num_g, den_g, "quiet residual"))


def boundary_traces(scenario, coeffs, boundary, k):
    nodes = boundary.nodes()
    u_i = incident_field(scenario.source, nodes.x, k)
    if coeffs is None or not np.any(coeffs.b):
        return u_i, u_i
    u_d = device_field(coeffs, device_points(scenario), nodes.x, k)
    return u_i, u_i + u_d


def scattering_reduction(scenario, coeffs, boundary, omega):
    """100 * ||u_d + u_s(devices on)|| / ||u_s(devices off)||, norms on |x| = gamma.

    The numerator is the total field with devices active minus the bare
    incident wave.  ``boundary=None`` means no obstacle.
    """
    k = scenario.wavenumber(omega)
    lam = scenario.wavelength(omega)
    devices = device_points(scenario)
    pts = metric_circle(scenario.gamma, lam, scenario.control_oversample)
    n = len(pts)
    u_d = (device_field(coeffs, devices, pts, k) if coeffs is not None and np.any(coeffs.b)
           else np.zeros(n, dtype=complex))
    if boundary is None:
        u_s_off = np.zeros(n, dtype=complex)
        u_s_on = np.zeros(n, dtype=complex)
    else:
        trace_off, trace_on = boundary_traces(scenario, coeffs, boundary, k)
        dens_off = solve_scattering(boundary, trace_off, k, omega)
        dens_on = dens_off if trace_on is trace_off else solve_scattering(boundary, trace_on, k, omega)
        u_s_off = scattered_field(boundary, dens_off, pts, k)
        u_s_on = u_s_off if dens_on is dens_off else scattered_field(boundary, dens_on, pts, k)
    num = np.linalg.norm(u_d + u_s_on)
    den = np.linalg.norm(u_s_off)
    return 100.0 * _ratio(float(num), float(den), "scattering reduction")


def _abs_device_field(coeffs, devices, pts, k):
    with np.errstate(invalid="ignore", over="ignore"):
        v = np.abs(device_field(coeffs, devices, pts, k))
    # overflow next to a device counts as "above any threshold"
    return np.where(np.isfinite(v), v, np.inf)


def device_radius(coeffs, devices, scenario, omega, n_rays=RAY_COUNT, step=None):
    """Largest distance from a device point to the level set |u_d| = 100 max_{|x|=alpha} |u_i|.

    Each ray from x_m is marched outward in steps of lambda/50 (coarse
    steps of 10 first, then refined inside the bracketing interval) until
    |u_d| first falls below the threshold.
    """
    k = scenario.wavenumber(omega)
    lam = scenario.wavelength(omega)
    step = lam / RAY_STEPS_PER_WAVELENGTH if step is None else step
    devices = np.asarray(devices, dtype=float)
    ring = metric_circle(scenario.alpha, lam, scenario.control_oversample)
    threshold = THRESHOLD_FACTOR * np.abs(incident_field(scenario.source, ring, k)).max()

    angles = 2 * np.pi * np.arange(n_rays) / n_rays
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    max_steps = int(math.floor(scenario.delta / step))
    coarse = step * _COARSE
    n_coarse = max_steps // _COARSE + 1
    best = 0.0
    for m, xm in enumerate(devices):
        # coarse pass: first coarse sample below threshold on each ray
        first = np.full(n_rays, -1)
        pending = np.arange(n_rays)
        block = 16
        for lo in range(1, n_coarse + 1, block):
            if pending.size == 0:
                break
            idx = np.arange(lo, min(lo + block, n_coarse + 1))
            radii = idx * coarse
            pts = xm + radii[None, :, None] * dirs[pending][:, None, :]
            below = _abs_device_field(coeffs, devices, pts, k) < threshold
            hit = below.any(axis=1)
            first[pending[hit]] = idx[np.argmax(below[hit], axis=1)]
            pending = pending[~hit]
        if pending.size:
            raise EstimationFailure(
                f"|u_d| stays above {threshold:.3e} within delta of device {m + 1} "
                f"on {pending.size} rays")
        # fine pass over the coarse interval that precedes each crossing
        fine_idx = np.arange(1, _COARSE + 1)
        start = (first - 1) * coarse
        radii = start[:, None] + fine_idx[None, :] * step
        pts = xm + radii[:, :, None] * dirs[:, None, :]
        below = _abs_device_field(coeffs, devices, pts, k) < threshold
        # the coarse sample itself is below, so every row has a hit
        r_ray = radii[np.arange(n_rays), np.argmax(below, axis=1)]
        best = max(best, float(r_ray.max()))
    return best


def cloak_metrics(scenario, coeffs, omega, boundary=None):
    rc, rq = residual_pair(scenario, coeffs, omega)
    try:
        red = scattering_reduction(scenario, coeffs, boundary, omega)
    except DegenerateMetric:
        red = float("nan")
    radius = device_radius(coeffs, device_points(scenario), scenario, omega)
    return CloakMetrics(omega, rc, rq, red, radius)
