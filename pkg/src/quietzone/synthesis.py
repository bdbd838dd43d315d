"""Device-field synthesis.

The device field is a sum of outgoing multipoles at the device points,

    u_d(x) = sum_m sum_{n=-N..N} b[m, n] H^(1)_n(k |x - x_m|) exp(i n theta_m),

and the coefficients come from two truncated-SVD solves: first cancel the
incident wave on the cloak circle, then, inside the near-nullspace of that
system, silence the field on the measurement circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SingularityError, SynthesisFailure
from .geometry import circle_points, control_point_count, control_points, device_points
from .incident import incident_field
from .linalg import DEFAULT_CUTOFF, tsvd_least_squares
from .specialfunc import hankel1_orders, hankel1_seq

METRIC_DENSITY = 4
_CHUNK_ENTRIES = 2 ** 21


@dataclass(frozen=True)
class DeviceCoefficients:
    """b[m, n] stored flat, device-major with n ascending from -N to N."""

    omega: float
    n_multipole: int
    device_count: int
    b: np.ndarray

    def __post_init__(self):
        expected = (2 * self.n_multipole + 1) * self.device_count
        if self.b.shape != (expected,):
            raise ContractError(f"coefficient vector has shape {self.b.shape}, expected ({expected},)")

    def as_matrix(self):
        return self.b.reshape(self.device_count, 2 * self.n_multipole + 1)

    def coefficient(self, m, n):
        """b_{m,n} with 1-based device index m."""
        return self.as_matrix()[m - 1, n + self.n_multipole]

    @classmethod
    def zeros(cls, omega, n_multipole, device_count):
        return cls(omega, n_multipole, device_count,
                   np.zeros((2 * n_multipole + 1) * device_count, dtype=complex))


@dataclass(frozen=True)
class SynthesisReport:
    residual_cloak: float
    residual_quiet: float
    residual_cloak_step1: float
    rank_step1: int
    rank_step2: int
    sigma_max_step1: float


def multipole_order(k, delta, alpha):
    """N = ceil(k (delta - alpha/2))."""
    if not delta > alpha / 2 > 0:
        raise ContractError("need delta > alpha/2 > 0")
    value = k * (delta - alpha / 2)
    return math.ceil(value - 1e-9 * max(1.0, value))


def _polar_from(points, center):
    d = points - center
    return np.hypot(d[:, 0], d[:, 1]), np.arctan2(d[:, 1], d[:, 0])


def field_matrix(points, devices, k, n_multipole):
    """Matrix M with (M b)_j = u_d(points[j]) for the flat coefficient layout."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    devices = np.atleast_2d(np.asarray(devices, dtype=float))
    orders = np.arange(-n_multipole, n_multipole + 1)
    blocks = []
    for m, xm in enumerate(devices):
        r, theta = _polar_from(points, xm)
        hit = np.flatnonzero(r == 0.0)
        if hit.size:
            raise SingularityError(f"evaluation point {hit[0]} coincides with device {m + 1}")
        h = hankel1_orders(n_multipole, k * r)
        blocks.append(h * np.exp(1j * np.outer(theta, orders)))
    return np.hstack(blocks)


def device_field(coeffs, devices, x, k):
    """u_d at points ``x`` of shape (..., 2).

    Orders +-n are paired: H_{-n} e^{-in theta} = (-1)^n H_n conj(e^{in theta}),
    so only orders 0..N are evaluated.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    out = np.zeros(flat.shape[0], dtype=complex)
    n_mp = coeffs.n_multipole
    bm = coeffs.as_matrix()
    orders = np.arange(n_mp + 1)
    sign = np.where(orders % 2, -1.0, 1.0)
    pos = bm[:, n_mp:]
    neg = sign * bm[:, n_mp::-1]          # (-1)^n b_{m,-n}
    neg[:, 0] = 0.0                       # n = 0 is counted once, in pos
    active = [m for m in range(coeffs.device_count) if np.any(bm[m] != 0)]
    chunk = max(256, _CHUNK_ENTRIES // (2 * orders.size))
    for lo in range(0, flat.shape[0], chunk):
        pts = flat[lo:lo + chunk]
        acc = np.zeros(pts.shape[0], dtype=complex)
        for m in active:
            r, theta = _polar_from(pts, devices[m])
            if np.any(r == 0.0):
                raise SingularityError(f"device field evaluated at device {m + 1}")
            h = hankel1_seq(n_mp, k * r)
            ang = np.exp(1j * np.outer(theta, orders))
            with np.errstate(invalid="ignore", over="ignore"):
                acc += (h * ang) @ pos[m] + (h * ang.conj()) @ neg[m]
        out[lo:lo + chunk] = acc
    return out.reshape(x.shape[:-1])


def metric_circle(radius, wavelength, oversample):
    """Out-of-sample circle: METRIC_DENSITY times the control density, shifted half a spacing."""
    n = METRIC_DENSITY * control_point_count(radius, wavelength, oversample)
    return circle_points(radius, n, offset=0.5)


def _rel(num, den):
    den = np.linalg.norm(den)
    return 0.0 if den == 0.0 else float(np.linalg.norm(num) / den)


def solve_devices(scenario, omega, cutoff=DEFAULT_CUTOFF):
    """Driving coefficients at angular frequency ``omega``.

    Step 1 fits -u_i on the cloak circle; step 2 moves within the directions
    step 1 left unused (the truncated right singular vectors) to cancel the
    field on the measurement circle.
    """
    if not omega > 0:
        raise ContractError("omega must be positive")
    if not 0 < cutoff < 1:
        raise ContractError(f"cutoff must lie in (0, 1), got {cutoff}")
    k = scenario.wavenumber(omega)
    lam = scenario.wavelength(omega)
    n_mp = multipole_order(k, scenario.delta, scenario.alpha)
    devices = device_points(scenario)
    over = scenario.control_oversample
    p_alpha = control_points(scenario.alpha, lam, over).points
    p_gamma = control_points(scenario.gamma, lam, over).points

    a = field_matrix(p_alpha, devices, k, n_mp)
    u_i = incident_field(scenario.source, p_alpha, k)
    scale = np.abs(u_i).max()
    if scale == 0.0:
        coeffs = DeviceCoefficients.zeros(omega, n_mp, scenario.device_count)
        return coeffs, SynthesisReport(0.0, 0.0, 0.0, 0, 0, 0.0)

    # With max |u_i| = 1 on the control points, singular values below
    # cutoff are dropped: the tolerance is relative to the incident amplitude,
    # not to sigma_1 (evanescent high orders can inflate sigma_1 by 1e6).
    step1 = tsvd_least_squares(a, -u_i / scale, cutoff_abs=cutoff)
    if step1.degenerate:
        raise SynthesisFailure(f"every singular value truncated at omega={omega:.6e}", omega=omega)
    b0 = step1.solution
    z_basis = step1.nullspace
    rank2 = 0
    b = b0
    if z_basis.shape[1]:
        bmat = field_matrix(p_gamma, devices, k, n_mp)
        step2 = tsvd_least_squares(bmat @ z_basis, -(bmat @ b0), cutoff_abs=cutoff)
        if not step2.degenerate:
            b = b0 + z_basis @ step2.solution
            rank2 = step2.rank
    coeffs = DeviceCoefficients(omega, n_mp, scenario.device_count, b * scale)
    coeffs0 = DeviceCoefficients(omega, n_mp, scenario.device_count, b0 * scale)

    m_alpha = metric_circle(scenario.alpha, lam, over)
    m_gamma = metric_circle(scenario.gamma, lam, over)
    ui_alpha = incident_field(scenario.source, m_alpha, k)
    ui_gamma = incident_field(scenario.source, m_gamma, k)
    report = SynthesisReport(
        residual_cloak=_rel(ui_alpha + device_field(coeffs, devices, m_alpha, k), ui_alpha),
        residual_quiet=_rel(device_field(coeffs, devices, m_gamma, k), ui_gamma),
        residual_cloak_step1=_rel(ui_alpha + device_field(coeffs0, devices, m_alpha, k), ui_alpha),
        rank_step1=step1.rank,
        rank_step2=rank2,
        sigma_max_step1=float(step1.singular_values[0]),
    )
    return coeffs, report
