"""Sound-soft scattering by a smooth closed curve.

Nystrom discretisation of the combined double/single-layer equation

    phi + K phi - i eta S phi = -2 u_inc,      eta = k,

with the logarithmic kernel singularity split off and integrated exactly
against trigonometric interpolants (Kussmaul-Martensen weights).  The
scattered field is the combined potential
u_s(x) = int (dPhi/dnu_y - i eta Phi) phi ds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError, NumericalFailure
from .specialfunc import EULER_GAMMA, bessel_jy_seq

KITE_A = 0.65
KITE_B = 1.5


@dataclass(frozen=True)
class _Nodes:
    t: np.ndarray
    x: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray

    @property
    def speed(self):
        return np.hypot(self.dx[:, 0], self.dx[:, 1])


class Boundary:
    """Closed counter-clockwise curve sampled at ``n_quad`` equispaced parameters."""

    n_quad: int

    def parametrize(self, t):
        """Return x(t), x'(t), x''(t), each of shape (len(t), 2)."""
        raise NotImplementedError

    def nodes(self):
        if self.n_quad < 4 or self.n_quad % 2:
            raise ContractError("n_quad must be an even integer >= 4")
        t = np.pi * np.arange(self.n_quad) / (self.n_quad // 2)
        return _Nodes(t, *self.parametrize(t))

    def contains(self, x):
        """True for points enclosed by the curve (dense polygon winding test)."""
        t = np.linspace(0, 2 * np.pi, max(4 * self.n_quad, 512), endpoint=False)
        poly = self.parametrize(t)[0]
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = poly[None, :, :] - x[:, None, :]
        ang = np.arctan2(d[..., 1], d[..., 0])
        turn = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
        turn = (turn + np.pi) % (2 * np.pi) - np.pi
        return np.abs(turn.sum(axis=1)) > np.pi


def _rotate(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]], axis=-1)


@dataclass(frozen=True)
class KiteBoundary(Boundary):
    """x(t) = center + scale * R(orientation) (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)."""

    scale: float
    center: tuple = (0.0, 0.0)
    n_quad: int = 256
    orientation: float = 0.0

    def parametrize(self, t):
        c, s = np.cos(t), np.sin(t)
        c2, s2 = np.cos(2 * t), np.sin(2 * t)
        x = np.stack([c + KITE_A * c2 - KITE_A, KITE_B * s], axis=-1)
        dx = np.stack([-s - 2 * KITE_A * s2, KITE_B * c], axis=-1)
        ddx = np.stack([-c - 4 * KITE_A * c2, -KITE_B * s], axis=-1)
        rot = self.orientation
        return (np.asarray(self.center) + self.scale * _rotate(x, rot),
                self.scale * _rotate(dx, rot), self.scale * _rotate(ddx, rot))


@dataclass(frozen=True)
class CircleBoundary(Boundary):
    radius: float
    center: tuple = (0.0, 0.0)
    n_quad: int = 128

    def parametrize(self, t):
        c, s = np.cos(t), np.sin(t)
        r = self.radius
        return (np.asarray(self.center) + r * np.stack([c, s], axis=-1),
                r * np.stack([-s, c], axis=-1), -r * np.stack([c, s], axis=-1))


@dataclass(frozen=True)
class BoundaryDensity:
    k: float
    values: np.ndarray
    omega: float | None = None
    nodes: _Nodes | None = field(default=None, repr=False, compare=False)


def _log_weights(n_quad):
    """R_|i-j| for the 2n-point rule integrating ln(4 sin^2((t - tau)/2)) f(tau)."""
    n = n_quad // 2
    j = np.arange(n_quad)
    tj = np.pi * j / n
    m = np.arange(1, n)
    r = -(2 * np.pi / n) * (np.cos(np.outer(tj, m)) / m).sum(axis=1) \
        - (np.pi / n ** 2) * np.cos(n * tj)
    return r[np.abs(j[:, None] - j[None, :])]


def _jy01(z):
    j, y = bessel_jy_seq(1, z)
    return j[..., 0], j[..., 1], y[..., 0], y[..., 1]


def system_matrix(boundary, k):
    """I + R.K1 + (pi/n) K2 for the combined-field equation."""
    nd = boundary.nodes()
    nq = boundary.n_quad
    n = nq // 2
    eta = k
    speed = nd.speed

    diff = nd.x[:, None, :] - nd.x[None, :, :]          # x(t_i) - x(tau_j)
    r = np.hypot(diff[..., 0], diff[..., 1])
    off = ~np.eye(nq, dtype=bool)
    kr = k * r[off]
    j0o, j1o, y0o, y1o = _jy01(kr)
    j0 = np.zeros((nq, nq)); j1r = np.zeros((nq, nq))
    h0 = np.zeros((nq, nq), dtype=complex); h1r = np.zeros((nq, nq), dtype=complex)
    j0[off] = j0o
    j1r[off] = j1o / r[off]
    h0[off] = j0o + 1j * y0o
    h1r[off] = (j1o + 1j * y1o) / r[off]

    # nu(tau)|x'(tau)| . (x(t) - x(tau))
    bracket = nd.dx[None, :, 1] * diff[..., 0] - nd.dx[None, :, 0] * diff[..., 1]
    curv = (nd.dx[:, 0] * nd.ddx[:, 1] - nd.dx[:, 1] * nd.ddx[:, 0]) / speed ** 2

    # double layer (times 2) and its log part
    dl = 0.5j * k * bracket * h1r
    dl1 = -(k / (2 * np.pi)) * bracket * j1r
    # single layer (times 2) and its log part
    sl = 0.5j * h0 * speed[None, :]
    sl1 = -(1 / (2 * np.pi)) * j0 * speed[None, :]
    np.fill_diagonal(sl1, -speed / (2 * np.pi))

    k1 = dl1 - 1j * eta * sl1
    t_diff = nd.t[:, None] - nd.t[None, :]
    with np.errstate(divide="ignore"):
        logw = np.log(4 * np.sin(t_diff / 2) ** 2)
    np.fill_diagonal(logw, 0.0)
    k2 = (dl - 1j * eta * sl) - k1 * logw
    diag_dl2 = -curv / (2 * np.pi)
    diag_sl2 = (0.5j - EULER_GAMMA / np.pi - np.log(k * speed / 2) / np.pi) * speed
    np.fill_diagonal(k2, diag_dl2 - 1j * eta * diag_sl2)

    return np.eye(nq) + _log_weights(nq) * k1 + (np.pi / n) * k2


def solve_scattering(boundary, trace, k, omega=None):
    """Density for which the total field (incident trace + scattered) vanishes on the curve."""
    trace = np.asarray(trace, dtype=complex)
    if trace.shape != (boundary.n_quad,):
        raise ContractError(f"trace has shape {trace.shape}, expected ({boundary.n_quad},)")
    if not k > 0:
        raise ContractError("wavenumber must be positive")
    nodes = boundary.nodes()
    if not np.any(trace):
        return BoundaryDensity(k, np.zeros_like(trace), omega, nodes)
    mat = system_matrix(boundary, k)
    try:
        values = np.linalg.solve(mat, -2.0 * trace)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Nystrom system singular at k={k}: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"Nystrom solve produced non-finite density at k={k}")
    return BoundaryDensity(k, values, omega, nodes)


def scattered_field(boundary, density, x, k=None):
    """Combined-layer potential at exterior points ``x`` (shape (..., 2))."""
    k = density.k if k is None else k
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, 2)
    if not np.any(density.values):
        return np.zeros(x.shape[:-1], dtype=complex)
    if np.any(boundary.contains(flat)):
        raise DomainError("scattered field requested on or inside the obstacle")
    nd = density.nodes if density.nodes is not None else boundary.nodes()
    n = boundary.n_quad // 2
    out = np.empty(flat.shape[0], dtype=complex)
    step = max(1, 2 ** 20 // boundary.n_quad)
    for lo in range(0, flat.shape[0], step):
        pts = flat[lo:lo + step]
        diff = pts[:, None, :] - nd.x[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        if np.any(r == 0.0):
            raise DomainError("scattered field requested on the boundary")
        j0, j1, y0, y1 = _jy01(k * r)
        bracket = nd.dx[None, :, 1] * diff[..., 0] - nd.dx[None, :, 0] * diff[..., 1]
        dl = 0.5j * k * bracket * (j1 + 1j * y1) / r
        sl = 0.5j * (j0 + 1j * y0) * nd.speed[None, :]
        out[lo:lo + step] = (np.pi / n) * 0.5 * ((dl - 1j * k * sl) @ density.values)
    return out.reshape(x.shape[:-1])


def disk_series_scattered(radius, k, x, n_terms=None):
    """Exact scattered field of a sound-soft disk (centred at 0) under exp(i k x).

    u_s = -sum_n i^n J_n(ka)/H_n(ka) H_n(kr) e^{in theta}.  Evaluated with the
    package's own cylinder functions; used as a validation oracle.
    """
    from .specialfunc import hankel1_orders

    x = np.atleast_2d(np.asarray(x, dtype=float))
    ka = k * radius
    if n_terms is None:
        n_terms = int(ka + 12 * ka ** (1 / 3) + 20)
    orders = np.arange(-n_terms, n_terms + 1)
    ha = hankel1_orders(n_terms, ka)
    coeff = -(1j ** (orders % 4)) * ha.real / ha
    r = np.hypot(x[:, 0], x[:, 1])
    theta = np.arctan2(x[:, 1], x[:, 0])
    h = hankel1_orders(n_terms, k * r)
    return (h * np.exp(1j * np.outer(theta, orders))) @ coeff
