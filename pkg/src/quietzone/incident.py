"""Probing waves and the pulse envelope.

Time convention is exp(-i omega t), so outgoing waves are H^(1)_n.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, SingularityError
from .specialfunc import hankel1_seq

POINT_SOURCE = "point_source"
PLANE_WAVE = "plane_wave"


@dataclass(frozen=True)
class IncidentSpec:
    """A monopole at ``position`` or a plane wave travelling along ``direction``.

    ``sigma`` is the envelope width in seconds; ``amplitude`` scales the field.
    """

    kind: str = POINT_SOURCE
    position: tuple = (0.0, 0.0)
    direction: tuple = (1.0, 0.0)
    sigma: float = 1.0
    amplitude: complex = 1.0

    def __post_init__(self):
        if self.kind not in (POINT_SOURCE, PLANE_WAVE):
            raise ContractError(f"unknown incident kind {self.kind!r}")
        if not self.sigma > 0:
            raise ContractError("envelope sigma must be positive")
        if self.kind == PLANE_WAVE and abs(np.hypot(*self.direction) - 1.0) > 1e-12:
            raise ContractError("plane-wave direction must be a unit vector")

    def scaled(self, factor):
        return IncidentSpec(self.kind, self.position, self.direction, self.sigma,
                            self.amplitude * factor)


def incident_field(spec, x, k):
    """u_i at points ``x`` (shape (..., 2)) for wavenumber ``k``."""
    x = np.asarray(x, dtype=float)
    if spec.kind == PLANE_WAVE:
        phase = x @ np.asarray(spec.direction, dtype=float)
        return spec.amplitude * np.exp(1j * k * phase)
    d = x - np.asarray(spec.position, dtype=float)
    r = np.hypot(d[..., 0], d[..., 1])
    if np.any(r == 0.0):
        raise SingularityError(f"point source evaluated at its own position {spec.position}")
    return spec.amplitude * 0.25j * hankel1_seq(0, k * r)[..., 0]


def envelope(omega, omega0, bandwidth, sigma):
    """Gaussian spectrum sigma*sqrt(2 pi)*exp(-sigma^2 (w-w0)^2 / 2), zero outside the band."""
    if bandwidth < 0 or not sigma > 0:
        raise ContractError("need bandwidth >= 0 and sigma > 0")
    omega = np.asarray(omega, dtype=float)
    offset = omega - omega0
    g = sigma * np.sqrt(2 * np.pi) * np.exp(-0.5 * (sigma * offset) ** 2)
    # grid endpoints land on the band edge only up to rounding
    inside = np.abs(offset) <= 0.5 * bandwidth * (1 + 1e-12) + 1e-300
    return np.where(inside, g, 0.0)
