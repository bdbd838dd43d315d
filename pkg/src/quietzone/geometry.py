"""Cloak geometry: cloaked disk, device ring, measurement circle, control points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractError
from .incident import IncidentSpec

MIN_CONTROL_POINTS = 8


@dataclass(frozen=True)
class CloakScenario:
    """Everything that defines one cloaking experiment.

    Lengths are in metres, frequencies are angular (rad/s).
    ``control_oversample`` divides the lambda/2 control-point spacing.
    """

    alpha: float
    gamma: float
    delta: float
    c0: float
    omega0: float
    bandwidth: float = 0.0
    n_freq: int = 1
    device_count: int = 3
    device_phase: float | None = None
    source: IncidentSpec = field(default_factory=IncidentSpec)
    control_oversample: int = 2

    def __post_init__(self):
        if not 0 < self.alpha < self.delta < self.gamma:
            raise ContractError(
                f"need 0 < alpha < delta < gamma, got alpha={self.alpha}, "
                f"delta={self.delta}, gamma={self.gamma}")
        if self.device_count < 3:
            raise ContractError(f"device_count must be >= 3, got {self.device_count}")
        if self.n_freq < 1:
            raise ContractError("n_freq must be >= 1")
        if self.bandwidth < 0:
            raise ContractError("bandwidth must be >= 0")
        if not (self.c0 > 0 and self.omega0 > 0):
            raise ContractError("c0 and omega0 must be positive")
        if self.control_oversample < 1:
            raise ContractError("control_oversample must be >= 1")

    @property
    def phi0(self):
        return math.pi / self.device_count if self.device_phase is None else self.device_phase

    @property
    def wavelength0(self):
        return self.wavelength(self.omega0)

    def wavenumber(self, omega):
        return omega / self.c0

    def wavelength(self, omega):
        return 2 * math.pi * self.c0 / omega

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ControlPointSet:
    radius: float
    points: np.ndarray
    spacing: float

    def __len__(self):
        return len(self.points)


def circle_points(radius, count, offset=0.0):
    """``count`` equispaced points on a circle; ``offset`` is in units of the spacing."""
    t = 2 * np.pi * (np.arange(count) + offset) / count
    return radius * np.stack([np.cos(t), np.sin(t)], axis=-1)


def control_point_count(radius, wavelength, oversample=1):
    return max(MIN_CONTROL_POINTS,
               math.ceil(2 * math.pi * radius / (wavelength / 2) * oversample - 1e-9))


def control_points(radius, wavelength, oversample=1, offset=0.0):
    if not (radius > 0 and wavelength > 0):
        raise ContractError("radius and wavelength must be positive")
    n = control_point_count(radius, wavelength, oversample)
    return ControlPointSet(radius=radius, points=circle_points(radius, n, offset),
                           spacing=2 * math.pi * radius / n)


def device_points(scenario):
    """Device positions on the ring |x| = delta, angles phi0 + 2 pi m / D."""
    d = scenario.device_count
    t = scenario.phi0 + 2 * np.pi * np.arange(d) / d
    return scenario.delta * np.stack([np.cos(t), np.sin(t)], axis=-1)
