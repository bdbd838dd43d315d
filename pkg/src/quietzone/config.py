"""Scenario files: JSON schema, loading and conversion to SI quantities.

Lengths in a scenario file are multiples of the central wavelength
``lambda0`` (metres); ``c0`` is in m/s.  The central frequency is c0/lambda0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ContractError, QuietzoneError
from .geometry import CloakScenario
from .incident import PLANE_WAVE, POINT_SOURCE, IncidentSpec
from .linalg import DEFAULT_CUTOFF
from .scattering import KiteBoundary

SWEEP_FREQUENCIES_HZ = (1.2e9, 2.4e9, 3.6e9)

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lambda0", "c0", "alpha", "delta", "gamma", "source"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "lambda0": _POSITIVE,
        "c0": _POSITIVE,
        "alpha": _POSITIVE,
        "delta": _POSITIVE,
        "gamma": _POSITIVE,
        "bandwidth_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 2},
        "n_freq": {"type": "integer", "minimum": 1},
        "device_count": {"type": "integer", "minimum": 3},
        "device_phase": {"type": ["number", "null"]},
        "control_oversample": {"type": "integer", "minimum": 1},
        "cutoff_rel": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "source": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": [POINT_SOURCE, PLANE_WAVE]},
                "position": _POINT,
                "direction": _POINT,
                "sigma_times_omega0": _POSITIVE,
                "amplitude": {"type": "number"},
            },
        },
        "obstacle": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["kite"]},
                "scale": _POSITIVE,
                "center": _POINT,
                "orientation": {"type": "number"},
                "n_quad": {"type": "integer", "minimum": 4, "multipleOf": 2},
            },
        },
        "grid": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["window", "nx", "ny"],
            "properties": {
                "window": {"type": "array", "items": {"type": "number"},
                           "minItems": 4, "maxItems": 4},
                "nx": {"type": "integer", "minimum": 2},
                "ny": {"type": "integer", "minimum": 2},
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
        "n_frames": {"type": "integer", "minimum": 1},
        "T": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "device_radius": {"type": "boolean"},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alphas": {"type": "array", "items": _POSITIVE, "minItems": 1},
                "frequencies_hz": {"type": "array", "items": _POSITIVE, "minItems": 1},
                "delta_over_alpha": _POSITIVE,
                "gamma_over_alpha": _POSITIVE,
                "source_over_alpha": _POINT,
            },
        },
    },
}


class ScenarioError(QuietzoneError, ValueError):
    """Invalid scenario file; ``key`` is the JSON path of the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class GridSpec:
    window: tuple   # metres: (xmin, ymin, xmax, ymax)
    nx: int
    ny: int


@dataclass(frozen=True)
class SweepSpec:
    alphas: tuple = (2.0, 4.0, 6.0, 8.0, 10.0)
    frequencies_hz: tuple = SWEEP_FREQUENCIES_HZ
    delta_over_alpha: float = 5.0
    gamma_over_alpha: float = 10.0
    source_over_alpha: tuple | None = None


@dataclass(frozen=True)
class RunConfig:
    name: str
    lambda0: float
    scenario: CloakScenario
    obstacle: KiteBoundary | None = None
    grid: GridSpec | None = None
    cutoff: float = DEFAULT_CUTOFF
    output_dir: str = "run"
    n_frames: int = 40
    duration: float | None = None
    device_radius: bool = True
    sweep: SweepSpec = field(default_factory=SweepSpec)

    @property
    def frequency0_hz(self):
        return self.scenario.omega0 / (2 * math.pi)


def _key_path(error):
    path = "/".join(str(p) for p in error.absolute_path)
    if error.validator == "additionalProperties":
        extra = set(error.instance) - set(error.schema.get("properties", {}))
        name = ", ".join(sorted(extra))
        return f"{path}/{name}" if path else name
    if error.validator == "required":
        missing = [k for k in error.validator_value if k not in error.instance]
        name = missing[0] if missing else ""
        return f"{path}/{name}" if path else name
    return path or "<root>"


def validate_document(doc):
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        key = _key_path(err)
        raise ScenarioError(f"invalid scenario key '{key}': {err.message}", key=key)


def read_document(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON in {path}: {exc}") from exc
    validate_document(doc)
    return doc


def config_from_document(doc, default_name="run"):
    validate_document(doc)
    lam = float(doc["lambda0"])
    c0 = float(doc["c0"])
    omega0 = 2 * math.pi * c0 / lam
    src = doc["source"]
    sigma = src.get("sigma_times_omega0", 4.0) / omega0
    if src["kind"] == POINT_SOURCE:
        if "position" not in src:
            raise ScenarioError("invalid scenario key 'source/position': required for a point source",
                                key="source/position")
        spec = IncidentSpec(POINT_SOURCE, position=tuple(lam * v for v in src["position"]),
                            sigma=sigma, amplitude=src.get("amplitude", 1.0))
    else:
        d = src.get("direction", [1.0, 0.0])
        norm = math.hypot(*d)
        if norm == 0:
            raise ScenarioError("invalid scenario key 'source/direction': zero vector",
                                key="source/direction")
        spec = IncidentSpec(PLANE_WAVE, direction=(d[0] / norm, d[1] / norm), sigma=sigma,
                            amplitude=src.get("amplitude", 1.0))
    try:
        scenario = CloakScenario(
            alpha=lam * doc["alpha"], gamma=lam * doc["gamma"], delta=lam * doc["delta"],
            c0=c0, omega0=omega0,
            bandwidth=doc.get("bandwidth_fraction", 0.0) * omega0,
            n_freq=doc.get("n_freq", 1),
            device_count=doc.get("device_count", 3),
            device_phase=doc.get("device_phase"),
            source=spec,
            control_oversample=doc.get("control_oversample", 2),
        )
    except ContractError as exc:
        key = "n_freq" if "n_freq" in str(exc) else "alpha/delta/gamma"
        raise ScenarioError(f"invalid scenario key '{key}': {exc}", key=key) from exc
    if scenario.bandwidth == 0 and scenario.n_freq != 1:
        raise ScenarioError("invalid scenario key 'n_freq': zero bandwidth admits one frequency",
                            key="n_freq")

    obstacle = None
    ob = doc.get("obstacle")
    if ob:
        obstacle = KiteBoundary(scale=lam * ob.get("scale", 0.5),
                                center=tuple(lam * v for v in ob.get("center", [0.0, 0.0])),
                                n_quad=ob.get("n_quad", 256),
                                orientation=ob.get("orientation", 0.0))

    grid = None
    g = doc.get("grid")
    if g:
        xmin, ymin, xmax, ymax = g["window"]
        if not (xmax > xmin and ymax > ymin):
            raise ScenarioError("invalid scenario key 'grid/window': degenerate rectangle",
                                key="grid/window")
        grid = GridSpec(tuple(lam * v for v in g["window"]), g["nx"], g["ny"])

    sw = doc.get("sweep", {})
    sweep = SweepSpec(
        alphas=tuple(sw.get("alphas", SweepSpec.alphas)),
        frequencies_hz=tuple(sw.get("frequencies_hz", SWEEP_FREQUENCIES_HZ)),
        delta_over_alpha=sw.get("delta_over_alpha", 5.0),
        gamma_over_alpha=sw.get("gamma_over_alpha", 10.0),
        source_over_alpha=tuple(sw["source_over_alpha"]) if "source_over_alpha" in sw else None,
    )
    name = doc.get("name", default_name)
    return RunConfig(
        name=name, lambda0=lam, scenario=scenario, obstacle=obstacle, grid=grid,
        cutoff=doc.get("cutoff_rel", DEFAULT_CUTOFF),
        output_dir=doc.get("output_dir", name),
        n_frames=doc.get("n_frames", 40),
        duration=doc.get("T"),
        device_radius=doc.get("device_radius", True),
        sweep=sweep,
    )


def load_config(path):
    doc = read_document(path)
    return config_from_document(doc, default_name=Path(path).stem)


def bundled_scenarios():
    return sorted(p.name for p in resources.files("quietzone.scenarios").iterdir()
                  if p.name.endswith(".json"))


def resolve_scenario(arg):
    """An existing file path, else a bundled scenario name (``.json`` optional)."""
    path = Path(arg)
    if path.exists():
        return path
    name = arg if arg.endswith(".json") else arg + ".json"
    if "/" not in arg and name in bundled_scenarios():
        return bundled_path(name)
    return path


def bundled_path(name):
    """Filesystem path of a bundled scenario, e.g. ``bundled_path("paper_fig1.json")``."""
    path = resources.files("quietzone.scenarios") / name
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return Path(str(path))
