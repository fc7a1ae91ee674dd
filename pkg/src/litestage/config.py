"""Pipeline configuration: JSON schema, validation, unit conversion.

All frequencies in the configuration document are plain Hz; they are
converted to rad/s when the typed objects are built.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .errors import ConfigError, GeometryError
from .geometry import GeometryBounds, MaterialSpec, PointMass, StageGeometry
from .geomopt import FrequencyConstraints
from .placement import PlacementDomain, PlacementObjectiveSpec

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_VEC5 = {"type": "array", "items": {"type": "number"}, "minItems": 5, "maxItems": 5}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["stage", "geometry", "constraints", "controller"],
    "properties": {
        "material": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "youngs_modulus": {"type": "number", "exclusiveMinimum": 0},
                "poisson_ratio": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "density": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "stage": {
            "type": "object",
            "additionalProperties": False,
            "required": ["side_x", "side_y"],
            "properties": {
                "side_x": {"type": "number", "exclusiveMinimum": 0},
                "side_y": {"type": "number", "exclusiveMinimum": 0},
                "rib_counts": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "point_masses": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["mass", "location"],
                        "properties": {
                            "mass": {"type": "number", "minimum": 0},
                            "location": _POINT,
                            "rotary_inertia": {"type": "number", "minimum": 0},
                        },
                    },
                },
            },
        },
        "mesh": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"resolution": {"type": "integer", "minimum": 4}},
        },
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["bounds_lower", "bounds_upper", "init"],
            "properties": {
                "bounds_lower": _VEC5,
                "bounds_upper": _VEC5,
                "init": _VEC5,
                "budget": {"type": "integer", "minimum": 10},
            },
        },
        "constraints": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_low_hz"],
            "properties": {
                "omega_low_hz": {"type": "number", "exclusiveMinimum": 0},
                "omega_high_hz": {"type": "number", "exclusiveMinimum": 0},
                "n_controlled": {"type": "integer", "minimum": 0},
                "m_constrained": {"type": "integer", "minimum": 1},
                "sweep": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["top_hz", "bottom_hz", "delta_hz"],
                    "properties": {
                        "top_hz": {"type": "number", "exclusiveMinimum": 0},
                        "bottom_hz": {"type": "number", "exclusiveMinimum": 0},
                        "delta_hz": {"type": "number", "exclusiveMinimum": 0},
                        "selected_hz": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "placement": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0},
                "controlled_modes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "uncontrolled_modes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "symmetry": {"type": "boolean"},
                "domain": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["x_min", "x_max", "y_min", "y_max"],
                    "properties": {
                        "x_min": {"type": "number"},
                        "x_max": {"type": "number"},
                        "y_min": {"type": "number"},
                        "y_max": {"type": "number"},
                    },
                },
            },
        },
        "actuators": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": ["optimized", "fixed"]},
                "locations": {"type": "array", "items": _POINT},
            },
        },
        "plant": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_flexible": {"type": "integer", "minimum": 1},
                "modal_damping": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "controller": {
            "type": "object",
            "additionalProperties": False,
            "required": ["target_bandwidth_hz"],
            "properties": {
                "target_bandwidth_hz": {"type": "number", "exclusiveMinimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "zlp": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "mapping_mode": {"enum": ["loopshaping", "paper-table"]},
                "bandwidth_search_low_hz": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "baseline": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "target_bandwidth_hz": {"type": "number", "exclusiveMinimum": 0},
                "resonance_margin": {"type": "number", "exclusiveMinimum": 1},
                "device_locations": {"type": "array", "items": _POINT, "minItems": 3, "maxItems": 3},
                "budget": {"type": "integer", "minimum": 10},
            },
        },
        "output_dir": {"type": "string"},
    },
}

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SweepSpec:
    omega_top: float
    omega_bottom: float
    delta_omega: float
    omega_selected: float


@dataclass(frozen=True)
class PipelineConfig:
    """Validated, unit-converted configuration for the co-design pipeline."""

    material: MaterialSpec
    template: StageGeometry          # carries init params, planform, masses
    bounds: GeometryBounds
    init_params: np.ndarray
    resolution: int
    constraints: FrequencyConstraints
    sweep: SweepSpec | None
    placement_spec: PlacementObjectiveSpec
    placement_symmetry: bool
    placement_domain: PlacementDomain | None
    actuator_mode: str               # "optimized" | "fixed"
    actuator_locations: tuple[tuple[float, float], ...]
    n_flexible: int
    modal_damping: float
    target_bandwidth: float          # rad/s
    alpha: float
    zlp: float
    mapping_mode: str
    bandwidth_search_low: float      # rad/s
    budget: int
    baseline_target_bandwidth: float  # rad/s
    baseline_margin: float
    baseline_devices: tuple[tuple[float, float], ...]
    baseline_budget: int
    output_dir: str


def _point_masses(doc) -> tuple[PointMass, ...]:
    out = []
    for pm in doc.get("point_masses", []):
        out.append(
            PointMass(
                mass=pm["mass"],
                location=tuple(pm["location"]),
                rotary_inertia=pm.get("rotary_inertia", 0.0),
            )
        )
    return tuple(out)


def load_config(path) -> PipelineConfig:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(doc)


def parse_config(doc: dict) -> PipelineConfig:
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from None

    mat = MaterialSpec(**doc.get("material", {}))
    stage = doc["stage"]
    geo = doc["geometry"]
    init = np.asarray(geo["init"], dtype=float)
    try:
        bounds = GeometryBounds(lower=tuple(geo["bounds_lower"]), upper=tuple(geo["bounds_upper"]))
        template = StageGeometry(
            side_x=stage["side_x"],
            side_y=stage["side_y"],
            base_thickness=init[0],
            rib_height=init[1],
            rib_width=init[2],
            rib_spacing_x=init[3],
            rib_spacing_y=init[4],
            rib_counts=tuple(stage.get("rib_counts", (2, 2))),
            point_masses=_point_masses(stage),
        )
    except GeometryError as exc:
        raise ConfigError(f"config geometry invalid: {exc}") from exc
    if not bounds.contains(init):
        raise ConfigError("geometry init violates the bounds")

    cons_doc = doc["constraints"]
    sweep_doc = cons_doc.get("sweep")
    if sweep_doc is None and "omega_high_hz" not in cons_doc:
        raise ConfigError("constraints need omega_high_hz or a sweep block")
    omega_low = TWO_PI * cons_doc["omega_low_hz"]
    sweep = None
    if sweep_doc is not None:
        if sweep_doc["bottom_hz"] > sweep_doc["top_hz"]:
            raise ConfigError("sweep bottom_hz exceeds top_hz")
        selected = sweep_doc.get("selected_hz", sweep_doc["top_hz"])
        if not sweep_doc["bottom_hz"] <= selected <= sweep_doc["top_hz"]:
            raise ConfigError("sweep selected_hz outside the swept range")
        sweep = SweepSpec(
            omega_top=TWO_PI * sweep_doc["top_hz"],
            omega_bottom=TWO_PI * sweep_doc["bottom_hz"],
            delta_omega=TWO_PI * sweep_doc["delta_hz"],
            omega_selected=TWO_PI * selected,
        )
        omega_high = sweep.omega_selected
    else:
        omega_high = TWO_PI * cons_doc["omega_high_hz"]
    try:
        constraints = FrequencyConstraints(
            omega_low=omega_low,
            omega_high=omega_high,
            n_controlled=cons_doc.get("n_controlled", 1),
            m_constrained=cons_doc.get("m_constrained", 2),
        )
    except ValueError as exc:
        raise ConfigError(f"constraints invalid: {exc}") from exc

    pl = doc.get("placement", {})
    try:
        placement_spec = PlacementObjectiveSpec(
            gamma=pl.get("gamma", 50.0),
            controlled_modes=tuple(pl.get("controlled_modes", (1,))),
            uncontrolled_modes=tuple(pl.get("uncontrolled_modes", (2, 3, 4))),
        )
    except ValueError as exc:
        raise ConfigError(f"placement spec invalid: {exc}") from exc
    domain = None
    if "domain" in pl:
        d = pl["domain"]
        domain = PlacementDomain(**d)

    act = doc.get("actuators", {"mode": "optimized"})
    act_locs = tuple(tuple(p) for p in act.get("locations", ()))
    if act["mode"] == "fixed":
        if not act_locs:
            raise ConfigError("fixed actuator mode requires locations")
        half_x, half_y = stage["side_x"] / 2, stage["side_y"] / 2
        for x, y in act_locs:
            if abs(x) > half_x or abs(y) > half_y:
                raise ConfigError(f"fixed actuator at ({x:g}, {y:g}) outside planform")

    plant_doc = doc.get("plant", {})
    ctrl = doc["controller"]
    base = doc.get("baseline", {})
    base_devices = tuple(tuple(p) for p in base.get("device_locations", ()))
    if not base_devices:
        dx, dy = 0.4 * stage["side_x"], 0.4 * stage["side_y"]
        base_devices = ((dx, dy), (-dx, dy), (0.0, -dy))
    return PipelineConfig(
        material=mat,
        template=template,
        bounds=bounds,
        init_params=init,
        resolution=doc.get("mesh", {}).get("resolution", 10),
        constraints=constraints,
        sweep=sweep,
        placement_spec=placement_spec,
        placement_symmetry=pl.get("symmetry", True),
        placement_domain=domain,
        actuator_mode=act["mode"],
        actuator_locations=act_locs,
        n_flexible=plant_doc.get("n_flexible", 10),
        modal_damping=plant_doc.get("modal_damping", 0.01),
        target_bandwidth=TWO_PI * ctrl["target_bandwidth_hz"],
        alpha=ctrl.get("alpha", 0.3),
        zlp=ctrl.get("zlp", 0.7),
        mapping_mode=ctrl.get("mapping_mode", "loopshaping"),
        bandwidth_search_low=TWO_PI * ctrl.get("bandwidth_search_low_hz", 2.0),
        budget=geo.get("budget", 500),
        baseline_target_bandwidth=TWO_PI * base.get("target_bandwidth_hz", 50.0),
        baseline_margin=base.get("resonance_margin", 5.0),
        baseline_devices=base_devices,
        baseline_budget=base.get("budget", geo.get("budget", 500)),
        output_dir=doc.get("output_dir", "out"),
    )
