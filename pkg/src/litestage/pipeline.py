"""Sequential co-design pipeline: geometry -> placement -> plant -> control.

Each stage consumes the previous stage's output; a failure aborts the run
with the stage name, flushing a ``failure.json`` marker next to whatever
artifacts were already written. All outputs are deterministic functions
of the configuration document.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .control import (
    LoopMetrics,
    PlantChannel,
    closed_loop_metrics,
    controller_from_bandwidth,
    loop_gain,
    max_bandwidth,
    sensitivity_peak,
)
from .errors import LitestageError
from .geometry import StageGeometry, total_mass
from .geomopt import (
    FrequencyConstraints,
    GeometryOptResult,
    SweepRecord,
    optimize_geometry,
    sweep_omega_high,
)
from .modal import ModalModel, modal_from_geometry
from .placement import (
    PlacementDomain,
    PlacementSolution,
    optimize_placement,
    write_heatmap_csv,
)
from .plant import (
    ActuatorSet,
    FrequencyResponse,
    PlantModel,
    SensorSet,
    build_plant,
    frequency_response,
    with_decoupling,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ChannelReport:
    dof: str
    bandwidth: float | None          # rad/s, achieved crossover
    kp: float
    sensitivity_peak: float | None
    stable: bool

    def to_dict(self) -> dict:
        return {
            "dof": self.dof,
            "bandwidth_hz": self.bandwidth / TWO_PI if self.bandwidth else None,
            "kp": self.kp,
            "sensitivity_peak": self.sensitivity_peak,
            "stable": self.stable,
        }


@dataclass(frozen=True)
class DesignReport:
    """Summary of one co-designed stage, recomputable from artifacts."""

    label: str
    stage_mass: float
    theta_p: tuple[float, ...]
    flexible_resonances: tuple[float, ...]   # rad/s
    channels: tuple[ChannelReport, ...]
    max_sensitivity: float | None
    closed_loop_stable: bool
    first_flexible_closed_loop_damping: float | None
    open_loop_damping: float
    actuator_locations: tuple[tuple[float, float], ...]
    sensor_locations: tuple[tuple[float, float], ...]
    geometry_feasible: bool
    omega_high_active: bool
    resolution: int

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "stage_mass_kg": self.stage_mass,
            "theta_p": list(self.theta_p),
            "flexible_resonances_hz": [f / TWO_PI for f in self.flexible_resonances],
            "channels": [c.to_dict() for c in self.channels],
            "max_sensitivity": self.max_sensitivity,
            "closed_loop_stable": self.closed_loop_stable,
            "first_flexible_closed_loop_damping": self.first_flexible_closed_loop_damping,
            "open_loop_damping": self.open_loop_damping,
            "actuators": [list(p) for p in self.actuator_locations],
            "sensors": [list(p) for p in self.sensor_locations],
            "geometry_feasible": self.geometry_feasible,
            "omega_high_active": self.omega_high_active,
            "mesh_resolution": self.resolution,
        }


class StageFailure(LitestageError):
    """Wraps a stage error with the failing stage's name."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"pipeline stage '{stage}' failed: {error}")
        self.stage = stage
        self.error = error


def _write_json(path, doc) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, indent=1)


def _flush_failure(out_dir: str, stage: str, error: Exception) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_json(
        os.path.join(out_dir, "failure.json"),
        {"failed_stage": stage, "error": str(error)},
    )


def write_sweep_csv(path, records: list[SweepRecord]) -> None:
    """Schema: omega_high_hz, mass_kg, ja_plus_jo, theta_p..., feasible."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["omega_high_hz", "mass_kg", "ja_plus_jo"]
            + [f"theta_p_{i}" for i in range(5)]
            + ["feasible"]
        )
        for r in records:
            w.writerow(
                [repr(float(r.omega_high / TWO_PI)), repr(float(r.mass)),
                 repr(float(r.ja_plus_jo))]
                + [repr(float(v)) for v in r.params]
                + [int(r.feasible)]
            )


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    out = []
    for r in rows:
        out.append(
            {
                "omega_high_hz": float(r["omega_high_hz"]),
                "mass_kg": float(r["mass_kg"]),
                "ja_plus_jo": float(r["ja_plus_jo"]),
                "theta_p": [float(r[f"theta_p_{i}"]) for i in range(5)],
                "feasible": bool(int(r["feasible"])),
            }
        )
    return out


def _geometry_json(result: GeometryOptResult, geometry: StageGeometry, resolution: int) -> dict:
    return {
        "theta_p": geometry.params.tolist(),
        "side_x": geometry.side_x,
        "side_y": geometry.side_y,
        "rib_counts": list(geometry.rib_counts),
        "point_masses": [
            {"mass": pm.mass, "location": list(pm.location), "rotary_inertia": pm.rotary_inertia}
            for pm in geometry.point_masses
        ],
        "mass_kg": result.mass,
        "flexible_resonances_hz": (result.flexible_frequencies / TWO_PI).tolist(),
        "feasible": result.feasible,
        "omega_high_active": result.omega_high_active,
        "n_evaluations": result.n_evaluations,
        "mesh_resolution": resolution,
    }


def _placement_json(solution: PlacementSolution, gamma: float) -> dict:
    return {
        "gamma": gamma,
        "locations": [list(p) for p in solution.locations],
        "node_indices": list(solution.node_indices),
        "objective": solution.objective,
        "controlled_grammians": {str(k): v for k, v in solution.controlled_grammians.items()},
        "uncontrolled_grammians": {str(k): v for k, v in solution.uncontrolled_grammians.items()},
    }


def _first_flexible_closed_loop_damping(
    damping_pairs, omega_first_flexible: float
) -> float | None:
    """Smallest closed-loop damping ratio near the first flexible mode.

    Control shifts the controlled pole, so the match window spans
    [0.3, 3] x the open-loop frequency; the minimum over the window is the
    conservative damping statement for that mode.
    """
    lo, hi = 0.3 * omega_first_flexible, 3.0 * omega_first_flexible
    zetas = [z for wn, z in damping_pairs if lo <= wn <= hi]
    if not zetas:
        return None
    return float(min(zetas))


def _tune_channels(plant: PlantModel, config: PipelineConfig, target: float):
    """Tune every decoupled channel at the largest feasible bandwidth
    within (search_low, target]."""
    controllers = []
    for k in range(len(plant.controlled_dofs)):
        ch = PlantChannel(plant, k)
        wbw, kp, metrics, ctrl = max_bandwidth(
            ch,
            alpha=config.alpha,
            mapping_mode=config.mapping_mode,
            search_range=(config.bandwidth_search_low, target),
            zlp=config.zlp,
        )
        controllers.append(ctrl)
    return controllers


def _channel_reports(plant, controllers, per_channel_metrics) -> tuple[ChannelReport, ...]:
    out = []
    for dof, ctrl, met in zip(plant.controlled_dofs, controllers, per_channel_metrics):
        out.append(
            ChannelReport(
                dof=dof,
                bandwidth=met.achieved_bandwidth,
                kp=ctrl.kp,
                sensitivity_peak=met.sensitivity_peak,
                stable=met.stable,
            )
        )
    return tuple(out)


def _export_channel_curves(out_dir, plant, controllers, grid) -> None:
    for k, (dof, ctrl) in enumerate(zip(plant.controlled_dofs, controllers)):
        ch = PlantChannel(plant, k)
        lg = loop_gain(ch, ctrl, grid)
        lg.to_csv(os.path.join(out_dir, f"loop_gain_{dof}.csv"))
        lvals = lg.values[:, 0, 0]
        svals = 1.0 / (1.0 + lvals)
        FrequencyResponse(grid=grid, values=svals.reshape(-1, 1, 1)).to_csv(
            os.path.join(out_dir, f"sensitivity_{dof}.csv")
        )
        FrequencyResponse(grid=grid, values=(lvals * svals).reshape(-1, 1, 1)).to_csv(
            os.path.join(out_dir, f"closed_loop_{dof}.csv")
        )


def _prepare_out_dir(out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    marker = os.path.join(out_dir, "failure.json")
    if os.path.exists(marker):
        os.remove(marker)


def run_pipeline(config: PipelineConfig, out_dir: str | None = None) -> DesignReport:
    """Execute geometry, placement, plant and control stages in order."""
    out_dir = out_dir or config.output_dir
    _prepare_out_dir(out_dir)

    # Stage 1: geometry (optionally an omega_high sweep first).
    stage = "geometry"
    try:
        init = config.init_params
        if config.sweep is not None:
            fixed = (
                config.actuator_locations if config.actuator_mode == "fixed" else None
            )
            records = sweep_omega_high(
                config.template,
                config.bounds,
                config.constraints,
                config.init_params,
                config.material,
                config.resolution,
                omega_high_range=(config.sweep.omega_top, config.sweep.omega_bottom),
                delta_omega=config.sweep.delta_omega,
                placement_spec=config.placement_spec,
                fixed_actuators=fixed,
                budget=config.budget,
                placement_symmetry=config.placement_symmetry,
                zeta=config.modal_damping,
                n_modes_placement=3 + config.n_flexible,
            )
            write_sweep_csv(os.path.join(out_dir, "sweep.csv"), records)
            for i, rec in enumerate(records):
                _write_json(
                    os.path.join(out_dir, f"sweep_step_{i:02d}.json"),
                    {
                        "omega_high_hz": rec.omega_high / TWO_PI,
                        "theta_p": rec.params.tolist(),
                        "mass_kg": rec.mass,
                        "ja": rec.ja,
                        "jo": rec.jo,
                        "feasible": rec.feasible,
                        "actuators": [list(p) for p in rec.actuator_locations],
                        "sensors": [list(p) for p in rec.sensor_locations],
                    },
                )
            selected = min(
                (r for r in records if r.feasible),
                key=lambda r: abs(r.omega_high - config.sweep.omega_selected),
                default=None,
            )
            if selected is None:
                raise LitestageError("sweep produced no feasible step")
            init = selected.params
        geo_result = optimize_geometry(
            config.template,
            config.bounds,
            config.constraints,
            init,
            config.material,
            config.resolution,
            config.budget,
        )
        geometry = geo_result.geometry
        _write_json(
            os.path.join(out_dir, "design.json"),
            _geometry_json(geo_result, geometry, config.resolution),
        )
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    # Stage 2: placement on the designed stage.
    stage = "placement"
    try:
        modal = modal_from_geometry(
            geometry, config.material, config.resolution, n_modes=3 + config.n_flexible
        )
        domain = config.placement_domain or PlacementDomain.full_planform(modal)
        n_devices = 3 + config.constraints.n_controlled
        solution = optimize_placement(
            modal,
            domain,
            config.placement_spec,
            count=n_devices,
            symmetry=config.placement_symmetry,
            zeta=config.modal_damping,
        )
        sensors = SensorSet(solution.locations)
        if config.actuator_mode == "fixed":
            actuators = ActuatorSet(config.actuator_locations)
        else:
            actuators = ActuatorSet(solution.locations)  # collocated optimum
        _write_json(
            os.path.join(out_dir, "placement.json"),
            _placement_json(solution, config.placement_spec.gamma),
        )
        write_heatmap_csv(
            os.path.join(out_dir, "placement_heatmap.csv"),
            modal,
            domain,
            config.placement_spec,
            zeta=config.modal_damping,
        )
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    # Stage 3: reduced plant with decoupling.
    stage = "plant"
    try:
        plant = build_plant(
            modal, actuators, sensors, zeta=config.modal_damping, n_flex=config.n_flexible
        )
        plant = with_decoupling(plant)
        plant.export_json(os.path.join(out_dir, "plant.json"))
        grid = np.logspace(
            np.log10(TWO_PI * 1.0), np.log10(TWO_PI * 2000.0), 600
        )
        frequency_response(plant, grid, decoupled=True).to_csv(
            os.path.join(out_dir, "plant_response.csv")
        )
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    # Stage 4: controller tuning and closed-loop verification.
    stage = "control"
    try:
        controllers = _tune_channels(plant, config, config.target_bandwidth)
        per_channel, damping_pairs, stable = closed_loop_metrics(plant, controllers)
        _write_json(
            os.path.join(out_dir, "controllers.json"),
            {
                dof: {"params": ctrl.to_dict(), "metrics": met.to_dict()}
                for dof, ctrl, met in zip(plant.controlled_dofs, controllers, per_channel)
            },
        )
        _export_channel_curves(out_dir, plant, controllers, grid)
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    omega_f1 = float(modal.flexible_frequencies()[0])
    peaks = [m.sensitivity_peak for m in per_channel if m.sensitivity_peak is not None]
    report = DesignReport(
        label="proposed",
        stage_mass=geo_result.mass,
        theta_p=tuple(geometry.params.tolist()),
        flexible_resonances=tuple(geo_result.flexible_frequencies.tolist()),
        channels=_channel_reports(plant, controllers, per_channel),
        max_sensitivity=max(peaks) if peaks else None,
        closed_loop_stable=stable,
        first_flexible_closed_loop_damping=_first_flexible_closed_loop_damping(
            damping_pairs, omega_f1
        ),
        open_loop_damping=config.modal_damping,
        actuator_locations=actuators.locations,
        sensor_locations=sensors.locations,
        geometry_feasible=geo_result.feasible,
        omega_high_active=geo_result.omega_high_active,
        resolution=config.resolution,
    )
    _write_json(os.path.join(out_dir, "report.json"), report.to_dict())
    return report


def run_baseline(config: PipelineConfig, out_dir: str | None = None) -> DesignReport:
    """Design the no-flexible-control baseline stage.

    The first resonance is pushed above margin x target bandwidth, three
    devices handle the rigid DOFs only, and each channel is tuned to the
    largest feasible bandwidth up to the baseline target.
    """
    out_dir = out_dir or config.output_dir
    _prepare_out_dir(out_dir)
    stage = "geometry"
    try:
        omega_min = config.baseline_margin * config.baseline_target_bandwidth
        constraints = FrequencyConstraints(
            omega_low=omega_min / 2.0,     # inert: no controlled flexible modes
            omega_high=omega_min,
            n_controlled=0,
            m_constrained=1,
        )
        geo_result = optimize_geometry(
            config.template,
            config.bounds,
            constraints,
            config.init_params,
            config.material,
            config.resolution,
            config.baseline_budget,
        )
        geometry = geo_result.geometry
        _write_json(
            os.path.join(out_dir, "design.json"),
            _geometry_json(geo_result, geometry, config.resolution),
        )
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    stage = "plant"
    try:
        modal = modal_from_geometry(
            geometry, config.material, config.resolution, n_modes=3 + config.n_flexible
        )
        devices = config.baseline_devices
        plant = build_plant(
            modal,
            ActuatorSet(devices),
            SensorSet(devices),
            zeta=config.modal_damping,
            n_flex=config.n_flexible,
        )
        plant = with_decoupling(plant, ("z", "theta_x", "theta_y"))
        plant.export_json(os.path.join(out_dir, "plant.json"))
        grid = np.logspace(np.log10(TWO_PI * 1.0), np.log10(TWO_PI * 2000.0), 600)
        frequency_response(plant, grid, decoupled=True).to_csv(
            os.path.join(out_dir, "plant_response.csv")
        )
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    stage = "control"
    try:
        controllers = _tune_channels(plant, config, config.baseline_target_bandwidth)
        per_channel, damping_pairs, stable = closed_loop_metrics(plant, controllers)
        _write_json(
            os.path.join(out_dir, "controllers.json"),
            {
                dof: {"params": ctrl.to_dict(), "metrics": met.to_dict()}
                for dof, ctrl, met in zip(plant.controlled_dofs, controllers, per_channel)
            },
        )
        _export_channel_curves(out_dir, plant, controllers, grid)
    except Exception as exc:
        _flush_failure(out_dir, stage, exc)
        raise StageFailure(stage, exc) from exc

    omega_f1 = float(modal.flexible_frequencies()[0])
    peaks = [m.sensitivity_peak for m in per_channel if m.sensitivity_peak is not None]
    report = DesignReport(
        label="baseline",
        stage_mass=geo_result.mass,
        theta_p=tuple(geometry.params.tolist()),
        flexible_resonances=tuple(geo_result.flexible_frequencies.tolist()),
        channels=_channel_reports(plant, controllers, per_channel),
        max_sensitivity=max(peaks) if peaks else None,
        closed_loop_stable=stable,
        first_flexible_closed_loop_damping=_first_flexible_closed_loop_damping(
            damping_pairs, omega_f1
        ),
        open_loop_damping=config.modal_damping,
        actuator_locations=devices,
        sensor_locations=devices,
        geometry_feasible=geo_result.feasible,
        omega_high_active=geo_result.omega_high_active,
        resolution=config.resolution,
    )
    _write_json(os.path.join(out_dir, "report.json"), report.to_dict())
    return report


_COMPARE_ROWS = (
    ("stage_weight_kg", lambda r: r.stage_mass),
    ("first_resonance_hz", lambda r: r.flexible_resonances[0] / TWO_PI),
    ("second_resonance_hz", lambda r: r.flexible_resonances[1] / TWO_PI
     if len(r.flexible_resonances) > 1 else None),
)


def compare(
    proposed: DesignReport, baseline: DesignReport, out_dir: str
) -> tuple[str, str]:
    """Side-by-side comparison table in CSV and readable text form."""
    os.makedirs(out_dir, exist_ok=True)
    rows: list[tuple[str, object, object]] = []
    for name, get in _COMPARE_ROWS:
        rows.append((name, get(baseline), get(proposed)))
    dofs: list[str] = []
    for r in (baseline, proposed):
        for ch in r.channels:
            if ch.dof not in dofs:
                dofs.append(ch.dof)
    for dof in dofs:
        def bw(rep):
            for ch in rep.channels:
                if ch.dof == dof and ch.bandwidth is not None:
                    return ch.bandwidth / TWO_PI
            return None
        rows.append((f"bandwidth_{dof}_hz", bw(baseline), bw(proposed)))
    rows.append(("max_sensitivity", baseline.max_sensitivity, proposed.max_sensitivity))
    rows.append(
        (
            "first_flexible_closed_loop_damping",
            baseline.first_flexible_closed_loop_damping,
            proposed.first_flexible_closed_loop_damping,
        )
    )

    csv_path = os.path.join(out_dir, "comparison.csv")
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "baseline", "proposed"])
        for name, b, p in rows:
            w.writerow([name, "" if b is None else repr(float(b)),
                        "" if p is None else repr(float(p))])

    txt_path = os.path.join(out_dir, "comparison.txt")
    width = max(len(r[0]) for r in rows)
    with open(txt_path, "w") as f:
        f.write(f"{'metric'.ljust(width)}  {'baseline':>12}  {'proposed':>12}\n")
        for name, b, p in rows:
            bs = "-" if b is None else f"{b:12.4g}"
            ps = "-" if p is None else f"{p:12.4g}"
            f.write(f"{name.ljust(width)}  {bs:>12}  {ps:>12}\n")
    return csv_path, txt_path


def report_from_json(path) -> DesignReport:
    """Rehydrate a DesignReport written by run_pipeline/run_baseline."""
    with open(path) as f:
        doc = json.load(f)
    channels = tuple(
        ChannelReport(
            dof=c["dof"],
            bandwidth=None if c["bandwidth_hz"] is None else TWO_PI * c["bandwidth_hz"],
            kp=c["kp"],
            sensitivity_peak=c["sensitivity_peak"],
            stable=c["stable"],
        )
        for c in doc["channels"]
    )
    return DesignReport(
        label=doc["label"],
        stage_mass=doc["stage_mass_kg"],
        theta_p=tuple(doc["theta_p"]),
        flexible_resonances=tuple(TWO_PI * f for f in doc["flexible_resonances_hz"]),
        channels=channels,
        max_sensitivity=doc["max_sensitivity"],
        closed_loop_stable=doc["closed_loop_stable"],
        first_flexible_closed_loop_damping=doc["first_flexible_closed_loop_damping"],
        open_loop_damping=doc["open_loop_damping"],
        actuator_locations=tuple(tuple(p) for p in doc["actuators"]),
        sensor_locations=tuple(tuple(p) for p in doc["sensors"]),
        geometry_feasible=doc["geometry_feasible"],
        omega_high_active=doc["omega_high_active"],
        resolution=doc["mesh_resolution"],
    )
