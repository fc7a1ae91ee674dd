"""Command-line interface for the co-design toolkit.

Exit codes: 0 success, 2 configuration error, 3 infeasible design,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import pipeline as pl
from .config import load_config
from .control import PlantChannel, closed_loop_metrics
from .errors import (
    ConfigError,
    DecouplingError,
    GeometryError,
    InfeasibleError,
    LitestageError,
    MeshError,
    SolverError,
)
from .geometry import total_mass
from .geomopt import optimize_geometry, sweep_omega_high
from .modal import modal_from_geometry
from .placement import PlacementDomain, optimize_placement, write_heatmap_csv
from .plant import (
    ActuatorSet,
    SensorSet,
    build_plant,
    default_frequency_grid,
    frequency_response,
    with_decoupling,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

TWO_PI = 2.0 * np.pi


def _geometry_from_design(config, design_path):
    """Stage geometry from a saved design JSON, or the config init."""
    if design_path is None:
        return config.template
    with open(design_path) as f:
        doc = json.load(f)
    return config.template.with_params(np.asarray(doc["theta_p"], dtype=float))


def _cmd_modes(config, args) -> int:
    geometry = _geometry_from_design(config, args.design)
    modal = modal_from_geometry(
        geometry, config.material, args.resolution or config.resolution,
        n_modes=3 + config.n_flexible,
    )
    print(f"total mass: {modal.total_mass:.6g} kg")
    print(f"{'mode':>4}  {'frequency_hz':>14}  kind")
    for i, f in enumerate(modal.frequencies_hz):
        kind = "rigid" if i < modal.n_rigid else f"flexible {i - modal.n_rigid + 1}"
        print(f"{i:>4}  {f:>14.4f}  {kind}")
    if args.dump_mesh:
        os.makedirs(args.out_dir, exist_ok=True)
        modal.mesh.dump_csv(
            os.path.join(args.out_dir, "mesh_nodes.csv"),
            os.path.join(args.out_dir, "mesh_elements.csv"),
        )
        print(f"mesh tables written to {args.out_dir}")
    return EXIT_OK


def _cmd_place(config, args) -> int:
    geometry = _geometry_from_design(config, args.design)
    resolution = args.resolution or config.resolution
    modal = modal_from_geometry(
        geometry, config.material, resolution, n_modes=3 + config.n_flexible
    )
    domain = config.placement_domain or PlacementDomain.full_planform(modal)
    spec = config.placement_spec
    solution = optimize_placement(
        modal, domain, spec, count=3 + config.constraints.n_controlled,
        symmetry=config.placement_symmetry, zeta=config.modal_damping,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "placement.json")
    pl._write_json(path, pl._placement_json(solution, spec.gamma))
    write_heatmap_csv(
        os.path.join(args.out_dir, "placement_heatmap.csv"),
        modal, domain, spec, zeta=config.modal_damping,
    )
    print(f"objective: {solution.objective:.6g}")
    for x, y in solution.locations:
        print(f"device at ({x:+.4f}, {y:+.4f})")
    print(f"written to {path}")
    return EXIT_OK


def _cmd_optimize(config, args) -> int:
    resolution = args.resolution or config.resolution
    result = optimize_geometry(
        config.template, config.bounds, config.constraints, config.init_params,
        config.material, resolution, config.budget,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "design.json")
    pl._write_json(path, pl._geometry_json(result, result.geometry, resolution))
    print(f"mass: {result.mass:.6g} kg")
    print(f"theta_p: {np.round(result.geometry.params, 6).tolist()}")
    print(f"flexible resonances: {np.round(result.flexible_frequencies / TWO_PI, 3).tolist()} Hz")
    print(f"omega_high active: {result.omega_high_active}")
    print(f"written to {path}")
    return EXIT_OK


def _cmd_sweep(config, args) -> int:
    if config.sweep is None:
        raise ConfigError("config has no sweep block")
    resolution = args.resolution or config.resolution
    fixed = config.actuator_locations if config.actuator_mode == "fixed" else None
    records = sweep_omega_high(
        config.template, config.bounds, config.constraints, config.init_params,
        config.material, resolution,
        omega_high_range=(config.sweep.omega_top, config.sweep.omega_bottom),
        delta_omega=config.sweep.delta_omega,
        placement_spec=config.placement_spec,
        fixed_actuators=fixed,
        budget=config.budget,
        placement_symmetry=config.placement_symmetry,
        zeta=config.modal_damping,
        n_modes_placement=3 + config.n_flexible,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "sweep.csv")
    pl.write_sweep_csv(path, records)
    feasible = sum(r.feasible for r in records)
    print(f"{len(records)} steps, {feasible} feasible; table written to {path}")
    return EXIT_OK


def _cmd_tune(config, args) -> int:
    geometry = _geometry_from_design(config, args.design)
    resolution = args.resolution or config.resolution
    modal = modal_from_geometry(
        geometry, config.material, resolution, n_modes=3 + config.n_flexible
    )
    domain = config.placement_domain or PlacementDomain.full_planform(modal)
    solution = optimize_placement(
        modal, domain, config.placement_spec,
        count=3 + config.constraints.n_controlled,
        symmetry=config.placement_symmetry, zeta=config.modal_damping,
    )
    sensors = SensorSet(solution.locations)
    actuators = (
        ActuatorSet(config.actuator_locations)
        if config.actuator_mode == "fixed"
        else ActuatorSet(solution.locations)
    )
    plant = build_plant(
        modal, actuators, sensors, zeta=config.modal_damping, n_flex=config.n_flexible
    )
    plant = with_decoupling(plant)
    controllers = pl._tune_channels(plant, config, config.target_bandwidth)
    per_channel, damping, stable = closed_loop_metrics(plant, controllers)
    os.makedirs(args.out_dir, exist_ok=True)
    plant.export_json(os.path.join(args.out_dir, "plant.json"))
    pl._write_json(
        os.path.join(args.out_dir, "controllers.json"),
        {
            dof: {"params": ctrl.to_dict(), "metrics": met.to_dict()}
            for dof, ctrl, met in zip(plant.controlled_dofs, controllers, per_channel)
        },
    )
    grid = default_frequency_grid()
    pl._export_channel_curves(args.out_dir, plant, controllers, grid)
    for dof, met in zip(plant.controlled_dofs, per_channel):
        bw = met.achieved_bandwidth / TWO_PI if met.achieved_bandwidth else float("nan")
        print(f"{dof}: bandwidth {bw:.2f} Hz, ||S||inf {met.sensitivity_peak:.3f}")
    print(f"closed loop stable: {stable}")
    return EXIT_OK


def _cmd_pipeline(config, args) -> int:
    report = pl.run_pipeline(config, args.out_dir)
    print(f"stage mass: {report.stage_mass:.4g} kg")
    print(
        "flexible resonances: "
        f"{[round(f / TWO_PI, 2) for f in report.flexible_resonances]} Hz"
    )
    for ch in report.channels:
        bw = ch.bandwidth / TWO_PI if ch.bandwidth else float("nan")
        print(f"{ch.dof}: bandwidth {bw:.2f} Hz, ||S||inf {ch.sensitivity_peak:.3f}")
    print(f"report written to {os.path.join(args.out_dir, 'report.json')}")
    return EXIT_OK


def _cmd_baseline(config, args) -> int:
    report = pl.run_baseline(config, args.out_dir)
    print(f"baseline mass: {report.stage_mass:.4g} kg")
    print(
        "first resonance: "
        f"{report.flexible_resonances[0] / TWO_PI:.2f} Hz"
    )
    for ch in report.channels:
        bw = ch.bandwidth / TWO_PI if ch.bandwidth else float("nan")
        print(f"{ch.dof}: bandwidth {bw:.2f} Hz")
    print(f"report written to {os.path.join(args.out_dir, 'report.json')}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    proposed = pl.report_from_json(args.proposed)
    baseline = pl.report_from_json(args.baseline)
    csv_path, txt_path = pl.compare(proposed, baseline, args.out_dir)
    with open(txt_path) as f:
        sys.stdout.write(f.read())
    print(f"written to {csv_path} and {txt_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litestage",
        description="Structure-control co-design for lightweight precision stages",
    )
    parser.add_argument("--config", help="pipeline configuration JSON")
    parser.add_argument("--out-dir", default="out", help="artifact output directory")
    parser.add_argument("--resolution", type=int, help="override mesh resolution")
    parser.add_argument("--seed", type=int, default=0,
                        help="recorded for provenance; the pipeline is deterministic")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("modes", help="modal analysis of the configured stage")
    p.add_argument("--design", help="design JSON overriding the config geometry")
    p.add_argument("--dump-mesh", action="store_true", help="write mesh CSV tables")
    p = sub.add_parser("place", help="optimize device placement")
    p.add_argument("--design", help="design JSON overriding the config geometry")
    sub.add_parser("optimize", help="optimize stage geometry")
    sub.add_parser("sweep", help="run the omega_high sweep")
    p = sub.add_parser("tune", help="build plant and tune controllers")
    p.add_argument("--design", help="design JSON overriding the config geometry")
    sub.add_parser("pipeline", help="full co-design pipeline")
    sub.add_parser("baseline", help="baseline design without flexible-mode control")
    p = sub.add_parser("compare", help="compare two design reports")
    p.add_argument("proposed", help="proposed report.json")
    p.add_argument("baseline", help="baseline report.json")
    return parser


_NEEDS_CONFIG = {
    "modes", "place", "optimize", "sweep", "tune", "pipeline", "baseline"
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in _NEEDS_CONFIG:
            if not args.config:
                raise ConfigError(f"'{args.command}' requires --config")
            config = load_config(args.config)
            handler = {
                "modes": _cmd_modes,
                "place": _cmd_place,
                "optimize": _cmd_optimize,
                "sweep": _cmd_sweep,
                "tune": _cmd_tune,
                "pipeline": _cmd_pipeline,
                "baseline": _cmd_baseline,
            }[args.command]
            return handler(config, args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pl.StageFailure as exc:
        kind = EXIT_INFEASIBLE if isinstance(
            exc.error, (InfeasibleError, DecouplingError)
        ) else EXIT_NUMERICAL
        print(f"error: {exc}", file=sys.stderr)
        return kind
    except (InfeasibleError, DecouplingError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, MeshError, GeometryError, LitestageError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
