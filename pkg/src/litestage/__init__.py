"""Structure-control co-design toolkit for lightweight precision stages."""

from .geometry import (
    GeometryBounds,
    MaterialSpec,
    PointMass,
    StageGeometry,
    build_geometry,
    total_mass,
)
from .meshing import Mesh, mesh_stage
from .assembly import SystemMatrices, assemble
from .modal import ModalModel, modal_from_geometry, solve_modes
from .plant import (
    ActuatorSet,
    FrequencyResponse,
    PlantModel,
    SensorSet,
    build_plant,
    decoupling_transforms,
    default_frequency_grid,
    frequency_response,
    sample_mode_shape,
    with_decoupling,
)
from .placement import (
    PlacementDomain,
    PlacementObjectiveSpec,
    PlacementSolution,
    modal_grammian,
    optimize_placement,
    placement_objective,
)
from .geomopt import (
    FrequencyConstraints,
    GeometryOptResult,
    SweepRecord,
    constraint_values,
    optimize_geometry,
    sweep_omega_high,
)
from .control import (
    ControllerParams,
    LoopMetrics,
    PlantChannel,
    TransferFunction,
    closed_loop_metrics,
    controller_from_bandwidth,
    loop_gain,
    max_bandwidth,
    sensitivity_peak,
    tune_gain,
)
from .config import PipelineConfig, load_config, parse_config
from .pipeline import DesignReport, compare, run_baseline, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "GeometryBounds",
    "MaterialSpec",
    "PointMass",
    "StageGeometry",
    "build_geometry",
    "total_mass",
    "Mesh",
    "mesh_stage",
    "SystemMatrices",
    "assemble",
    "ModalModel",
    "modal_from_geometry",
    "solve_modes",
    "ActuatorSet",
    "SensorSet",
    "PlantModel",
    "FrequencyResponse",
    "build_plant",
    "decoupling_transforms",
    "with_decoupling",
    "frequency_response",
    "sample_mode_shape",
    "default_frequency_grid",
    "PlacementDomain",
    "PlacementObjectiveSpec",
    "PlacementSolution",
    "modal_grammian",
    "placement_objective",
    "optimize_placement",
    "FrequencyConstraints",
    "GeometryOptResult",
    "SweepRecord",
    "constraint_values",
    "optimize_geometry",
    "sweep_omega_high",
    "ControllerParams",
    "LoopMetrics",
    "PlantChannel",
    "TransferFunction",
    "controller_from_bandwidth",
    "loop_gain",
    "sensitivity_peak",
    "tune_gain",
    "max_bandwidth",
    "closed_loop_metrics",
    "PipelineConfig",
    "load_config",
    "parse_config",
    "DesignReport",
    "run_pipeline",
    "run_baseline",
    "compare",
]
