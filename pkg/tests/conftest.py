"""Shared fixtures. Heavy artifacts (optimizations, pipelines) are built
once per session and reused across test modules."""

from __future__ import annotations

import json
import os

import numpy as np
import pytest

import litestage as ls
from litestage.config import parse_config

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CASE1_PATH = os.path.join(REPO_ROOT, "configs", "case1.json")
CASE2_PATH = os.path.join(REPO_ROOT, "configs", "case2.json")


def load_case_doc(path=CASE1_PATH, **overrides) -> dict:
    with open(path) as f:
        doc = json.load(f)
    for key, value in overrides.items():
        section, _, name = key.partition(".")
        if name:
            doc.setdefault(section, {})[name] = value
        else:
            doc[section] = value
    return doc


@pytest.fixture(scope="session")
def material():
    return ls.MaterialSpec()


@pytest.fixture(scope="session")
def uniform_plate():
    """300 x 300 x 5 mm free aluminum plate, no ribs."""
    return ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.0,
        rib_width=0.003, rib_spacing_x=0.15, rib_spacing_y=0.15, rib_counts=(0, 0),
    )


@pytest.fixture(scope="session")
def thin_plate():
    """300 x 300 x 1 mm free plate used for the FE-vs-oracle validation.

    Thin enough that the shear-deformation gap to thin-plate theory is
    negligible next to the discretization error being measured.
    """
    return ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.001, rib_height=0.0,
        rib_width=0.003, rib_spacing_x=0.15, rib_spacing_y=0.15, rib_counts=(0, 0),
    )


@pytest.fixture(scope="session")
def case1_config():
    return parse_config(load_case_doc())


@pytest.fixture(scope="session")
def case1_modal(case1_config):
    """Modal model of the case-1 initial stage geometry (13 modes)."""
    return ls.modal_from_geometry(
        case1_config.template, case1_config.material, 10, n_modes=13
    )


@pytest.fixture(scope="session")
def case1_optimum(case1_config):
    """Geometry optimization result for the case-1 configuration."""
    return ls.optimize_geometry(
        case1_config.template,
        case1_config.bounds,
        case1_config.constraints,
        case1_config.init_params,
        case1_config.material,
        case1_config.resolution,
        budget=250,
    )


@pytest.fixture(scope="session")
def case1_plant(case1_config, case1_optimum):
    """Decoupled 13-mode plant on the optimized case-1 stage."""
    modal = ls.modal_from_geometry(
        case1_optimum.geometry, case1_config.material, case1_config.resolution, 13
    )
    domain = ls.PlacementDomain.full_planform(modal)
    sol = ls.optimize_placement(
        modal, domain, case1_config.placement_spec, count=4, symmetry=True
    )
    plant = ls.build_plant(
        modal, ls.ActuatorSet(sol.locations), ls.SensorSet(sol.locations),
        zeta=0.01, n_flex=10,
    )
    return ls.with_decoupling(plant)


@pytest.fixture(scope="session")
def pipeline_runs(tmp_path_factory):
    """Proposed + baseline pipeline runs on case 1, plus a repeat of the
    proposed run for determinism checks."""
    cfg = parse_config(load_case_doc())
    base = tmp_path_factory.mktemp("pipeline")
    report = ls.run_pipeline(cfg, str(base / "proposed"))
    report_repeat = ls.run_pipeline(cfg, str(base / "proposed_repeat"))
    baseline = ls.run_baseline(cfg, str(base / "baseline"))
    return {
        "dir": base,
        "proposed": report,
        "proposed_repeat": report_repeat,
        "baseline": baseline,
    }
