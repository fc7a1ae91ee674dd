"""Eigensolution: analytic cases, invariants, oracle validation."""

import numpy as np
import pytest

import litestage as ls
from litestage.errors import SolverError
from oracles import plate_frequencies_rayleigh_ritz

# Golden value frozen from the Rayleigh-Ritz oracle (free 300x300x1 mm
# 6061-T6 plate, nu = 0.33): first elastic frequency in Hz.
RAYLEIGH_RITZ_F1_HZ = 36.10858


def test_two_dof_analytic():
    m = ls.SystemMatrices(mass=np.eye(2), stiffness=np.array([[2.0, -1.0], [-1.0, 1.0]]))
    modal = ls.solve_modes(m, 2)
    expected = np.sqrt([(3 - np.sqrt(5)) / 2, (3 + np.sqrt(5)) / 2])
    assert np.allclose(modal.frequencies, expected, rtol=1e-10, atol=1e-12)


def test_non_spd_mass_rejected():
    m = ls.SystemMatrices(mass=np.diag([1.0, -1.0]), stiffness=np.eye(2))
    with pytest.raises(SolverError, match="positive definite"):
        ls.solve_modes(m, 2)


def test_free_plate_has_exactly_three_rigid_modes(uniform_plate, material):
    modal = ls.modal_from_geometry(uniform_plate, material, 12, 10)
    assert modal.n_rigid == 3
    first_elastic = modal.frequencies[3]
    assert np.all(modal.frequencies[:3] < 1e-4 * first_elastic)


def test_mass_normalization_and_stiffness_diagonalization(uniform_plate, material):
    mesh = ls.mesh_stage(uniform_plate, 10)
    sm = ls.assemble(mesh, material)
    modal = ls.solve_modes(sm, 8, mesh)
    gram = modal.shapes.T @ (sm.mass @ modal.shapes)
    assert np.max(np.abs(gram - np.eye(8))) < 1e-8
    kgram = modal.shapes.T @ (sm.stiffness @ modal.shapes)
    for i in range(8):
        w2 = modal.frequencies[i] ** 2
        if w2 > 0:
            assert kgram[i, i] == pytest.approx(w2, rel=1e-6)
    off = kgram - np.diag(np.diag(kgram))
    assert np.max(np.abs(off)) < 1e-6 * max(modal.frequencies) ** 2


def test_rigid_z_shape_is_uniform(uniform_plate, material):
    modal = ls.modal_from_geometry(uniform_plate, material, 10, 6)
    w = modal.shapes[0::3, 0]
    expected = 1.0 / np.sqrt(modal.total_mass)
    assert np.allclose(w, expected, rtol=1e-6)


def test_first_elastic_matches_rayleigh_ritz(thin_plate, material):
    """FE vs independent thin-plate oracle: 2% at default resolution,
    improving under refinement."""
    oracle_hz = RAYLEIGH_RITZ_F1_HZ
    f10 = ls.modal_from_geometry(thin_plate, material, 10, 4).frequencies_hz[3]
    f16 = ls.modal_from_geometry(thin_plate, material, 16, 4).frequencies_hz[3]
    err10 = abs(f10 - oracle_hz) / oracle_hz
    err16 = abs(f16 - oracle_hz) / oracle_hz
    assert err10 < 0.02
    assert err16 < err10


def test_frozen_oracle_value_reproducible(material):
    w = plate_frequencies_rayleigh_ritz(0.3, 0.001, 68.9e9, 0.33, 2700.0)
    assert w[3] / (2 * np.pi) == pytest.approx(RAYLEIGH_RITZ_F1_HZ, abs=5e-4)


def test_refinement_convergence_gate(thin_plate, material):
    f12 = ls.modal_from_geometry(thin_plate, material, 12, 4).frequencies_hz[3]
    f24 = ls.modal_from_geometry(thin_plate, material, 24, 4).frequencies_hz[3]
    assert abs(f24 - f12) / f12 < 0.02


def test_mirror_symmetry_of_spectrum(material):
    """Reflecting the point masses across an axis leaves the spectrum
    unchanged for a doubly symmetric structure."""
    def freqs(masses):
        g = ls.StageGeometry(
            side_x=0.3, side_y=0.3, base_thickness=0.002, rib_height=0.015,
            rib_width=0.004, rib_spacing_x=0.1, rib_spacing_y=0.1,
            rib_counts=(2, 2), point_masses=masses,
        )
        return ls.modal_from_geometry(g, material, 8, 8).frequencies

    masses = (
        ls.PointMass(mass=0.2, location=(0.06, 0.03)),
        ls.PointMass(mass=0.1, location=(-0.02, -0.09)),
    )
    mirrored_x = tuple(
        ls.PointMass(mass=pm.mass, location=(-pm.location[0], pm.location[1]))
        for pm in masses
    )
    mirrored_y = tuple(
        ls.PointMass(mass=pm.mass, location=(pm.location[0], -pm.location[1]))
        for pm in masses
    )
    f0 = freqs(masses)
    for other in (mirrored_x, mirrored_y):
        f1 = freqs(other)
        nz = f0 > 0
        assert np.allclose(f1[nz], f0[nz], rtol=1e-6)


def test_sample_mode_shape(uniform_plate, material):
    modal = ls.modal_from_geometry(uniform_plate, material, 8, 6)
    mesh = modal.mesh
    node = 17
    x, y = mesh.nodes[node]
    vals = ls.sample_mode_shape(modal, (x, y))
    assert np.allclose(vals, modal.shapes[3 * node, :], atol=1e-12)
    # rigid z mode anywhere
    assert modal.w_at(0.0321, -0.0777)[0] == pytest.approx(
        1.0 / np.sqrt(modal.total_mass), rel=1e-9
    )
    # element centroid equals the mean of 4 nodal values
    cx = (mesh.ticks_x[2] + mesh.ticks_x[3]) / 2
    cy = (mesh.ticks_y[4] + mesh.ticks_y[5]) / 2
    nx = mesh.ticks_x.size
    corner_nodes = [4 * nx + 2, 4 * nx + 3, 5 * nx + 2, 5 * nx + 3]
    mean = np.mean([modal.shapes[3 * n, :] for n in corner_nodes], axis=0)
    assert np.allclose(modal.w_at(cx, cy), mean, atol=1e-12)


def test_sample_outside_planform_rejected(uniform_plate, material):
    modal = ls.modal_from_geometry(uniform_plate, material, 8, 4)
    with pytest.raises(ValueError, match="outside"):
        modal.w_at(0.2, 0.0)


def test_too_many_modes_rejected():
    m = ls.SystemMatrices(mass=np.eye(2), stiffness=np.eye(2))
    with pytest.raises(SolverError, match="modes"):
        ls.solve_modes(m, 5)
