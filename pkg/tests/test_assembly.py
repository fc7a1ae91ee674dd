"""Mass/stiffness assembly: symmetry, totals, degenerate inputs."""

import numpy as np
import pytest

import litestage as ls
from litestage.errors import MeshError
from litestage.meshing import Mesh


def test_matrices_symmetric(uniform_plate, material):
    mesh = ls.mesh_stage(uniform_plate, 6)
    sm = ls.assemble(mesh, material)
    assert (sm.stiffness - sm.stiffness.T).count_nonzero() == 0
    assert (sm.mass - sm.mass.T).count_nonzero() == 0


def test_translational_mass_equals_density_volume(uniform_plate, material):
    mesh = ls.mesh_stage(uniform_plate, 10)
    sm = ls.assemble(mesh, material)
    assert sm.translational_mass() == pytest.approx(1.215, rel=1e-9)


def test_point_masses_add_to_translational_total(material):
    magnets = tuple(
        ls.PointMass(mass=0.162, location=(sx * 0.12, sy * 0.12))
        for sx in (-1, 1) for sy in (-1, 1)
    )
    g = ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.0,
        rib_width=0.003, rib_spacing_x=0.15, rib_spacing_y=0.15,
        rib_counts=(0, 0), point_masses=magnets,
    )
    mesh = ls.mesh_stage(g, 10)
    sm = ls.assemble(mesh, material, g.point_masses)
    assert sm.translational_mass() == pytest.approx(1.863, rel=1e-9)


def test_ribbed_mass_matches_closed_form(case1_config):
    g = case1_config.template
    mesh = ls.mesh_stage(g, 10)
    sm = ls.assemble(mesh, case1_config.material, g.point_masses)
    assert sm.translational_mass() == pytest.approx(
        ls.total_mass(g, case1_config.material), rel=1e-9
    )


def test_zero_thickness_element_rejected(uniform_plate, material):
    mesh = ls.mesh_stage(uniform_plate, 5)
    bad = Mesh(
        ticks_x=mesh.ticks_x,
        ticks_y=mesh.ticks_y,
        nodes=mesh.nodes,
        elements=mesh.elements,
        element_thickness=np.zeros(mesh.n_elements),
    )
    with pytest.raises(MeshError, match="thickness"):
        ls.assemble(bad, material)


def test_rigid_shapes_produce_zero_strain_energy(uniform_plate, material):
    mesh = ls.mesh_stage(uniform_plate, 6)
    sm = ls.assemble(mesh, material)
    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    for shape in ("z", "tx", "ty"):
        v = np.zeros(mesh.n_dof)
        if shape == "z":
            v[0::3] = 1.0
        elif shape == "tx":
            v[0::3] = y
            v[1::3] = 1.0
        else:
            v[0::3] = -x
            v[2::3] = 1.0
        energy = float(v @ (sm.stiffness @ v))
        scale = float(np.abs(sm.stiffness).max())
        assert abs(energy) < 1e-12 * scale
