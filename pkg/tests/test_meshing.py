"""Structured meshing: counts, rib alignment, thickness field, dumps."""

import numpy as np
import pytest

import litestage as ls
from litestage.errors import MeshError


def test_uniform_plate_counts(uniform_plate):
    mesh = ls.mesh_stage(uniform_plate, 10)
    assert mesh.n_elements == 100
    assert mesh.n_nodes == 121
    assert mesh.n_dof == 363


def test_resolution_floor(uniform_plate):
    with pytest.raises(MeshError, match="at least 4"):
        ls.mesh_stage(uniform_plate, 2)


def test_rib_elements_carry_extra_thickness(material):
    g = ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.020,
        rib_width=0.003, rib_spacing_x=0.1, rib_spacing_y=0.1, rib_counts=(0, 1),
    )
    mesh = ls.mesh_stage(g, 10)
    centroids_y = []
    dx, dy = mesh.element_sizes()
    for e in range(mesh.n_elements):
        ys = mesh.nodes[mesh.elements[e], 1]
        centroids_y.append(ys.mean())
    centroids_y = np.asarray(centroids_y)
    in_rib = np.abs(centroids_y) <= 0.0015
    assert in_rib.any()
    assert np.all(mesh.element_thickness[in_rib] == pytest.approx(0.025))
    assert np.all(mesh.element_thickness[~in_rib] == pytest.approx(0.005))


def test_rib_edges_become_grid_lines():
    g = ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.002, rib_height=0.02,
        rib_width=0.003, rib_spacing_x=0.11, rib_spacing_y=0.11, rib_counts=(3, 3),
    )
    mesh = ls.mesh_stage(g, 8)
    for lo, hi in g.rib_intervals_x():
        assert np.any(np.isclose(mesh.ticks_x, lo))
        assert np.any(np.isclose(mesh.ticks_x, hi))


def test_point_mass_gets_exact_node():
    g = ls.StageGeometry(
        side_x=0.3, side_y=0.3, base_thickness=0.002, rib_height=0.0,
        rib_width=0.003, rib_spacing_x=0.15, rib_spacing_y=0.15, rib_counts=(0, 0),
        point_masses=(ls.PointMass(mass=0.1, location=(0.0731, -0.0214)),),
    )
    mesh = ls.mesh_stage(g, 8)
    node = mesh.nearest_node(0.0731, -0.0214)
    assert np.allclose(mesh.nodes[node], (0.0731, -0.0214))


def test_mesh_ticks_symmetric_for_symmetric_stage(case1_config):
    mesh = ls.mesh_stage(case1_config.template, 10)
    assert np.allclose(mesh.ticks_x, -mesh.ticks_x[::-1])
    assert np.allclose(mesh.ticks_y, -mesh.ticks_y[::-1])


def test_mesh_dump_csv(tmp_path, uniform_plate):
    mesh = ls.mesh_stage(uniform_plate, 5)
    npath = tmp_path / "nodes.csv"
    epath = tmp_path / "elements.csv"
    mesh.dump_csv(npath, epath)
    nrows = npath.read_text().strip().splitlines()
    erows = epath.read_text().strip().splitlines()
    assert nrows[0] == "id,x,y"
    assert erows[0] == "id,n1,n2,n3,n4,thickness"
    assert len(nrows) == mesh.n_nodes + 1
    assert len(erows) == mesh.n_elements + 1
