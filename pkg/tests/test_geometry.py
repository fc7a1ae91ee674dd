"""Geometry validation and closed-form mass."""

import numpy as np
import pytest

import litestage as ls
from litestage.errors import GeometryError


def build(params, **kw):
    defaults = dict(side_x=0.3, side_y=0.3, rib_counts=(2, 2))
    defaults.update(kw)
    return ls.build_geometry(params, **defaults)


class TestBuildGeometry:
    def test_valid_geometry(self):
        g = build([0.005, 0.020, 0.003, 0.15, 0.15])
        assert g.base_thickness == 0.005
        assert len(g.rib_positions_x()) == 2

    def test_base_thickness_below_floor(self):
        with pytest.raises(GeometryError, match="manufacturability"):
            build([0.0005, 0.020, 0.003, 0.15, 0.15])

    def test_rib_width_below_floor(self):
        with pytest.raises(GeometryError, match="manufacturability"):
            build([0.005, 0.020, 0.0005, 0.15, 0.15])

    def test_rib_footprint_overflow(self):
        with pytest.raises(GeometryError, match="footprint exceeds planform"):
            build([0.005, 0.020, 0.4, 0.15, 0.15])

    def test_out_of_bounds_is_error_not_clamp(self):
        bounds = ls.GeometryBounds(
            lower=(0.001, 0.0, 0.001, 0.1, 0.1), upper=(0.004, 0.03, 0.01, 0.2, 0.2)
        )
        with pytest.raises(GeometryError, match="base_thickness"):
            build([0.005, 0.020, 0.003, 0.15, 0.15], bounds=bounds)

    def test_point_mass_outside_planform(self):
        with pytest.raises(GeometryError, match="outside planform"):
            build(
                [0.005, 0.020, 0.003, 0.15, 0.15],
                point_masses=(ls.PointMass(mass=0.1, location=(0.3, 0.0)),),
            )

    def test_bounds_shape_checked(self):
        with pytest.raises(GeometryError):
            ls.GeometryBounds(lower=(0.001, 0.0), upper=(0.004, 0.03))


class TestTotalMass:
    def test_uniform_plate(self, uniform_plate, material):
        assert ls.total_mass(uniform_plate, material) == pytest.approx(1.215, abs=1e-12)

    def test_single_rib_additive(self, material):
        g = ls.StageGeometry(
            side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.020,
            rib_width=0.003, rib_spacing_x=0.1, rib_spacing_y=0.1, rib_counts=(0, 1),
        )
        expected = 1.215 + 2700 * (0.3 * 0.003 * 0.020)
        assert ls.total_mass(g, material) == pytest.approx(expected, rel=1e-12)

    def test_crossing_ribs_counted_once(self, material):
        g = ls.StageGeometry(
            side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.020,
            rib_width=0.003, rib_spacing_x=0.1, rib_spacing_y=0.1, rib_counts=(1, 1),
        )
        rib_volume = (2 * 0.3 * 0.003 - 0.003**2) * 0.020
        expected = 1.215 + 2700 * rib_volume
        assert ls.total_mass(g, material) == pytest.approx(expected, rel=1e-12)

    def test_point_masses_add(self, material):
        magnets = tuple(
            ls.PointMass(mass=0.162, location=(sx * 0.12, sy * 0.12))
            for sx in (-1, 1) for sy in (-1, 1)
        )
        g = ls.StageGeometry(
            side_x=0.3, side_y=0.3, base_thickness=0.005, rib_height=0.0,
            rib_width=0.003, rib_spacing_x=0.15, rib_spacing_y=0.15,
            rib_counts=(0, 0), point_masses=magnets,
        )
        assert ls.total_mass(g, material) == pytest.approx(1.863, abs=1e-9)


def test_with_params_roundtrip(uniform_plate):
    p = uniform_plate.params
    g2 = uniform_plate.with_params(p * 1.1)
    assert np.allclose(g2.params, p * 1.1)
    assert g2.side_x == uniform_plate.side_x
