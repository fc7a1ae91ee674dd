"""Parametric stage geometry: rib-stiffened plate with lumped masses.

The stage is a rectangular base plate reinforced by an axis-aligned family
of ribs, equally spaced and symmetric about both planform axes, plus
optional lumped point masses (payloads, magnet arrays). The free design
vector is (base_thickness, rib_height, rib_width, rib_spacing_x,
rib_spacing_y); rib counts and the planform are fixed layout choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GeometryError

# Manufacturability floor for base thickness and rib width [m].
MIN_FEATURE_SIZE = 1e-3

# Ordered names of the free geometric parameters.
PARAM_NAMES = (
    "base_thickness",
    "rib_height",
    "rib_width",
    "rib_spacing_x",
    "rib_spacing_y",
)


@dataclass(frozen=True)
class MaterialSpec:
    """Isotropic material (default: 6061-T6 aluminum)."""

    youngs_modulus: float = 68.9e9
    poisson_ratio: float = 0.33
    density: float = 2700.0

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise GeometryError("youngs_modulus must be positive")
        if not 0.0 <= self.poisson_ratio < 0.5:
            raise GeometryError("poisson_ratio must lie in [0, 0.5)")
        if self.density <= 0:
            raise GeometryError("density must be positive")


@dataclass(frozen=True)
class PointMass:
    """Lumped mass rigidly attached to the plate surface."""

    mass: float
    location: tuple[float, float]
    rotary_inertia: float = 0.0

    def __post_init__(self):
        if self.mass < 0 or self.rotary_inertia < 0:
            raise GeometryError("point mass and rotary inertia must be non-negative")


@dataclass(frozen=True)
class GeometryBounds:
    """Box bounds for the free parameter vector."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (len(PARAM_NAMES),) or hi.shape != (len(PARAM_NAMES),):
            raise GeometryError(
                f"bounds must have {len(PARAM_NAMES)} entries {PARAM_NAMES}"
            )
        if np.any(lo > hi):
            raise GeometryError("lower bound exceeds upper bound")
        if lo[0] < MIN_FEATURE_SIZE:
            raise GeometryError("base thickness lower bound below manufacturability bound (1 mm)")
        if lo[2] < MIN_FEATURE_SIZE:
            raise GeometryError("rib width lower bound below manufacturability bound (1 mm)")

    def clip(self, params: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(params, dtype=float), self.lower, self.upper)

    def contains(self, params, rtol: float = 1e-9) -> bool:
        p = np.asarray(params, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        span = np.maximum(hi - lo, 1e-30)
        return bool(np.all(p >= lo - rtol * span) and np.all(p <= hi + rtol * span))


@dataclass(frozen=True)
class StageGeometry:
    """Validated rib-stiffened stage geometry.

    Ribs with count c along an axis sit at offsets (i - (c-1)/2) * spacing
    from the planform center, so the layout is symmetric about both axes.
    ``rib_counts[0]`` ribs run parallel to y (offset along x) and
    ``rib_counts[1]`` ribs run parallel to x.
    """

    side_x: float
    side_y: float
    base_thickness: float
    rib_height: float
    rib_width: float
    rib_spacing_x: float
    rib_spacing_y: float
    rib_counts: tuple[int, int] = (2, 2)
    point_masses: tuple[PointMass, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("side_x", "side_y", "base_thickness", "rib_width"):
            if getattr(self, name) <= 0:
                raise GeometryError(f"{name} must be positive")
        if self.rib_height < 0:
            raise GeometryError("rib_height must be non-negative")
        if self.base_thickness < MIN_FEATURE_SIZE:
            raise GeometryError("base thickness below manufacturability bound (1 mm)")
        if self.rib_width < MIN_FEATURE_SIZE:
            raise GeometryError("rib width below manufacturability bound (1 mm)")
        if min(self.rib_counts) < 0:
            raise GeometryError("rib counts must be non-negative")
        for x in self.rib_positions_x():
            if abs(x) + self.rib_width / 2 > self.side_x / 2 + 1e-12:
                raise GeometryError("rib footprint exceeds planform (x direction)")
        for y in self.rib_positions_y():
            if abs(y) + self.rib_width / 2 > self.side_y / 2 + 1e-12:
                raise GeometryError("rib footprint exceeds planform (y direction)")
        # Distinct parallel ribs must not merge into one footprint.
        for count, spacing in zip(self.rib_counts, (self.rib_spacing_x, self.rib_spacing_y)):
            if count > 1 and spacing < self.rib_width:
                raise GeometryError("rib spacing smaller than rib width (ribs overlap)")
        for pm in self.point_masses:
            x, y = pm.location
            if abs(x) > self.side_x / 2 + 1e-12 or abs(y) > self.side_y / 2 + 1e-12:
                raise GeometryError(f"point mass at ({x:g}, {y:g}) outside planform")

    @property
    def params(self) -> np.ndarray:
        """Free parameter vector in PARAM_NAMES order."""
        return np.array(
            [
                self.base_thickness,
                self.rib_height,
                self.rib_width,
                self.rib_spacing_x,
                self.rib_spacing_y,
            ]
        )

    def rib_positions_x(self) -> np.ndarray:
        """Center offsets along x of ribs running parallel to y."""
        c = self.rib_counts[0]
        return (np.arange(c) - (c - 1) / 2) * self.rib_spacing_x

    def rib_positions_y(self) -> np.ndarray:
        """Center offsets along y of ribs running parallel to x."""
        c = self.rib_counts[1]
        return (np.arange(c) - (c - 1) / 2) * self.rib_spacing_y

    def rib_intervals_x(self) -> list[tuple[float, float]]:
        """Rib footprints along x as (lo, hi) intervals."""
        w = self.rib_width
        return [(x - w / 2, x + w / 2) for x in self.rib_positions_x()]

    def rib_intervals_y(self) -> list[tuple[float, float]]:
        w = self.rib_width
        return [(y - w / 2, y + w / 2) for y in self.rib_positions_y()]

    def in_rib(self, x, y) -> np.ndarray:
        """Whether (x, y) points fall inside any rib footprint (vectorized)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        hit = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for lo, hi in self.rib_intervals_x():
            hit |= (x >= lo) & (x <= hi)
        for lo, hi in self.rib_intervals_y():
            hit |= (y >= lo) & (y <= hi)
        return hit

    def with_params(self, params) -> "StageGeometry":
        """Copy of this geometry with a new free parameter vector."""
        p = np.asarray(params, dtype=float)
        if p.shape != (len(PARAM_NAMES),):
            raise GeometryError(f"parameter vector must have shape ({len(PARAM_NAMES)},)")
        return replace(
            self,
            base_thickness=float(p[0]),
            rib_height=float(p[1]),
            rib_width=float(p[2]),
            rib_spacing_x=float(p[3]),
            rib_spacing_y=float(p[4]),
        )


def build_geometry(
    params,
    bounds: GeometryBounds | None = None,
    *,
    side_x: float,
    side_y: float,
    rib_counts: tuple[int, int] = (2, 2),
    point_masses=(),
) -> StageGeometry:
    """Validate raw parameter values into a StageGeometry.

    Out-of-bounds parameters are errors, never clamped; the optimizer is
    responsible for proposing in-bounds trial points.
    """
    p = np.asarray(params, dtype=float)
    if p.shape != (len(PARAM_NAMES),):
        raise GeometryError(f"expected {len(PARAM_NAMES)} parameters {PARAM_NAMES}")
    if bounds is not None:
        lo = np.asarray(bounds.lower)
        hi = np.asarray(bounds.upper)
        span = np.maximum(hi - lo, 1e-30)
        for i, name in enumerate(PARAM_NAMES):
            if p[i] < lo[i] - 1e-9 * span[i] or p[i] > hi[i] + 1e-9 * span[i]:
                raise GeometryError(
                    f"{name}={p[i]:g} outside bounds [{lo[i]:g}, {hi[i]:g}]"
                )
    return StageGeometry(
        side_x=side_x,
        side_y=side_y,
        base_thickness=float(p[0]),
        rib_height=float(p[1]),
        rib_width=float(p[2]),
        rib_spacing_x=float(p[3]),
        rib_spacing_y=float(p[4]),
        rib_counts=tuple(rib_counts),
        point_masses=tuple(point_masses),
    )


def total_mass(geometry: StageGeometry, material: MaterialSpec | None = None) -> float:
    """Stage mass: base plate + rib volume (overlaps once) + point masses."""
    mat = material or MaterialSpec()
    g = geometry
    base_volume = g.side_x * g.side_y * g.base_thickness
    rib_area = 0.0
    nx, ny = g.rib_counts
    rib_area += nx * g.rib_width * g.side_y
    rib_area += ny * g.rib_width * g.side_x
    # Crossing footprints are counted once: subtract each overlap cell.
    rib_area -= nx * ny * g.rib_width**2
    rib_volume = rib_area * g.rib_height
    lumped = sum(pm.mass for pm in g.point_masses)
    return mat.density * (base_volume + rib_volume) + lumped
