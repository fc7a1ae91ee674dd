"""Structured quad meshing of the stage planform.

Grid lines are snapped onto rib footprint edges so every element lies
either fully inside or fully outside a rib; the per-element thickness
field is then exact and mesh mass matches the closed-form stage mass.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .geometry import StageGeometry

DOF_PER_NODE = 3  # transverse deflection w, rotations about x and y


@dataclass(frozen=True)
class Mesh:
    """Conforming structured mesh of axis-aligned rectangles.

    Node ordering is row-major over (ticks_x, ticks_y): index = j * nx + i.
    Element nodes are counter-clockwise. DOFs per node: (w, theta_x,
    theta_y), so node n owns global DOFs (3n, 3n+1, 3n+2).
    """

    ticks_x: np.ndarray
    ticks_y: np.ndarray
    nodes: np.ndarray           # (n_nodes, 2)
    elements: np.ndarray        # (n_elems, 4) int
    element_thickness: np.ndarray  # (n_elems,)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_dof(self) -> int:
        return DOF_PER_NODE * self.n_nodes

    def element_sizes(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-element (dx, dy)."""
        dx = np.diff(self.ticks_x)
        dy = np.diff(self.ticks_y)
        nex = dx.size
        ex = np.tile(dx, dy.size)
        ey = np.repeat(dy, nex)
        return ex, ey

    def nearest_node(self, x: float, y: float) -> int:
        d2 = (self.nodes[:, 0] - x) ** 2 + (self.nodes[:, 1] - y) ** 2
        return int(np.argmin(d2))

    def dump_csv(self, node_path, element_path) -> None:
        """Write node (id,x,y) and element (id,n1..n4,thickness) tables."""
        with open(node_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "x", "y"])
            for i, (x, y) in enumerate(self.nodes):
                w.writerow([i, repr(float(x)), repr(float(y))])
        with open(element_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["id", "n1", "n2", "n3", "n4", "thickness"])
            for e in range(self.n_elements):
                n1, n2, n3, n4 = (int(v) for v in self.elements[e])
                w.writerow([e, n1, n2, n3, n4, repr(float(self.element_thickness[e]))])


def _snap_ticks(lo: float, hi: float, resolution: int, edges) -> np.ndarray:
    """Uniform ticks on [lo, hi] with grid lines snapped onto rib edges.

    Rib footprint edges become mandatory grid lines; uniform ticks closer
    than a quarter of the nominal spacing to an edge are dropped so ribs
    are meshed exactly without sliver elements.
    """
    span = hi - lo
    tol = 1e-9 * span
    h = span / resolution
    uniform = np.linspace(lo, hi, resolution + 1)
    interior: list[float] = []
    for e in sorted(float(e) for e in edges if lo + tol < e < hi - tol):
        if not interior or e - interior[-1] > tol:
            interior.append(e)
    keep = np.ones(uniform.size, dtype=bool)
    for e in interior:
        keep &= np.abs(uniform - e) >= 0.25 * h
    keep[0] = keep[-1] = True
    ticks = np.unique(np.concatenate([uniform[keep], np.asarray(interior)]))
    if np.any(np.diff(ticks) <= tol):
        raise MeshError("resolution too coarse: grid lines collapsed; refine the mesh")
    return ticks


def mesh_stage(geometry: StageGeometry, resolution: int) -> Mesh:
    """Mesh the stage with ``resolution`` elements per side before snapping."""
    if resolution < 4:
        raise MeshError("resolution must be at least 4 elements per side")

    g = geometry
    edges_x = [v for lo, hi in g.rib_intervals_x() for v in (lo, hi)]
    edges_y = [v for lo, hi in g.rib_intervals_y() for v in (lo, hi)]
    # Guarantee a node under every point mass so lumping is exact.
    edges_x += [pm.location[0] for pm in g.point_masses]
    edges_y += [pm.location[1] for pm in g.point_masses]
    ticks_x = _snap_ticks(-g.side_x / 2, g.side_x / 2, resolution, edges_x)
    ticks_y = _snap_ticks(-g.side_y / 2, g.side_y / 2, resolution, edges_y)

    xx, yy = np.meshgrid(ticks_x, ticks_y)  # yy varies over rows
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    nx = ticks_x.size
    nex, ney = ticks_x.size - 1, ticks_y.size - 1
    i, j = np.meshgrid(np.arange(nex), np.arange(ney))
    i = i.ravel()
    j = j.ravel()
    n1 = j * nx + i
    elements = np.column_stack([n1, n1 + 1, n1 + nx + 1, n1 + nx])

    cx = (ticks_x[:-1] + ticks_x[1:]) / 2
    cy = (ticks_y[:-1] + ticks_y[1:]) / 2
    cxx, cyy = np.meshgrid(cx, cy)
    thickness = np.where(
        g.in_rib(cxx.ravel(), cyy.ravel()),
        g.base_thickness + g.rib_height,
        g.base_thickness,
    )
    return Mesh(
        ticks_x=ticks_x,
        ticks_y=ticks_y,
        nodes=nodes,
        elements=elements,
        element_thickness=thickness,
    )
