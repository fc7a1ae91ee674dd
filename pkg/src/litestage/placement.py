"""Grammian-based actuator/sensor placement over mesh candidates.

For a lightly damped mode the controllability (and, for displacement
sensors, observability) grammian reduces to a closed form proportional
to the squared modal displacement at the device locations over 4*zeta*
omega. Placement maximizes the controlled-mode grammian sum minus a
weighted sum over uncontrolled modes; because devices enter the
objective additively, the direct search is exhaustive over candidate
nodes, optionally restricted to quadrant representatives mirrored into a
symmetric 4-device set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import LitestageError
from .modal import ModalModel
from .plant import DEFAULT_MODAL_DAMPING


@dataclass(frozen=True)
class PlacementDomain:
    """Rectangular device region; candidates are the mesh nodes inside."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @classmethod
    def full_planform(cls, modal: ModalModel) -> "PlacementDomain":
        mesh = modal.mesh
        return cls(
            x_min=float(mesh.ticks_x[0]),
            x_max=float(mesh.ticks_x[-1]),
            y_min=float(mesh.ticks_y[0]),
            y_max=float(mesh.ticks_y[-1]),
        )

    def candidate_indices(self, modal: ModalModel) -> np.ndarray:
        nodes = modal.mesh.nodes
        inside = (
            (nodes[:, 0] >= self.x_min - 1e-12)
            & (nodes[:, 0] <= self.x_max + 1e-12)
            & (nodes[:, 1] >= self.y_min - 1e-12)
            & (nodes[:, 1] <= self.y_max + 1e-12)
        )
        idx = np.flatnonzero(inside)
        if idx.size == 0:
            raise LitestageError("placement domain contains no candidate nodes")
        return idx


@dataclass(frozen=True)
class PlacementObjectiveSpec:
    """Mode sets and trade-off weight of the placement objective.

    Mode indices are 1-based over flexible modes only; rigid modes are
    excluded because the grammian closed form divides by the natural
    frequency.
    """

    gamma: float
    controlled_modes: tuple[int, ...] = (1,)
    uncontrolled_modes: tuple[int, ...] = tuple(range(2, 11))

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")
        if set(self.controlled_modes) & set(self.uncontrolled_modes):
            raise ValueError("controlled and uncontrolled mode sets overlap")
        if any(i < 1 for i in self.controlled_modes + self.uncontrolled_modes):
            raise ValueError("flexible mode indices are 1-based")


@dataclass(frozen=True)
class PlacementSolution:
    """Optimized device locations with per-mode grammians."""

    locations: tuple[tuple[float, float], ...]
    node_indices: tuple[int, ...]
    objective: float
    controlled_grammians: dict[int, float] = field(default_factory=dict)
    uncontrolled_grammians: dict[int, float] = field(default_factory=dict)

    @property
    def controlled_sum(self) -> float:
        return sum(self.controlled_grammians.values())

    @property
    def uncontrolled_sum(self) -> float:
        return sum(self.uncontrolled_grammians.values())


def modal_grammian(shape_values, zeta: float, omega: float) -> float:
    """Closed-form grammian ||phi(locations)||^2 / (4 zeta omega)."""
    if zeta <= 0:
        raise ValueError("modal damping must be positive for the grammian closed form")
    if omega <= 0:
        raise ValueError("grammians are undefined for rigid modes (omega = 0)")
    v = np.asarray(shape_values, dtype=float)
    return float(v @ v) / (4.0 * zeta * omega)


def _flexible_shape_table(modal: ModalModel, mode_numbers, nodes_idx) -> np.ndarray:
    """(n_modes_sel, n_candidates) deflections of flexible modes at nodes."""
    w = modal.shapes[0::3, :]
    cols = []
    for i in mode_numbers:
        mode = modal.n_rigid + i - 1
        if mode >= modal.n_modes:
            raise IndexError(
                f"flexible mode {i} out of range (model keeps {modal.n_modes - modal.n_rigid})"
            )
        cols.append(w[nodes_idx, mode])
    return np.asarray(cols)


def _per_mode_factors(modal: ModalModel, mode_numbers, zeta: float) -> np.ndarray:
    omegas = []
    for i in mode_numbers:
        mode = modal.n_rigid + i - 1
        omega = modal.frequencies[mode]
        if omega <= 0:
            raise ValueError("grammians are undefined for rigid modes (omega = 0)")
        omegas.append(omega)
    return 1.0 / (4.0 * zeta * np.asarray(omegas))


def placement_objective(
    locations,
    spec: PlacementObjectiveSpec,
    modal: ModalModel,
    zeta: float = DEFAULT_MODAL_DAMPING,
) -> float:
    """Controlled grammian sum minus gamma times the uncontrolled sum."""
    total = 0.0
    for i in spec.controlled_modes:
        values = [modal.w_at(x, y)[modal.n_rigid + i - 1] for x, y in locations]
        total += modal_grammian(values, zeta, modal.frequencies[modal.n_rigid + i - 1])
    for i in spec.uncontrolled_modes:
        mode = modal.n_rigid + i - 1
        if mode >= modal.n_modes:
            raise IndexError(
                f"flexible mode {i} out of range (model keeps {modal.n_modes - modal.n_rigid})"
            )
        values = [modal.w_at(x, y)[mode] for x, y in locations]
        total -= spec.gamma * modal_grammian(values, zeta, modal.frequencies[mode])
    return total


def _node_scores(
    modal: ModalModel,
    spec: PlacementObjectiveSpec,
    nodes_idx: np.ndarray,
    zeta: float,
) -> np.ndarray:
    """Per-candidate single-device objective contribution g(node)."""
    score = np.zeros(nodes_idx.size)
    if spec.controlled_modes:
        shapes = _flexible_shape_table(modal, spec.controlled_modes, nodes_idx)
        fac = _per_mode_factors(modal, spec.controlled_modes, zeta)
        score += fac @ shapes**2
    if spec.uncontrolled_modes:
        shapes = _flexible_shape_table(modal, spec.uncontrolled_modes, nodes_idx)
        fac = _per_mode_factors(modal, spec.uncontrolled_modes, zeta)
        score -= spec.gamma * (fac @ shapes**2)
    return score


def _mirror_images(modal: ModalModel, node: int) -> tuple[int, ...]:
    """Node indices of (x,y), (-x,y), (-x,-y), (x,-y) on the mesh grid."""
    mesh = modal.mesh
    x, y = mesh.nodes[node]
    out = []
    for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
        ix = np.argmin(np.abs(mesh.ticks_x - sx * x))
        iy = np.argmin(np.abs(mesh.ticks_y - sy * y))
        if (
            abs(mesh.ticks_x[ix] - sx * x) > 1e-9
            or abs(mesh.ticks_y[iy] - sy * y) > 1e-9
        ):
            raise LitestageError(
                "mesh is not mirror-symmetric; disable the symmetric search"
            )
        out.append(int(iy * mesh.ticks_x.size + ix))
    return tuple(out)


def _solution_from_nodes(
    modal: ModalModel,
    spec: PlacementObjectiveSpec,
    node_ids: tuple[int, ...],
    zeta: float,
) -> PlacementSolution:
    mesh = modal.mesh
    locations = tuple((float(mesh.nodes[n, 0]), float(mesh.nodes[n, 1])) for n in node_ids)
    idx = np.asarray(node_ids)
    controlled = {}
    for i in spec.controlled_modes:
        shapes = _flexible_shape_table(modal, (i,), idx)[0]
        controlled[i] = modal_grammian(
            shapes, zeta, modal.frequencies[modal.n_rigid + i - 1]
        )
    uncontrolled = {}
    for i in spec.uncontrolled_modes:
        shapes = _flexible_shape_table(modal, (i,), idx)[0]
        uncontrolled[i] = modal_grammian(
            shapes, zeta, modal.frequencies[modal.n_rigid + i - 1]
        )
    objective = sum(controlled.values()) - spec.gamma * sum(uncontrolled.values())
    return PlacementSolution(
        locations=locations,
        node_indices=tuple(int(n) for n in node_ids),
        objective=objective,
        controlled_grammians=controlled,
        uncontrolled_grammians=uncontrolled,
    )


def optimize_placement(
    modal: ModalModel,
    domain: PlacementDomain,
    spec: PlacementObjectiveSpec,
    count: int,
    symmetry: bool = True,
    zeta: float = DEFAULT_MODAL_DAMPING,
) -> PlacementSolution:
    """Direct search for device locations over the candidate nodes.

    With symmetry on (doubly-symmetric stages), one representative in the
    closed first quadrant is searched and mirrored into 4 devices. The
    device-separable objective makes the exhaustive search exact in both
    modes; ties break to the lowest candidate node index.
    """
    if count < 1:
        raise ValueError("device count must be positive")
    candidates = domain.candidate_indices(modal)
    if count > candidates.size:
        raise LitestageError("device count exceeds candidate node count")
    scores = _node_scores(modal, spec, candidates, zeta)

    if symmetry:
        if count != 4:
            raise ValueError("symmetric search mirrors one representative into 4 devices")
        nodes = modal.mesh.nodes
        quadrant = np.flatnonzero(
            (nodes[candidates, 0] >= -1e-12) & (nodes[candidates, 1] >= -1e-12)
        )
        if quadrant.size == 0:
            raise LitestageError("placement domain has no quadrant representatives")
        best_val = -np.inf
        best_set: tuple[int, ...] | None = None
        score_by_node = dict(zip(candidates.tolist(), scores.tolist()))
        for qi in quadrant:
            rep = int(candidates[qi])
            images = _mirror_images(modal, rep)
            if any(n not in score_by_node for n in images):
                continue  # mirror image falls outside the domain
            val = sum(score_by_node[n] for n in images)
            if best_set is None or val > best_val:
                best_val = val
                best_set = images
        if best_set is None:
            raise LitestageError("no symmetric candidate set inside the domain")
        return _solution_from_nodes(modal, spec, best_set, zeta)

    best = int(np.argmax(scores))
    node = int(candidates[best])
    return _solution_from_nodes(modal, spec, (node,) * count, zeta)


def write_heatmap_csv(
    path,
    modal: ModalModel,
    domain: PlacementDomain,
    spec: PlacementObjectiveSpec,
    zeta: float = DEFAULT_MODAL_DAMPING,
) -> None:
    """Per-candidate single-device objective map (x, y, objective)."""
    candidates = domain.candidate_indices(modal)
    scores = _node_scores(modal, spec, candidates, zeta)
    nodes = modal.mesh.nodes
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "objective"])
        for n, s in zip(candidates, scores):
            w.writerow([repr(float(nodes[n, 0])), repr(float(nodes[n, 1])), repr(float(s))])
