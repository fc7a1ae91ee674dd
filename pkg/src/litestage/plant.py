"""Reduced modal plant with placement-dependent I/O and DOF decoupling.

The plant keeps the rigid modes plus the first ``n_flex`` flexible modes
of a modal model, adds diagonal modal damping, and exposes the modal
state space together with the static measurement-decoupling (Ty) and
actuation-recoupling (Tu) transforms that map between physical devices
and generalized DOF channels.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DecouplingError, SolverError
from .modal import ModalModel

DEFAULT_MODAL_DAMPING = 0.01
N_FLEX_DEFAULT = 10

_SINGULAR_COND = 1e12


@dataclass(frozen=True)
class ActuatorSet:
    """Point-force actuators acting along +z at fixed plate locations."""

    locations: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.locations)


@dataclass(frozen=True)
class SensorSet:
    """Transverse-displacement sensors at fixed plate locations."""

    locations: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.locations)


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex response values on an ascending frequency grid [rad/s]."""

    grid: np.ndarray                 # (ng,)
    values: np.ndarray               # (ng, n_outputs, n_inputs)

    def __post_init__(self):
        if self.grid.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("frequency grid must be strictly increasing")

    @property
    def grid_hz(self) -> np.ndarray:
        return self.grid / (2.0 * np.pi)

    def entry(self, output: int, input_: int) -> np.ndarray:
        return self.values[:, output, input_]

    def magnitude(self, output: int = 0, input_: int = 0) -> np.ndarray:
        return np.abs(self.entry(output, input_))

    def to_csv(self, path) -> None:
        """Columns: frequency_hz, then re/im per (output, input) pair."""
        ng, ny, nu = self.values.shape
        header = ["frequency_hz"]
        for o in range(ny):
            for i in range(nu):
                header += [f"re_{o}_{i}", f"im_{o}_{i}"]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            for k in range(ng):
                row = [repr(float(self.grid_hz[k]))]
                for o in range(ny):
                    for i in range(nu):
                        v = self.values[k, o, i]
                        row += [repr(float(v.real)), repr(float(v.imag))]
                w.writerow(row)


def read_frequency_response_csv(path) -> FrequencyResponse:
    """Round-trip loader for the FrequencyResponse CSV schema."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    n_pairs = (len(header) - 1) // 2
    ny = max(int(h.split("_")[1]) for h in header[1:]) + 1
    nu = n_pairs // ny
    grid = np.array([2.0 * np.pi * float(r[0]) for r in data])
    values = np.empty((len(data), ny, nu), dtype=complex)
    for k, r in enumerate(data):
        flat = np.array([float(v) for v in r[1:]])
        values[k] = (flat[0::2] + 1j * flat[1::2]).reshape(ny, nu)
    return FrequencyResponse(grid=grid, values=values)


def default_frequency_grid(
    f_min_hz: float = 1.0, f_max_hz: float = 2000.0, points: int = 600
) -> np.ndarray:
    """Logarithmic rad/s grid covering the controller-design band."""
    return 2.0 * np.pi * np.logspace(np.log10(f_min_hz), np.log10(f_max_hz), points)


@dataclass(frozen=True)
class PlantModel:
    """Damped modal plant with device maps and decoupling transforms.

    State ordering interleaves modal displacement/velocity pairs, so the
    state matrix is block-diagonal in 2x2 modal blocks.
    """

    frequencies: np.ndarray          # (m,) rad/s of retained modes
    zetas: np.ndarray                # (m,) modal damping ratios
    modal_input: np.ndarray          # (m, n_act): mode shape at actuators
    modal_output: np.ndarray         # (n_sen, m): mode shape at sensors
    n_rigid: int
    total_mass: float
    actuators: ActuatorSet
    sensors: SensorSet
    modal: ModalModel | None = None
    tu: np.ndarray | None = None     # (n_act, n_dof): DOF commands -> forces
    ty: np.ndarray | None = None     # (n_dof, n_sen): readings -> DOF coords
    controlled_dofs: tuple[str, ...] = ()

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def n_flexible(self) -> int:
        return self.n_modes - self.n_rigid

    def a_matrix(self) -> np.ndarray:
        m = self.n_modes
        a = np.zeros((2 * m, 2 * m))
        for i in range(m):
            w, z = self.frequencies[i], self.zetas[i]
            a[2 * i, 2 * i + 1] = 1.0
            a[2 * i + 1, 2 * i] = -w * w
            a[2 * i + 1, 2 * i + 1] = -2.0 * z * w
        return a

    def b_matrix(self) -> np.ndarray:
        m = self.n_modes
        b = np.zeros((2 * m, self.modal_input.shape[1]))
        b[1::2, :] = self.modal_input
        return b

    def c_matrix(self) -> np.ndarray:
        m = self.n_modes
        c = np.zeros((self.modal_output.shape[0], 2 * m))
        c[:, 0::2] = self.modal_output
        return c

    def state_space(self):
        """(A, B, C, D) in modal first-order form; D = 0."""
        b = self.b_matrix()
        c = self.c_matrix()
        return self.a_matrix(), b, c, np.zeros((c.shape[0], b.shape[1]))

    def channel_state_space(self, k: int):
        """Minimal SISO state space of decoupled DOF channel k.

        Modal blocks that are uncontrollable or unobservable from this
        channel (in particular the other channels' rigid modes, which sit
        at zero frequency and would read as marginal poles) are dropped;
        the channel's own mode is always kept.
        """
        if self.tu is None or self.ty is None:
            raise DecouplingError("plant has no decoupling transforms")
        b_modal = self.modal_input @ self.tu[:, k]
        c_modal = self.ty[k, :] @ self.modal_output
        coupling = np.abs(b_modal * c_modal)
        keep = coupling > 1e-10 * float(np.max(coupling))
        if k < keep.size:
            keep[k] = True
        idx = np.flatnonzero(keep)
        m = idx.size
        a = np.zeros((2 * m, 2 * m))
        b = np.zeros(2 * m)
        c = np.zeros(2 * m)
        for j, i in enumerate(idx):
            w, z = self.frequencies[i], self.zetas[i]
            a[2 * j, 2 * j + 1] = 1.0
            a[2 * j + 1, 2 * j] = -w * w
            a[2 * j + 1, 2 * j + 1] = -2.0 * z * w
            b[2 * j + 1] = b_modal[i]
            c[2 * j] = c_modal[i]
        return a, b, c

    def export_json(self, path) -> None:
        doc = {
            "frequencies_rad_s": self.frequencies.tolist(),
            "zetas": self.zetas.tolist(),
            "controlled_dofs": list(self.controlled_dofs),
            "actuators": [list(p) for p in self.actuators.locations],
            "sensors": [list(p) for p in self.sensors.locations],
        }
        a, b, c, d = self.state_space()
        doc["A"] = a.tolist()
        doc["B"] = b.tolist()
        doc["C"] = c.tolist()
        doc["D"] = d.tolist()
        doc["Tu"] = self.tu.tolist() if self.tu is not None else None
        doc["Ty"] = self.ty.tolist() if self.ty is not None else None
        with open(path, "w") as f:
            json.dump(doc, f, sort_keys=True, indent=1)


def sample_mode_shape(modal: ModalModel, location: tuple[float, float]) -> np.ndarray:
    """Deflection of every retained mode at a plate location (bilinear)."""
    return modal.w_at(location[0], location[1])


def build_plant(
    modal: ModalModel,
    actuators: ActuatorSet,
    sensors: SensorSet,
    zeta=DEFAULT_MODAL_DAMPING,
    n_flex: int = N_FLEX_DEFAULT,
) -> PlantModel:
    """Truncate to rigid + first ``n_flex`` flexible modes and sample devices."""
    n_keep = modal.n_rigid + n_flex
    if modal.n_modes < n_keep:
        raise SolverError(
            f"modal model has {modal.n_modes} modes, fewer than requested {n_keep}"
        )
    freqs = modal.frequencies[:n_keep].copy()
    zetas = np.broadcast_to(np.asarray(zeta, dtype=float), (n_keep,)).copy()

    b = np.column_stack([sample_mode_shape(modal, loc)[:n_keep] for loc in actuators.locations])
    c = np.column_stack([sample_mode_shape(modal, loc)[:n_keep] for loc in sensors.locations]).T
    return PlantModel(
        frequencies=freqs,
        zetas=zetas,
        modal_input=b,
        modal_output=c,
        n_rigid=modal.n_rigid,
        total_mass=modal.total_mass,
        actuators=actuators,
        sensors=sensors,
        modal=modal,
    )


def decoupling_transforms(
    plant: PlantModel, controlled_dofs: tuple[str, ...] | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Build (Tu, Ty) for the exact-constraint square device layout.

    The sensor influence matrix has row k = [1, y_k, -x_k, phi_c(s_k), ...]
    stacking the small-rotation rigid map and the controlled flexible mode
    shapes; Ty is its inverse and Tu the inverse transpose of the actuator
    analogue, so DOF-level commands map to physical actuator forces.
    """
    n_act = len(plant.actuators)
    n_sen = len(plant.sensors)
    if controlled_dofs is None:
        n_cf = n_act - 3
        controlled_dofs = ("z", "theta_x", "theta_y") + tuple(
            f"q{plant.n_rigid + 1 + j}" for j in range(n_cf)
        )
    n_dof = len(controlled_dofs)
    if not (n_act == n_sen == n_dof):
        raise DecouplingError(
            f"exact constraint requires n_act == n_sen == n_dof, got "
            f"{n_act}/{n_sen}/{n_dof}"
        )
    n_cf = n_dof - 3
    if n_cf < 0 or plant.n_flexible < n_cf:
        raise DecouplingError("controlled DOFs exceed retained modes")
    if plant.modal is None:
        raise DecouplingError("plant carries no modal model for shape sampling")

    def influence(locations):
        rows = np.empty((len(locations), n_dof))
        for k, (x, y) in enumerate(locations):
            shape = sample_mode_shape(plant.modal, (x, y))
            rows[k, 0] = 1.0
            rows[k, 1] = y
            rows[k, 2] = -x
            for j in range(n_cf):
                rows[k, 3 + j] = shape[plant.n_rigid + j]
        return rows

    e_s = influence(plant.sensors.locations)
    e_a = influence(plant.actuators.locations)
    if np.linalg.cond(e_s) > _SINGULAR_COND or np.linalg.cond(e_a) > _SINGULAR_COND:
        raise DecouplingError(
            "singular decoupling matrix: placements cannot decouple the chosen DOFs"
        )
    ty = np.linalg.inv(e_s)
    tu = np.linalg.inv(e_a.T)
    return tu, ty


def with_decoupling(
    plant: PlantModel, controlled_dofs: tuple[str, ...] | None = None
) -> PlantModel:
    """Copy of the plant carrying Tu/Ty and the controlled DOF labels."""
    tu, ty = decoupling_transforms(plant, controlled_dofs)
    if controlled_dofs is None:
        n_cf = len(plant.actuators) - 3
        controlled_dofs = ("z", "theta_x", "theta_y") + tuple(
            f"q{plant.n_rigid + 1 + j}" for j in range(n_cf)
        )
    return replace(plant, tu=tu, ty=ty, controlled_dofs=tuple(controlled_dofs))


def frequency_response(
    plant: PlantModel, grid: np.ndarray, decoupled: bool = False
) -> FrequencyResponse:
    """Evaluate G(jw) = C (jwI - A)^-1 B on the grid.

    With ``decoupled`` the response is Ty G Tu over the DOF channels.
    The modal structure gives G directly as a sum over 2nd-order modes.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be nonempty and strictly increasing")
    w = grid[None, :]
    wi = plant.frequencies[:, None]
    zi = plant.zetas[:, None]
    den = wi**2 - w**2 + 2j * zi * wi * w
    scale = np.abs(wi**2) + w**2
    if np.any(np.abs(den) <= 1e-14 * scale):
        raise SolverError("frequency grid hits an undamped pole")
    vals = np.einsum("sm,mg,ma->gsa", plant.modal_output, 1.0 / den, plant.modal_input)
    if decoupled:
        if plant.tu is None or plant.ty is None:
            raise DecouplingError("plant has no decoupling transforms")
        vals = np.einsum("ds,gsa,ak->gdk", plant.ty, vals, plant.tu)
    return FrequencyResponse(grid=grid, values=vals)
