"""Generalized eigensolution and mass-normalized modal model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .assembly import SystemMatrices, assemble
from .errors import SolverError
from .geometry import MaterialSpec, StageGeometry
from .meshing import Mesh, mesh_stage

# Frequencies below this are treated as exactly zero (rigid modes). The
# absolute floor is backed by a relative test against the first elastic
# frequency because eigensolver noise on the rigid cluster grows with the
# stiffness scale; see _zero_rigid_frequencies.
RIGID_FREQ_CUTOFF = 2.0 * np.pi * 1e-3  # 1e-3 Hz in rad/s
_ELASTIC_FLOOR = 2.0 * np.pi * 0.1      # modes above 0.1 Hz are surely elastic
_RIGID_REL = 1e-4                       # rigid if below 1e-4 x first elastic


@dataclass(frozen=True)
class ModalModel:
    """Eigenfrequencies and mass-normalized mode shapes.

    ``shapes[:, i]`` is the i-th mode over all FE DOFs with
    Phi^T M Phi = I; frequencies ascend and rigid modes (exact zeros)
    come first, realigned to pure z, theta_x, theta_y motion.
    """

    frequencies: np.ndarray     # rad/s, ascending
    shapes: np.ndarray          # (n_dof, m)
    total_mass: float
    mesh: Mesh | None = None

    @property
    def n_modes(self) -> int:
        return self.frequencies.size

    @property
    def n_rigid(self) -> int:
        return int(np.count_nonzero(self.frequencies == 0.0))

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.frequencies / (2.0 * np.pi)

    def flexible_frequencies(self) -> np.ndarray:
        """Frequencies of elastic modes only (rigid modes excluded), rad/s."""
        return self.frequencies[self.n_rigid:]

    def w_at(self, x, y) -> np.ndarray:
        """Bilinear sample of every mode's deflection at (x, y).

        Returns an array of length n_modes. Requires a mesh reference.
        """
        if self.mesh is None:
            raise SolverError("modal model carries no mesh; cannot sample shapes")
        tx, ty = self.mesh.ticks_x, self.mesh.ticks_y
        if not (tx[0] - 1e-12 <= x <= tx[-1] + 1e-12) or not (
            ty[0] - 1e-12 <= y <= ty[-1] + 1e-12
        ):
            raise ValueError(f"sample location ({x:g}, {y:g}) outside the meshed planform")
        i = int(np.clip(np.searchsorted(tx, x, side="right") - 1, 0, tx.size - 2))
        j = int(np.clip(np.searchsorted(ty, y, side="right") - 1, 0, ty.size - 2))
        sx = (x - tx[i]) / (tx[i + 1] - tx[i])
        sy = (y - ty[j]) / (ty[j + 1] - ty[j])
        nx = tx.size
        w = self.shapes[0::3, :]
        n00 = j * nx + i
        return (
            (1 - sx) * (1 - sy) * w[n00]
            + sx * (1 - sy) * w[n00 + 1]
            + sx * sy * w[n00 + nx + 1]
            + (1 - sx) * sy * w[n00 + nx]
        )


def _zero_rigid_frequencies(freqs: np.ndarray) -> np.ndarray:
    """Snap the numerical null-space cluster to exactly zero."""
    out = freqs.copy()
    cutoff = RIGID_FREQ_CUTOFF
    elastic = freqs[freqs > _ELASTIC_FLOOR]
    if elastic.size:
        cutoff = max(cutoff, _RIGID_REL * float(elastic[0]))
    out[out < cutoff] = 0.0
    return out


def _rigid_basis(mesh: Mesh) -> np.ndarray:
    """Geometric rigid shapes over all DOFs: unit z, theta_x, theta_y."""
    n = mesh.n_dof
    r = np.zeros((n, 3))
    x = mesh.nodes[:, 0]
    y = mesh.nodes[:, 1]
    r[0::3, 0] = 1.0                 # w = 1
    r[0::3, 1] = y                   # w = y, theta_x = 1
    r[1::3, 1] = 1.0
    r[0::3, 2] = -x                  # w = -x, theta_y = 1
    r[2::3, 2] = 1.0
    return r


def _mass_orthonormalize(vectors: np.ndarray, mass: np.ndarray) -> np.ndarray:
    """Gram-Schmidt in the M inner product, preserving column order."""
    q = vectors.astype(float).copy()
    for k in range(q.shape[1]):
        for j in range(k):
            q[:, k] -= (q[:, j] @ (mass @ q[:, k])) * q[:, j]
        norm = np.sqrt(q[:, k] @ (mass @ q[:, k]))
        if norm <= 0:
            raise SolverError("rigid basis degenerate under the mass inner product")
        q[:, k] /= norm
    return q


# Above this DOF count the shift-invert Lanczos path is cheaper than a
# dense subset eigensolve.
_DENSE_EIG_LIMIT = 400

# Shift for the free-free shift-invert factorization: K + w_ref^2 M is
# positive definite even though K itself has the rigid null space.
_SHIFT_REF = -((2.0 * np.pi * 10.0) ** 2)


def _lowest_modes(matrices: SystemMatrices, n_modes: int):
    mass, stiff = matrices.mass, matrices.stiffness
    sparse_input = scipy.sparse.issparse(mass)
    n = matrices.n_dof
    if not sparse_input or n <= _DENSE_EIG_LIMIT or n_modes > n // 4:
        mdense = mass.toarray() if sparse_input else np.asarray(mass, dtype=float)
        kdense = stiff.toarray() if sparse_input else np.asarray(stiff, dtype=float)
        try:
            scipy.linalg.cholesky(mdense)
        except scipy.linalg.LinAlgError as exc:
            raise SolverError("mass matrix is not positive definite") from exc
        try:
            return scipy.linalg.eigh(
                kdense, mdense, subset_by_index=[0, n_modes - 1], driver="gvx"
            )
        except scipy.linalg.LinAlgError as exc:
            raise SolverError("generalized eigensolver failed to converge") from exc
    # Deterministic start vector: ARPACK otherwise draws a random one.
    v0 = np.r_[np.linspace(0.3, 1.0, n // 2), np.linspace(1.0, 0.4, n - n // 2)]
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(
            stiff.tocsc(),
            k=n_modes,
            M=mass.tocsc(),
            sigma=_SHIFT_REF,
            which="LM",
            v0=v0,
        )
    except Exception as exc:  # ARPACK failures surface as various types
        raise SolverError("sparse eigensolver failed to converge") from exc
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def solve_modes(
    matrices: SystemMatrices,
    n_modes: int,
    mesh: Mesh | None = None,
) -> ModalModel:
    """Solve K phi = omega^2 M phi for the lowest ``n_modes`` modes.

    Shapes are mass-normalized. When a mesh is supplied, the near-zero
    rigid cluster is replaced by the exact geometric rigid shapes
    (M-orthonormalized in the order z, theta_x, theta_y), since the
    eigensolver returns an arbitrary basis of that subspace.
    """
    n = matrices.n_dof
    if n_modes > n:
        raise SolverError(f"requested {n_modes} modes from a {n}-DOF system")
    vals, vecs = _lowest_modes(matrices, n_modes)

    vals = np.where(vals < 0, 0.0, vals)
    freqs = _zero_rigid_frequencies(np.sqrt(vals))

    # Mass-normalize (eigh already returns M-orthonormal vectors; enforce).
    for k in range(vecs.shape[1]):
        vecs[:, k] /= np.sqrt(vecs[:, k] @ (matrices.mass @ vecs[:, k]))

    n_rigid = int(np.count_nonzero(freqs == 0.0))
    if mesh is not None and n_rigid == 3:
        rigid = _mass_orthonormalize(_rigid_basis(mesh), matrices.mass)
        vecs[:, :3] = rigid

    total = float(matrices.mass[0::3, :][:, 0::3].sum())
    return ModalModel(frequencies=freqs, shapes=vecs, total_mass=total, mesh=mesh)


def modal_from_geometry(
    geometry: StageGeometry,
    material: MaterialSpec,
    resolution: int,
    n_modes: int,
) -> ModalModel:
    """Mesh, assemble and solve a stage geometry in one step."""
    mesh = mesh_stage(geometry, resolution)
    mats = assemble(mesh, material, geometry.point_masses)
    return solve_modes(mats, n_modes, mesh)
