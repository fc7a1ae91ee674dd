"""Mass minimization under eigenfrequency band constraints, plus sweeps.

The design problem: minimize stage mass over the free geometry vector
subject to the controlled flexible modes staying below omega_low and the
remaining constrained modes staying above omega_high. Solved with a
penalized Nelder-Mead (exact-penalty coefficient schedule plus restarts);
a violation within 1% of its bound frequency counts as feasible because
coarse-mesh eigenvalues carry discretization noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import InfeasibleError, LitestageError, MeshError, SolverError
from .geometry import GeometryBounds, MaterialSpec, StageGeometry, total_mass
from .modal import ModalModel, modal_from_geometry
from .placement import (
    PlacementDomain,
    PlacementObjectiveSpec,
    PlacementSolution,
    modal_grammian,
    optimize_placement,
)
from .plant import DEFAULT_MODAL_DAMPING

CONSTRAINT_RTOL = 0.01          # 1% of the bound frequency counts as feasible
DEFAULT_BUDGET = 500            # objective evaluations per optimization
_PENALTY_SCHEDULE = (50.0, 500.0, 5000.0)

# The optimizer accepts iterates at half the public tolerance so the
# returned design still passes a re-check on a refined mesh, whose
# eigenvalues shift by a few tenths of a percent.
_INTERNAL_MARGIN = 0.5


@dataclass(frozen=True)
class FrequencyConstraints:
    """Eigenfrequency band edges in rad/s.

    The first ``n_controlled`` flexible modes must lie at or below
    omega_low; flexible modes n+1 .. m must lie at or above omega_high.
    ``n_controlled = 0`` drops the upper bound entirely (used by baseline
    designs that only stiffen every constrained mode above omega_high).
    """

    omega_low: float
    omega_high: float
    n_controlled: int = 1
    m_constrained: int = 2

    def __post_init__(self):
        if not 0 < self.omega_low < self.omega_high:
            raise ValueError("need 0 < omega_low < omega_high")
        if not 0 <= self.n_controlled < self.m_constrained:
            raise ValueError("need 0 <= n_controlled < m_constrained")

    def with_omega_high(self, omega_high: float) -> "FrequencyConstraints":
        return FrequencyConstraints(
            omega_low=self.omega_low,
            omega_high=omega_high,
            n_controlled=self.n_controlled,
            m_constrained=self.m_constrained,
        )


@dataclass(frozen=True)
class GeometryOptResult:
    geometry: StageGeometry
    mass: float
    flexible_frequencies: np.ndarray   # rad/s, first m_constrained entries
    violations: np.ndarray
    feasible: bool
    omega_high_active: bool
    n_evaluations: int


@dataclass(frozen=True)
class SweepRecord:
    """One omega_high sweep step: optimal design plus placement payoff."""

    omega_high: float
    params: np.ndarray
    mass: float
    ja: float
    jo: float
    feasible: bool
    actuator_locations: tuple[tuple[float, float], ...]
    sensor_locations: tuple[tuple[float, float], ...]

    @property
    def ja_plus_jo(self) -> float:
        return self.ja + self.jo


def constraint_values(
    geometry: StageGeometry,
    constraints: FrequencyConstraints,
    material: MaterialSpec,
    resolution: int,
) -> np.ndarray:
    """Signed violations (rad/s); positive entries are violated.

    Rows 0..n-1: omega_i - omega_low for the controlled flexible modes;
    rows n..m-1: omega_high - omega_j for the constrained ones above.
    Flexible modes are counted after excluding the 3 rigid modes.
    """
    modal = modal_from_geometry(
        geometry, material, resolution, n_modes=3 + constraints.m_constrained
    )
    flex = modal.flexible_frequencies()
    if flex.size < constraints.m_constrained:
        raise SolverError("model returned fewer flexible modes than constrained")
    vals = np.empty(constraints.m_constrained)
    n = constraints.n_controlled
    vals[:n] = flex[:n] - constraints.omega_low
    vals[n:] = constraints.omega_high - flex[n:constraints.m_constrained]
    return vals


def _violation_scale(constraints: FrequencyConstraints) -> np.ndarray:
    n, m = constraints.n_controlled, constraints.m_constrained
    scale = np.empty(m)
    scale[:n] = constraints.omega_low
    scale[n:] = constraints.omega_high
    return scale


def is_feasible(violations: np.ndarray, constraints: FrequencyConstraints) -> bool:
    return bool(np.all(violations <= CONSTRAINT_RTOL * _violation_scale(constraints)))


def optimize_geometry(
    template: StageGeometry,
    bounds: GeometryBounds,
    constraints: FrequencyConstraints,
    init_params,
    material: MaterialSpec,
    resolution: int,
    budget: int = DEFAULT_BUDGET,
) -> GeometryOptResult:
    """Minimize stage mass subject to the frequency band constraints.

    Penalized Nelder-Mead over the box bounds: each penalty stage warm
    starts from the incumbent and the exact-penalty coefficient grows
    until the incumbent is feasible; the best feasible iterate ever seen
    is returned (re-checked at the stated tolerance).
    """
    init = np.asarray(init_params, dtype=float)
    if not bounds.contains(init):
        raise LitestageError("initial parameter vector violates the bounds")

    scale = _violation_scale(constraints)
    tol = CONSTRAINT_RTOL
    evals = 0
    best_feasible: tuple[float, np.ndarray, np.ndarray] | None = None
    best_any: tuple[float, np.ndarray, np.ndarray] | None = None

    def evaluate(params):
        nonlocal evals, best_feasible, best_any
        evals += 1
        geom = template.with_params(bounds.clip(params))
        try:
            viol = constraint_values(geom, constraints, material, resolution)
        except (MeshError, SolverError):
            return None, np.full(constraints.m_constrained, np.inf)
        mass = total_mass(geom, material)
        rel = viol / scale
        worst = float(np.max(rel))
        if np.all(rel <= tol * _INTERNAL_MARGIN):
            if best_feasible is None or mass < best_feasible[0]:
                best_feasible = (mass, bounds.clip(params).copy(), viol.copy())
        if best_any is None or worst < best_any[0]:
            best_any = (worst, bounds.clip(params).copy(), viol.copy())
        return mass, viol

    def penalized(params, mu):
        mass, viol = evaluate(params)
        if mass is None:
            return 1e9
        hinge = np.maximum(0.0, viol / scale)
        return mass + mu * float(np.sum(hinge))

    stage_budget = max(budget // (len(_PENALTY_SCHEDULE) + 1), 10)
    x = init.copy()
    sbounds = list(zip(bounds.lower, bounds.upper))
    for mu in _PENALTY_SCHEDULE:
        if evals >= budget:
            break
        res = scipy.optimize.minimize(
            penalized,
            x,
            args=(mu,),
            method="Nelder-Mead",
            bounds=sbounds,
            options={
                "maxfev": min(stage_budget, budget - evals),
                "xatol": 1e-6,
                "fatol": 1e-9,
                "adaptive": True,
            },
        )
        x = bounds.clip(res.x)
    # Polish restarts at the top penalty from the incumbent.
    mu = _PENALTY_SCHEDULE[-1]
    last = np.inf
    while evals < budget:
        res = scipy.optimize.minimize(
            penalized,
            x,
            args=(mu,),
            method="Nelder-Mead",
            bounds=sbounds,
            options={
                "maxfev": budget - evals,
                "xatol": 1e-7,
                "fatol": 1e-10,
                "adaptive": True,
            },
        )
        x = bounds.clip(res.x)
        if last - res.fun <= 1e-5 * max(abs(res.fun), 1.0):
            break
        last = res.fun

    if best_feasible is None:
        worst, params, viol = best_any
        stiff = bounds.clip(np.array([
            bounds.upper[0], bounds.upper[1], bounds.upper[2], init[3], init[4]
        ]))
        stiff_viol = constraint_values(
            template.with_params(stiff), constraints, material, resolution
        )
        n = constraints.n_controlled
        upper_rows = stiff_viol[n:]
        if upper_rows.size and np.any(upper_rows > tol * scale[n:]):
            j = int(np.argmax(upper_rows)) + n + 1
            raise InfeasibleError(
                f"bounds infeasible: flexible mode {j} cannot reach omega_high "
                f"even at maximum thickness",
                best_point=params,
                violations=viol,
            )
        raise InfeasibleError(
            f"no feasible design within {budget} evaluations "
            f"(worst relative violation {worst:.3g})",
            best_point=params,
            violations=viol,
        )

    mass, params, viol = best_feasible
    geometry = template.with_params(params)
    modal = modal_from_geometry(
        geometry, material, resolution, n_modes=3 + constraints.m_constrained
    )
    flex = modal.flexible_frequencies()[: constraints.m_constrained]
    n = constraints.n_controlled
    active = bool(
        np.any(np.abs(flex[n:] - constraints.omega_high) <= tol * constraints.omega_high)
    )
    return GeometryOptResult(
        geometry=geometry,
        mass=mass,
        flexible_frequencies=flex,
        violations=viol,
        feasible=True,
        omega_high_active=active,
        n_evaluations=evals,
    )


def _placement_objectives(
    modal: ModalModel,
    actuator_locations,
    spec: PlacementObjectiveSpec,
    symmetry: bool,
    zeta: float,
) -> tuple[float, float, tuple, tuple]:
    """(Ja, Jo, actuator locs, sensor locs) for one designed stage."""
    domain = PlacementDomain.full_planform(modal)
    sensors = optimize_placement(modal, domain, spec, count=4, symmetry=symmetry, zeta=zeta)
    jo = sensors.objective
    if actuator_locations is None:
        ja = jo  # collocated optimum: identical domains and objective
        act = sensors.locations
    else:
        act = tuple(actuator_locations)
        ja = 0.0
        for i in spec.controlled_modes:
            mode = modal.n_rigid + i - 1
            vals = [modal.w_at(x, y)[mode] for x, y in act]
            ja += modal_grammian(vals, zeta, modal.frequencies[mode])
        for i in spec.uncontrolled_modes:
            mode = modal.n_rigid + i - 1
            vals = [modal.w_at(x, y)[mode] for x, y in act]
            ja -= spec.gamma * modal_grammian(vals, zeta, modal.frequencies[mode])
    return ja, jo, act, sensors.locations


def sweep_omega_high(
    template: StageGeometry,
    bounds: GeometryBounds,
    constraints: FrequencyConstraints,
    init_params,
    material: MaterialSpec,
    resolution: int,
    omega_high_range: tuple[float, float],
    delta_omega: float,
    placement_spec: PlacementObjectiveSpec,
    fixed_actuators=None,
    budget: int = DEFAULT_BUDGET,
    warm_start: bool = True,
    placement_symmetry: bool = True,
    zeta: float = DEFAULT_MODAL_DAMPING,
    n_modes_placement: int = 13,
) -> list[SweepRecord]:
    """Descend omega_high from the range top in delta steps, re-solving
    geometry (warm-started from the previous optimum) and placement.

    Failed steps are recorded as infeasible rows and the sweep continues.
    """
    top, bottom = omega_high_range
    if bottom > top:
        raise ValueError("omega_high range must run from high to low")
    if delta_omega <= 0:
        raise ValueError("sweep step must be positive")
    n_steps = int(round((top - bottom) / delta_omega)) + 1
    records: list[SweepRecord] = []
    x = np.asarray(init_params, dtype=float)
    for k in range(n_steps):
        omega_high = top - k * delta_omega
        cons = constraints.with_omega_high(omega_high)
        start = x if warm_start else np.asarray(init_params, dtype=float)
        try:
            result = optimize_geometry(
                template, bounds, cons, start, material, resolution, budget
            )
        except InfeasibleError as exc:
            params = exc.best_point if exc.best_point is not None else start
            records.append(
                SweepRecord(
                    omega_high=omega_high,
                    params=np.asarray(params, dtype=float),
                    mass=total_mass(template.with_params(params), material),
                    ja=np.nan,
                    jo=np.nan,
                    feasible=False,
                    actuator_locations=(),
                    sensor_locations=(),
                )
            )
            continue
        x = result.geometry.params
        modal = modal_from_geometry(
            result.geometry, material, resolution, n_modes=n_modes_placement
        )
        ja, jo, act, sen = _placement_objectives(
            modal, fixed_actuators, placement_spec, placement_symmetry, zeta,
        )
        records.append(
            SweepRecord(
                omega_high=omega_high,
                params=result.geometry.params,
                mass=result.mass,
                ja=ja,
                jo=jo,
                feasible=True,
                actuator_locations=act,
                sensor_locations=sen,
            )
        )
    return records
