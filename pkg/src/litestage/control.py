"""Fixed-structure SISO controller synthesis under a sensitivity bound.

Controller structure: proportional gain, integrator corner, first-order
lead, and a second-order low-pass,

    C(s) = Kp * ((s + w_int)/s) * (s/w_d + 1) * (w_lp^2 / (s^2 + 2 z w_lp s + w_lp^2))

with all corners derived from a single target crossover frequency. Two
corner mappings are provided (see ``CORNER_MAPPINGS``); the loopshaping
mapping places the integrator below and the low-pass above the target
crossover. Feedback is negative with sensitivity S = (1 + G C)^-1 and
robustness bound ||S||_inf <= 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .errors import InfeasibleError, SolverError
from .plant import FrequencyResponse, PlantModel

SENSITIVITY_BOUND = 2.0
DEFAULT_ALPHA = 0.3
DEFAULT_ZLP = 0.7

CORNER_MAPPINGS = ("loopshaping", "paper-table")

# Minimum damping ratio of a closed-loop eigenvalue to count as stable;
# marginally stable loops (poles on the imaginary axis) are rejected.
_STABLE_ZETA = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TransferFunction:
    """Rational transfer function with descending polynomial coefficients."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def freq_eval(self, w) -> np.ndarray:
        s = 1j * np.asarray(w, dtype=float)
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def state_space(self):
        a, b, c, d = scipy.signal.tf2ss(list(self.num), list(self.den))
        return a, b.reshape(-1), c.reshape(-1), float(np.squeeze(d))

    def __mul__(self, other: "TransferFunction") -> "TransferFunction":
        return TransferFunction(
            tuple(np.polymul(self.num, other.num)),
            tuple(np.polymul(self.den, other.den)),
        )


@dataclass(frozen=True)
class PlantChannel:
    """Decoupled SISO DOF channel of a plant, evaluated modally."""

    plant: PlantModel
    index: int

    def freq_eval(self, w) -> np.ndarray:
        p = self.plant
        if p.tu is None or p.ty is None:
            raise SolverError("plant has no decoupling transforms")
        coeff = (p.ty[self.index, :] @ p.modal_output) * (
            p.modal_input @ p.tu[:, self.index]
        )
        w = np.asarray(w, dtype=float)
        den = p.frequencies[:, None] ** 2 - w[None, :] ** 2 + 2j * (
            p.zetas[:, None] * p.frequencies[:, None] * w[None, :]
        )
        return (coeff[:, None] / den).sum(axis=0)

    def state_space(self):
        a, b, c = self.plant.channel_state_space(self.index)
        return a, b, c, 0.0

    @property
    def name(self) -> str:
        if self.plant.controlled_dofs:
            return self.plant.controlled_dofs[self.index]
        return f"ch{self.index}"


@dataclass(frozen=True)
class ControllerParams:
    """Controller coefficients derived from a target bandwidth."""

    omega_bw: float
    alpha: float = DEFAULT_ALPHA
    kp: float = 1.0
    omega_int: float = 0.0
    omega_d: float = 0.0
    omega_lp: float = 0.0
    zlp: float = DEFAULT_ZLP
    mapping_mode: str = "loopshaping"

    def __post_init__(self):
        if self.omega_bw <= 0:
            raise ValueError("target bandwidth must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("PID frequency ratio alpha must lie in (0, 1)")
        if not 0 < self.zlp < 1:
            raise ValueError("low-pass damping must lie in (0, 1)")
        if self.kp <= 0:
            raise ValueError("proportional gain must be positive")
        for name in ("omega_int", "omega_d", "omega_lp"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def transfer_function(self) -> TransferFunction:
        lead = np.polymul([1.0, self.omega_int], [1.0 / self.omega_d, 1.0])
        num = self.kp * self.omega_lp**2 * lead
        den = np.polymul([1.0, 0.0], [1.0, 2.0 * self.zlp * self.omega_lp, self.omega_lp**2])
        return TransferFunction(tuple(num), tuple(den))

    def freq_eval(self, w) -> np.ndarray:
        return self.transfer_function().freq_eval(w)

    def with_gain(self, kp: float) -> "ControllerParams":
        return ControllerParams(
            omega_bw=self.omega_bw,
            alpha=self.alpha,
            kp=kp,
            omega_int=self.omega_int,
            omega_d=self.omega_d,
            omega_lp=self.omega_lp,
            zlp=self.zlp,
            mapping_mode=self.mapping_mode,
        )

    def to_dict(self) -> dict:
        return {
            "omega_bw_hz": self.omega_bw / (2 * np.pi),
            "alpha": self.alpha,
            "kp": self.kp,
            "omega_int_hz": self.omega_int / (2 * np.pi),
            "omega_d_hz": self.omega_d / (2 * np.pi),
            "omega_lp_hz": self.omega_lp / (2 * np.pi),
            "zlp": self.zlp,
            "mapping_mode": self.mapping_mode,
        }


@dataclass(frozen=True)
class LoopMetrics:
    """Frequency-domain measurements of one tuned loop."""

    kp: float
    target_bandwidth: float          # rad/s
    achieved_bandwidth: float | None  # first downward 0 dB crossing, rad/s
    sensitivity_peak: float | None
    peak_frequency: float | None     # rad/s
    stable: bool
    damping_ratios: tuple[tuple[float, float], ...] = ()  # (omega_n, zeta)

    def to_dict(self) -> dict:
        return {
            "kp": self.kp,
            "target_bandwidth_hz": self.target_bandwidth / (2 * np.pi),
            "achieved_bandwidth_hz": (
                self.achieved_bandwidth / (2 * np.pi)
                if self.achieved_bandwidth is not None
                else None
            ),
            "sensitivity_peak": self.sensitivity_peak,
            "peak_frequency_hz": (
                self.peak_frequency / (2 * np.pi) if self.peak_frequency is not None else None
            ),
            "stable": self.stable,
            "closed_loop_damping": [list(p) for p in self.damping_ratios],
        }


def controller_from_bandwidth(
    omega_bw: float,
    alpha: float = DEFAULT_ALPHA,
    kp: float = 1.0,
    mapping_mode: str = "loopshaping",
    zlp: float = DEFAULT_ZLP,
) -> ControllerParams:
    """Derive all controller corners from the target crossover frequency."""
    if mapping_mode == "paper-table":
        omega_int = omega_bw / alpha**2
        omega_d = omega_bw / alpha
        omega_lp = alpha * omega_bw
    elif mapping_mode == "loopshaping":
        omega_int = alpha**2 * omega_bw
        omega_d = alpha * omega_bw
        omega_lp = omega_bw / alpha
    else:
        raise ValueError(f"unknown mapping_mode {mapping_mode!r}; use one of {CORNER_MAPPINGS}")
    return ControllerParams(
        omega_bw=omega_bw,
        alpha=alpha,
        kp=kp,
        omega_int=omega_int,
        omega_d=omega_d,
        omega_lp=omega_lp,
        zlp=zlp,
        mapping_mode=mapping_mode,
    )


def loop_gain(channel, controller, grid: np.ndarray) -> FrequencyResponse:
    """Pointwise L(jw) = G(jw) C(jw) on a shared grid."""
    grid = np.asarray(grid, dtype=float)
    values = channel.freq_eval(grid) * controller.freq_eval(grid)
    return FrequencyResponse(grid=grid, values=values.reshape(-1, 1, 1))


def closed_loop_matrix(channel, controller) -> np.ndarray:
    """State matrix of the negative-feedback SISO loop."""
    ag, bg, cg, dg = channel.state_space()
    ac, bc, cc, dc = controller.transfer_function().state_space()
    ng, nc = ag.shape[0], ac.shape[0]
    if abs(dc) > 0:
        raise SolverError("controller must be strictly proper")
    acl = np.zeros((ng + nc, ng + nc))
    acl[:ng, :ng] = ag
    acl[:ng, ng:] = np.outer(bg, cc)
    acl[ng:, :ng] = -np.outer(bc, cg)
    acl[ng:, ng:] = ac - dg * np.outer(bc, cc)
    return acl


def _eig_damping(acl: np.ndarray) -> tuple[tuple[float, float], ...]:
    """(omega_n, zeta) for each complex eigenvalue pair, ascending omega_n."""
    lam = np.linalg.eigvals(acl)
    lam = lam[np.imag(lam) > 0]
    wn = np.abs(lam)
    zeta = np.where(wn > 0, -np.real(lam) / np.maximum(wn, 1e-300), 0.0)
    order = np.argsort(wn)
    return tuple((float(wn[i]), float(zeta[i])) for i in order)


def is_stable(acl: np.ndarray) -> bool:
    """All eigenvalues strictly in the left half plane (no marginal poles)."""
    lam = np.linalg.eigvals(acl)
    return bool(np.all(np.real(lam) < -_STABLE_ZETA * np.abs(lam)))


def _loop_eval(channel, controller):
    def ell(w):
        return channel.freq_eval(np.atleast_1d(w)) * controller.freq_eval(np.atleast_1d(w))

    return ell


def _golden_max(f, lo: float, hi: float, rel_tol: float = 1e-3) -> tuple[float, float]:
    """Golden-section maximization of f over log-spaced [lo, hi]."""
    a, b = math.log(lo), math.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while (b - a) > rel_tol * 1e-1:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(math.exp(d))
    x = math.exp((a + b) / 2)
    return x, f(x)


def sensitivity_peak(
    channel, controller, grid: np.ndarray
) -> tuple[float, float]:
    """||S||_inf over the grid with local golden-section refinement.

    Returns (peak, maximizing frequency). Raises InfeasibleError when the
    closed loop is not stable (the peak is undefined then).
    """
    acl = closed_loop_matrix(channel, controller)
    if not is_stable(acl):
        raise InfeasibleError("closed loop unstable: sensitivity peak undefined")
    grid = np.asarray(grid, dtype=float)
    ell = _loop_eval(channel, controller)
    s_mag = 1.0 / np.abs(1.0 + ell(grid))

    # Densify around the coarse maximum (2000 points/decade), then refine.
    k = int(np.argmax(s_mag))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    if hi <= lo:
        lo, hi = grid[0], grid[-1]
    decades = math.log10(hi / lo)
    dense = np.logspace(math.log10(lo), math.log10(hi), max(int(2000 * decades), 32))
    s_dense = 1.0 / np.abs(1.0 + ell(dense))
    kd = int(np.argmax(s_dense))
    blo = dense[max(kd - 1, 0)]
    bhi = dense[min(kd + 1, dense.size - 1)]
    if bhi <= blo:
        blo, bhi = lo, hi

    def s_at(w):
        return float(1.0 / np.abs(1.0 + ell(w))[0])

    w_star, peak = _golden_max(s_at, blo, bhi)
    best_grid = float(np.max(s_mag))
    if best_grid > peak:
        peak = best_grid
        w_star = float(grid[k])
    if float(s_dense[kd]) > peak:
        peak = float(s_dense[kd])
        w_star = float(dense[kd])
    return peak, w_star


def crossover_frequency(channel, controller, grid: np.ndarray) -> float | None:
    """First downward unity crossing of |L| on the grid, bisection-refined."""
    grid = np.asarray(grid, dtype=float)
    ell = _loop_eval(channel, controller)
    mag = np.abs(ell(grid))
    above = mag >= 1.0
    for k in range(grid.size - 1):
        if above[k] and not above[k + 1]:
            lo, hi = grid[k], grid[k + 1]
            for _ in range(80):
                mid = math.sqrt(lo * hi)
                if abs(ell(mid))[0] >= 1.0:
                    lo = mid
                else:
                    hi = mid
                if hi / lo < 1 + 1e-9:
                    break
            return math.sqrt(lo * hi)
    return None


def _metrics_grid(omega_bw: float) -> np.ndarray:
    return np.logspace(math.log10(omega_bw / 200.0), math.log10(omega_bw * 50.0), 1200)


def tune_gain(
    channel,
    omega_bw: float,
    alpha: float = DEFAULT_ALPHA,
    mapping_mode: str = "loopshaping",
    zlp: float = DEFAULT_ZLP,
    grid: np.ndarray | None = None,
) -> tuple[float, LoopMetrics, ControllerParams]:
    """Set Kp for |L(j omega_bw)| = 1 and check the robustness criterion.

    Since Kp scales |L| linearly the crossover gain follows directly from
    the unit-gain loop. Raises InfeasibleError when no gain achieves
    crossover or when the tuned loop violates stability or the
    sensitivity bound.
    """
    base = controller_from_bandwidth(omega_bw, alpha, 1.0, mapping_mode, zlp)
    l1 = abs(complex(channel.freq_eval(np.atleast_1d(omega_bw))[0] *
                     base.freq_eval(np.atleast_1d(omega_bw))[0]))
    if not np.isfinite(l1) or l1 <= 0.0:
        raise InfeasibleError("no gain achieves crossover at the target bandwidth")
    kp = 1.0 / l1
    controller = base.with_gain(kp)

    grid = _metrics_grid(omega_bw) if grid is None else np.asarray(grid, dtype=float)
    acl = closed_loop_matrix(channel, controller)
    stable = is_stable(acl)
    if not stable:
        raise InfeasibleError(
            f"closed loop unstable at target bandwidth {omega_bw / 2 / np.pi:.3g} Hz"
        )
    peak, w_peak = sensitivity_peak(channel, controller, grid)
    metrics = LoopMetrics(
        kp=kp,
        target_bandwidth=omega_bw,
        achieved_bandwidth=crossover_frequency(channel, controller, grid),
        sensitivity_peak=peak,
        peak_frequency=w_peak,
        stable=stable,
        damping_ratios=_eig_damping(acl),
    )
    if peak > SENSITIVITY_BOUND + 1e-6:
        raise InfeasibleError(
            f"robustness infeasible at {omega_bw / 2 / np.pi:.3g} Hz: "
            f"||S||_inf = {peak:.3f} > {SENSITIVITY_BOUND}"
        )
    return kp, metrics, controller


def max_bandwidth(
    channel,
    alpha: float = DEFAULT_ALPHA,
    mapping_mode: str = "loopshaping",
    search_range: tuple[float, float] = (2 * np.pi * 1.0, 2 * np.pi * 500.0),
    zlp: float = DEFAULT_ZLP,
) -> tuple[float, float, LoopMetrics, ControllerParams]:
    """Largest feasible target bandwidth within 1% via bisection."""
    lo, hi = search_range
    if not 0 < lo < hi:
        raise ValueError("search range must be positive and increasing")

    def attempt(w):
        try:
            return tune_gain(channel, w, alpha, mapping_mode, zlp)
        except InfeasibleError:
            return None

    best = attempt(hi)
    if best is not None:
        return (hi, *best)
    best = attempt(lo)
    if best is None:
        raise InfeasibleError("entire bandwidth search range is infeasible")
    w_lo, w_hi = lo, hi
    while w_hi / w_lo > 1.01:
        mid = math.sqrt(w_lo * w_hi)
        got = attempt(mid)
        if got is not None:
            best, w_lo = got, mid
        else:
            w_hi = mid
    return (w_lo, *best)


def closed_loop_metrics(
    plant: PlantModel, controllers: list[ControllerParams]
) -> tuple[list[LoopMetrics], tuple[tuple[float, float], ...], bool]:
    """Assemble the full MIMO loop and report stability and modal damping.

    Diagonal controllers act on the decoupled DOF channels through Tu/Ty.
    Returns per-channel metrics, closed-loop (omega_n, zeta) pairs of the
    MIMO state matrix, and the overall stability flag.
    """
    if plant.tu is None or plant.ty is None:
        raise SolverError("plant has no decoupling transforms")
    n_ch = plant.tu.shape[1]
    if len(controllers) != n_ch:
        raise SolverError(
            f"got {len(controllers)} controllers for {n_ch} decoupled channels"
        )
    a, b, c, _ = plant.state_space()
    b = b @ plant.tu
    c = plant.ty @ c

    blocks_a, blocks_b, blocks_c = [], [], []
    for ctrl in controllers:
        ac, bc, cc, dc = ctrl.transfer_function().state_space()
        if abs(dc) > 0:
            raise SolverError("controller must be strictly proper")
        blocks_a.append(ac)
        blocks_b.append(bc)
        blocks_c.append(cc)
    nc = [blk.shape[0] for blk in blocks_a]
    n_c_total = sum(nc)
    ng = a.shape[0]
    acl = np.zeros((ng + n_c_total, ng + n_c_total))
    acl[:ng, :ng] = a
    ofs = ng
    for k in range(n_ch):
        sl = slice(ofs, ofs + nc[k])
        acl[:ng, sl] = np.outer(b[:, k], blocks_c[k])
        acl[sl, :ng] = -np.outer(blocks_b[k], c[k, :])
        acl[sl, sl] = blocks_a[k]
        ofs += nc[k]
    stable = is_stable(acl)
    damping = _eig_damping(acl)

    per_channel = []
    for k, ctrl in enumerate(controllers):
        ch = PlantChannel(plant, k)
        grid = _metrics_grid(ctrl.omega_bw)
        try:
            peak, w_peak = sensitivity_peak(ch, ctrl, grid)
        except InfeasibleError:
            peak, w_peak = None, None
        per_channel.append(
            LoopMetrics(
                kp=ctrl.kp,
                target_bandwidth=ctrl.omega_bw,
                achieved_bandwidth=crossover_frequency(ch, ctrl, grid),
                sensitivity_peak=peak,
                peak_frequency=w_peak,
                stable=is_stable(closed_loop_matrix(ch, ctrl)),
                damping_ratios=_eig_damping(closed_loop_matrix(ch, ctrl)),
            )
        )
    return per_channel, damping, stable
