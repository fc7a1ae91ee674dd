"""Independent reference computations used as test oracles.

These implementations deliberately share no code with the package: the
plate oracle is a Rayleigh-Ritz expansion in free-free beam functions
under thin-plate theory, grammians come from direct Lyapunov solves, and
loop stability from a Nyquist winding count.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.optimize

# Roots of cos(x) cosh(x) = 1 (free-free Euler-Bernoulli beam).
_FF_ROOT_GUESSES = (4.730, 7.853, 10.996, 14.137)


def _free_free_roots(n: int) -> np.ndarray:
    roots = []
    for k in range(n):
        if k < len(_FF_ROOT_GUESSES):
            guess = _FF_ROOT_GUESSES[k]
        else:
            guess = (2 * k + 3) * np.pi / 2
        r = scipy.optimize.brentq(
            lambda x: np.cos(x) * np.cosh(x) - 1.0, guess - 0.3, guess + 0.3
        )
        roots.append(r)
    return np.asarray(roots)


def _beam_functions(n_elastic: int, xs: np.ndarray) -> np.ndarray:
    """Rigid + elastic free-free beam functions sampled on xs in [0, 1]."""
    rows = [np.ones_like(xs), np.sqrt(3.0) * (2.0 * xs - 1.0)]
    for lam in _free_free_roots(n_elastic):
        sigma = (np.cosh(lam) - np.cos(lam)) / (np.sinh(lam) - np.sin(lam))
        rows.append(
            np.cosh(lam * xs) + np.cos(lam * xs)
            - sigma * (np.sinh(lam * xs) + np.sin(lam * xs))
        )
    return np.asarray(rows)


def _second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    d2 = np.empty_like(values)
    d2[:, 1:-1] = (values[:, 2:] - 2 * values[:, 1:-1] + values[:, :-2]) / h**2
    d2[:, 0] = d2[:, 1]
    d2[:, -1] = d2[:, -2]
    return d2


def _first_derivative(values: np.ndarray, h: float) -> np.ndarray:
    d1 = np.empty_like(values)
    d1[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * h)
    d1[:, 0] = (values[:, 1] - values[:, 0]) / h
    d1[:, -1] = (values[:, -1] - values[:, -2]) / h
    return d1


def plate_frequencies_rayleigh_ritz(
    side: float,
    thickness: float,
    youngs_modulus: float,
    poisson_ratio: float,
    density: float,
    n_functions: int = 6,
    n_modes: int = 8,
    n_quad: int = 2001,
) -> np.ndarray:
    """Thin-plate frequencies (rad/s) of a completely free square plate.

    Rayleigh-Ritz with products of free-free beam functions; rigid body
    products are part of the basis, so the first three returned values
    are numerically zero.
    """
    nu = poisson_ratio
    d_flex = youngs_modulus * thickness**3 / (12.0 * (1.0 - nu**2))
    rho_h = density * thickness

    xs = np.linspace(0.0, 1.0, n_quad)
    h = xs[1] - xs[0]
    funcs = _beam_functions(n_functions - 2, xs)          # (n_functions, n_quad)
    d1 = _first_derivative(funcs, h) / side
    d2 = _second_derivative(funcs, h) / side**2

    def inner(a, b):
        return np.trapezoid(a * b, dx=h, axis=-1) * side

    nf = n_functions
    s0 = np.empty((nf, nf))
    s1 = np.empty((nf, nf))
    s2 = np.empty((nf, nf))
    s02 = np.empty((nf, nf))
    for i in range(nf):
        for j in range(nf):
            s0[i, j] = inner(funcs[i], funcs[j])
            s1[i, j] = inner(d1[i], d1[j])
            s2[i, j] = inner(d2[i], d2[j])
            s02[i, j] = inner(funcs[i], d2[j])

    kmat = d_flex * (
        np.kron(s2, s0)
        + np.kron(s0, s2)
        + nu * (np.kron(s02, s02.T) + np.kron(s02.T, s02))
        + 2.0 * (1.0 - nu) * np.kron(s1, s1)
    )
    mmat = rho_h * np.kron(s0, s0)
    kmat = 0.5 * (kmat + kmat.T)
    mmat = 0.5 * (mmat + mmat.T)
    vals = scipy.linalg.eigh(kmat, mmat, eigvals_only=True)
    vals = np.clip(vals, 0.0, None)
    return np.sqrt(vals[:n_modes])


def lyapunov_modal_grammian(omega: float, zeta: float, b_row: np.ndarray) -> float:
    """Controllability grammian of one modal block via a Lyapunov solve.

    States (q, qdot); returns the velocity-velocity entry, which the
    lightly-damped closed form reproduces.
    """
    a = np.array([[0.0, 1.0], [-omega**2, -2.0 * zeta * omega]])
    b = np.zeros((2, len(b_row)))
    b[1, :] = b_row
    w = scipy.linalg.solve_continuous_lyapunov(a, -b @ b.T)
    return float(w[1, 1])


def nyquist_stable(loop_eval, omega_max: float, n_points: int = 200001) -> bool:
    """Closed-loop stability of a stable open loop by winding count.

    Counts encirclements of -1 by L(j omega) for omega in (-inf, inf)
    using conjugate symmetry; zero net winding means stable under
    negative feedback when L itself has no right-half-plane poles.
    """
    w = np.linspace(1e-6 * omega_max, omega_max, n_points)
    l_pos = loop_eval(w)
    one_plus = 1.0 + np.concatenate([np.conj(l_pos[::-1]), l_pos])
    angles = np.unwrap(np.angle(one_plus))
    winding = (angles[-1] - angles[0]) / (2.0 * np.pi)
    return bool(abs(winding) < 0.5)
