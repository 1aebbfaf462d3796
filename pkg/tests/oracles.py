"""Independent cross-check implementations used only by the test suite.

Everything here is deliberately written with different numerics than the
package (quadrature instead of Parseval sums, characteristics instead of
time stepping, finite differences instead of evolution-equation
substitution) so agreement is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


def trapezoid_l2_sq(samples: np.ndarray, L: float) -> float:
    """||f||_L2^2 by the periodic trapezoid rule (spectrally accurate)."""
    return float(np.sum(samples ** 2) * L / len(samples))


def fd_derivative(samples: np.ndarray, dx: float, order: int = 1) -> np.ndarray:
    """Periodic 6th-order centered finite-difference first derivative,
    applied repeatedly for higher orders."""
    w = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
    out = samples
    for _ in range(order):
        acc = np.zeros_like(out)
        for shift, c in zip(range(-3, 4), w):
            acc += c * np.roll(out, -shift)
        out = acc / dx
    return out


def linear_response_factor(k: float, H: float) -> float:
    """Electron density response to a small ion perturbation at wavenumber k."""
    return 1.0 / (1.0 + k ** 2 * (1.0 + H ** 2 * k ** 2 / 4.0))


def acoustic_omega(k: float, H: float) -> float:
    """Linearized two-fluid oscillation frequency."""
    q = k ** 2 * (1.0 + H ** 2 * k ** 2 / 4.0)
    return float(np.sqrt(q / (1.0 + q)))


def burgers_characteristics(n0_fn, x_grid: np.ndarray, t: float, L: float,
                            amplitude_bound: float) -> np.ndarray:
    """Solve n_t + 2 n n_x = 0 exactly: n(x, t) = n0(x0), x = x0 + 2 n0(x0) t.

    Valid pre-shock; x0 is found per grid point by bracketed root finding on
    the periodic displacement.
    """
    out = np.empty_like(x_grid)
    span = 2.0 * amplitude_bound * t + 1e-9
    for i, x in enumerate(x_grid):
        def g(x0, x=x):
            return x0 + 2.0 * n0_fn(x0) * t - x
        out[i] = n0_fn(brentq(g, x - span, x + span, xtol=1e-14))
    return out


def burgers_shock_time(n0_fn, L: float, n_probe: int = 4096) -> float:
    """First crossing time 1 / (2 max(-n0')) from densely sampled data."""
    x = np.linspace(0.0, L, n_probe, endpoint=False)
    dx = L / n_probe
    d = (n0_fn((x + dx) % L) - n0_fn((x - dx) % L)) / (2.0 * dx)
    steepest = -np.min(d)
    if steepest <= 0:
        return float("inf")
    return 1.0 / (2.0 * steepest)


def soliton_evaluator(c: float, delta: float, x0: float, L: float):
    """Periodized traveling sech^2 profile for the long-wave equation."""
    A = 1.5 * c
    kappa = np.sqrt(c / (4.0 * delta))

    def evaluate(x: np.ndarray, t: float) -> np.ndarray:
        total = np.zeros_like(x)
        for image in range(-3, 4):
            total += A / np.cosh(kappa * (x - x0 - c * t + image * L)) ** 2
        return total

    return evaluate
