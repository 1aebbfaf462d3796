"""Quantum KdV equation, its Burgers degeneration, and the corrector hierarchy.

The leading profile n1 solves

    dn/dt + 2 n dn/dx + delta(H) d3n/dx3 = 0,   delta(H) = (1 - H^2/4)/2,

and the second corrector n2 solves the linearized inhomogeneous equation
with a source assembled from n1 alone.  Both are integrated with an
integrating-factor RK4 scheme: the dispersion is advanced exactly in
Fourier space, the (dealiased) nonlinearity by explicit fourth-order
stages.  For H = 2 the dispersion vanishes and a gradient guard aborts
before the Burgers shock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, GuardTripError, TimeAlignmentError
from .grid import (
    Field,
    GridSpec,
    _check_same_grid,
    antiderivative_zero_mean,
    dealias_truncate,
    dealiased_product,
    integral,
    l2_norm_sq,
    spectral_derivative,
)
from .qep import EPState, VacuumError

GRAD_MAX_DEFAULT = 1e3


def dispersion_coefficient(H: float) -> float:
    """Coefficient of the third-derivative term; vanishes at H = 2."""
    return 0.5 * (1.0 - H**2 / 4.0)


@dataclass(frozen=True)
class KdVState:
    t: float
    n: Field


@dataclass(frozen=True)
class SourceTerm:
    """Inhomogeneity of a corrector equation; must have zero mean."""

    t: float
    G: Field

    def __post_init__(self):
        scale = max(float(np.max(np.abs(self.G.samples))), 1.0)
        if abs(self.G.mean()) > 1e-10 * scale:
            raise ConfigurationError(
                f"corrector source has nonzero mean {self.G.mean():.3e}; "
                "the periodic hierarchy is not solvable")


@dataclass(frozen=True)
class CorrectorSet:
    """Expansion data at one scaled time.

    Order 1 stores the single profile n1 (= first-order density, electron
    density and velocity).  Order 2 adds n2 and the derived fields
    ne2 = n2 + d2x n1 and u2 = n2 + g1.
    """

    order: int
    t: float
    n1: Field
    n2: Optional[Field] = None
    ne2: Optional[Field] = None
    u2: Optional[Field] = None
    g1: Optional[Field] = None

    @staticmethod
    def first_order(t: float, n1: Field) -> "CorrectorSet":
        return CorrectorSet(order=1, t=t, n1=n1)

    @staticmethod
    def second_order(t: float, n1: Field, n2: Field, H: float) -> "CorrectorSet":
        g_frak, g1 = second_corrector(n1, H)
        ne2 = n2 + spectral_derivative(n1, 2)
        u2 = n2 + g1
        return CorrectorSet(order=2, t=t, n1=n1, n2=n2, ne2=ne2, u2=u2, g1=g1)


@dataclass
class KdVTrajectory:
    H: float
    dt: float
    times: list[float] = dc_field(default_factory=list)
    fields: list[Field] = dc_field(default_factory=list)

    def at(self, t: float, tol: float) -> Field:
        for ti, f in zip(self.times, self.fields):
            if abs(ti - t) <= tol:
                return f
        raise TimeAlignmentError(f"trajectory holds no sample at t={t}")


def kdv_invariants(n: Field) -> tuple[float, float]:
    """Conserved integrals (int n dx, int n^2 dx), by exact quadrature."""
    return integral(n), l2_norm_sq(n)


def soliton_profile(c: float, H: float, x0: float, grid: GridSpec):
    """One-soliton n(x, t) = A sech^2(kappa (x - x0 - c t)), A = 3c/2.

    The amplitude and width follow from substituting the ansatz into the
    evolution equation; the residual check below guards the derivation.
    Returns the t = 0 field and an evaluator for the translate at any t.
    """
    delta = dispersion_coefficient(H)
    if delta == 0.0:
        raise ConfigurationError("no soliton: the dispersive term vanishes at H = 2")
    kappa_sq = c / (4.0 * delta)
    if kappa_sq <= 0.0:
        raise ConfigurationError(
            "speed and dispersion signs are incompatible; flip the polarization "
            "(n -> -n, t -> -t) for this H")
    A = 1.5 * c
    kappa = math.sqrt(kappa_sq)
    L = grid.L

    def evaluate(x: np.ndarray, t: float) -> np.ndarray:
        xi = np.mod(x - x0 - c * t + L / 2.0, L) - L / 2.0
        return A / np.cosh(kappa * xi) ** 2

    return Field(grid, evaluate(grid.x, 0.0)), evaluate


def kdv_rhs(n: Field, H: float) -> Field:
    """Full right-hand side -2 n dn/dx - delta d3n/dx3 (dealiased)."""
    delta = dispersion_coefficient(H)
    return -spectral_derivative(dealiased_product(n, n), 1) - delta * spectral_derivative(n, 3)


def _shock_time_estimate(t: float, n: Field) -> float:
    """Burgers slope blow-up: 1/|min n_x| shrinks at rate 2 along characteristics."""
    smin = float(np.min(spectral_derivative(n, 1).samples))
    if smin >= 0:
        return math.inf
    return t + 1.0 / (2.0 * (-smin))


def _if_rk4_factors(k: np.ndarray, delta: float, h: float):
    lam = 1j * delta * k**3
    lam[-1] = 0.0  # Nyquist is a cosine-only mode; odd derivatives vanish there
    return np.exp(lam * h), np.exp(lam * h / 2.0)


SourceLike = Union[None, Callable[[float, Field], Field], Sequence[SourceTerm]]


def _source_fn(source: SourceLike, grid: GridSpec) -> Callable[[float, Field], np.ndarray]:
    if source is None:
        zero = np.zeros(grid.N)
        return lambda t, n1: zero
    if callable(source):
        return lambda t, n1: source(t, n1).samples
    terms = sorted(source, key=lambda s: s.t)
    ts = np.array([s.t for s in terms])
    vals = np.stack([s.G.samples for s in terms])

    def interp(t: float, n1: Field) -> np.ndarray:
        if t < ts[0] - 1e-9 or t > ts[-1] + 1e-9:
            raise TimeAlignmentError(f"source samples do not cover t={t}")
        j = int(np.clip(np.searchsorted(ts, t) - 1, 0, len(ts) - 2))
        w = (t - ts[j]) / (ts[j + 1] - ts[j]) if ts[j + 1] > ts[j] else 0.0
        return (1.0 - w) * vals[j] + w * vals[j + 1]

    return interp


def _choose_dt(grid: GridSpec, n0: Field, dt: Optional[float], T: float,
               n_samples: int) -> tuple[float, int]:
    if dt is None:
        amp = max(float(np.max(np.abs(n0.samples))), 1e-3)
        dt = 0.25 * grid.dx / (2.0 * amp)
    sample_dt = T / n_samples
    steps = max(1, math.ceil(sample_dt / dt))
    return sample_dt / steps, steps


def _evolve(n1_0: Field, H: float, T: float, dt: Optional[float], n_samples: int,
            grad_max: float, n2_0: Optional[Field] = None,
            source: SourceLike = None) -> tuple[KdVTrajectory, Optional[KdVTrajectory]]:
    """Shared integrating-factor RK4 core for n1 alone or the (n1, n2) pair."""
    grid = n1_0.grid
    if not T > 0:
        raise ConfigurationError("final time must be positive")
    delta = dispersion_coefficient(H)
    dt_eff, steps_per_sample = _choose_dt(grid, n1_0, dt, T, n_samples)
    E, E2 = _if_rk4_factors(grid.k, delta, dt_eff)
    src = _source_fn(source, grid)
    with_n2 = n2_0 is not None

    def nl1(c1: np.ndarray) -> np.ndarray:
        f = Field.from_coeffs(grid, c1)
        return np.fft.rfft(-spectral_derivative(dealiased_product(f, f), 1).samples)

    def nl2(c1: np.ndarray, c2: np.ndarray, t: float) -> np.ndarray:
        f1 = Field.from_coeffs(grid, c1)
        f2 = Field.from_coeffs(grid, c2)
        out = -2.0 * spectral_derivative(dealiased_product(f1, f2), 1).samples
        return np.fft.rfft(out + src(t, f1))

    t = 0.0
    v1 = np.fft.rfft(n1_0.samples)
    v2 = np.fft.rfft(n2_0.samples) if with_n2 else None

    traj1 = KdVTrajectory(H=H, dt=dt_eff, times=[0.0], fields=[Field.from_coeffs(grid, v1)])
    traj2 = KdVTrajectory(H=H, dt=dt_eff, times=[0.0],
                          fields=[Field.from_coeffs(grid, v2)]) if with_n2 else None
    sample_dt = T / n_samples

    for i in range(n_samples):
        for _ in range(steps_per_sample):
            h = dt_eff
            a1 = h * nl1(v1)
            s1b = E2 * (v1 + a1 / 2.0)
            b1 = h * nl1(s1b)
            s1c = E2 * v1 + b1 / 2.0
            c1 = h * nl1(s1c)
            s1d = E * v1 + E2 * c1
            d1 = h * nl1(s1d)
            if with_n2:
                a2 = h * nl2(v1, v2, t)
                b2 = h * nl2(s1b, E2 * (v2 + a2 / 2.0), t + h / 2.0)
                c2 = h * nl2(s1c, E2 * v2 + b2 / 2.0, t + h / 2.0)
                d2 = h * nl2(s1d, E * v2 + E2 * c2, t + h)
                v2 = E * v2 + (E * a2 + 2.0 * E2 * (b2 + c2) + d2) / 6.0
            v1 = E * v1 + (E * a1 + 2.0 * E2 * (b1 + c1) + d1) / 6.0
            t += h
            if not np.all(np.isfinite(v1)) or (with_n2 and not np.all(np.isfinite(v2))):
                raise GuardTripError(f"NaN detected at t={t:.6g}", time=t)
            n_now = Field.from_coeffs(grid, v1)
            grad = float(np.max(np.abs(spectral_derivative(n_now, 1).samples)))
            if grad > grad_max:
                raise GuardTripError(
                    f"gradient guard |dn/dx| > {grad_max:g} tripped at t={t:.6g}",
                    time=t, shock_time_estimate=_shock_time_estimate(t, n_now))
        t = round(t / sample_dt) * sample_dt
        traj1.times.append(t)
        traj1.fields.append(Field.from_coeffs(grid, v1))
        if with_n2:
            traj2.times.append(t)
            traj2.fields.append(Field.from_coeffs(grid, v2))
    return traj1, traj2


def solve_kdv(initial: KdVState, H: float, T: float, dt: Optional[float] = None,
              n_samples: int = 50, grad_max: float = GRAD_MAX_DEFAULT) -> KdVTrajectory:
    traj, _ = _evolve(initial.n, H, T, dt, n_samples, grad_max)
    for i in range(len(traj.times)):
        traj.times[i] += initial.t
    return traj


def second_corrector(n1: Field, H: float) -> tuple[Field, Field]:
    """Source g_frak and integrated gauge field g1 of the (L2) relations.

    The time derivative of the first-order velocity is eliminated with the
    evolution equation, never by differencing; the result is an exact
    x-derivative, so the zero-mean antiderivative exists.
    """
    delta = dispersion_coefficient(H)
    # dt u1 + dx(n1 u1) with the evolution equation substituted: the
    # quadratic transport terms cancel and only the dispersive flux is left.
    g_frak = -delta * spectral_derivative(n1, 3)
    g1 = -1.0 * antiderivative_zero_mean(g_frak)
    return g_frak, g1


def assemble_G1(n1: Field, H: float) -> SourceTerm:
    """Source of the second-corrector equation, in closed form in n1.

    Obtained once by combining the third-order system (x-derivative of the
    Poisson relation plus the two momentum/continuity equations) with the
    second-order relations substituted and collecting the terms free of
    n2.  Guarded by the hierarchy-residual test.
    """
    delta = dispersion_coefficient(H)
    d1 = spectral_derivative(n1, 1)
    d2 = spectral_derivative(n1, 2)
    d3 = spectral_derivative(n1, 3)
    d5 = spectral_derivative(n1, 5)
    G = ((-1.0 - H**2 / 8.0) * dealiased_product(n1, d3)
         + (-1.0 - H**2 / 2.0) * dealiased_product(d1, d2)
         + (0.5 * delta**2 + H**2 / 4.0 - 0.5) * d5)
    # the d5 term amplifies above-cutoff rounding noise by k^5; keep the
    # source on the same mode budget as every other nonlinear term
    return SourceTerm(t=0.0, G=dealias_truncate(G))


def hierarchy_source(H: float) -> Callable[[float, Field], Field]:
    """Per-time source callback feeding assemble_G1 to the linearized solver."""
    return lambda t, n1: assemble_G1(n1, H).G


def solve_linearized_kdv(initial: KdVState, n1_traj: Union[KdVTrajectory, Field],
                         source: SourceLike, H: float, T: float,
                         dt: Optional[float] = None, n_samples: int = 50,
                         grad_max: float = GRAD_MAX_DEFAULT
                         ) -> tuple[KdVTrajectory, KdVTrajectory]:
    """Integrate the linearized inhomogeneous equation for a corrector.

    The coefficient profile n1 is co-evolved from its own initial field so
    that the RK4 stages see consistent values; a supplied trajectory must
    cover [0, T] and is used only for its initial state.  Returns the
    (n2, n1) trajectory pair on identical sample times.
    """
    if isinstance(n1_traj, KdVTrajectory):
        if n1_traj.times[-1] + 1e-12 < T:
            raise TimeAlignmentError(
                f"n1 trajectory ends at t={n1_traj.times[-1]} before T={T}")
        n1_0 = n1_traj.fields[0]
    else:
        n1_0 = n1_traj
    traj1, traj2 = _evolve(n1_0, H, T, dt, n_samples, grad_max,
                           n2_0=initial.n, source=source)
    return traj2, traj1


def build_approximation(correctors: CorrectorSet, eps: float, order: int
                        ) -> tuple[Field, Field, Field]:
    """Truncated expansion fields (n_i, n_e, u_i) in the scaled frame."""
    if order not in (1, 2):
        raise ConfigurationError("approximation order must be 1 or 2")
    if correctors.order < order:
        raise ConfigurationError(
            f"corrector set of order {correctors.order} cannot build order {order}")
    n1 = correctors.n1
    if order == 1:
        return 1.0 + eps * n1, 1.0 + eps * n1, eps * n1
    n_i = 1.0 + eps * n1 + eps**2 * correctors.n2
    n_e = 1.0 + eps * n1 + eps**2 * correctors.ne2
    u_i = eps * n1 + eps**2 * correctors.u2
    return n_i, n_e, u_i


def prepare_initial_data(n1_0: Field, n2_0: Optional[Field], eps: float,
                         order: int, H: float) -> EPState:
    """Well-prepared scaled-frame initial state with zero initial remainder."""
    if order == 1:
        cs = CorrectorSet.first_order(0.0, n1_0)
    else:
        if n2_0 is None:
            n2_0 = Field.zeros(n1_0.grid)
        cs = CorrectorSet.second_order(0.0, n1_0, n2_0, H)
    n_i, _, u_i = build_approximation(cs, eps, order)
    if float(np.min(n_i.samples)) <= 0.25:
        raise VacuumError(
            "prepared initial density leaves the guard region; reduce eps or amplitude")
    return EPState(0.0, n_i, u_i)
