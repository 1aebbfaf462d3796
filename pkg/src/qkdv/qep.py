"""Reduced quantum Euler-Poisson ion model.

State is (n_i, u_i) only; the electron density and potential are diagnosed
at every stage from the massless-electron closure

    phi = -1/2 + n_e^2/2 - (b H^2 / (2 sqrt(n_e))) d2x sqrt(n_e),
    c * d2x phi = n_e - n_i,

with (b, c) = (1, 1) in the lab frame and (eps, eps) in the long-wave
scaled frame.  The closure is solved by damped Newton iteration on n_e
with a constant-coefficient Fourier preconditioner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import (
    ClosureFailureError,
    ConfigurationError,
    FitFailureError,
    GuardTripError,
    VacuumError,
)
from .grid import Field, GridSpec, _check_same_grid, dealiased_product, make_grid, spectral_derivative

# CODATA 2018 defaults; overridable per instance.
ELEMENTARY_CHARGE = 1.602176634e-19
HBAR = 1.054571817e-34
VACUUM_PERMITTIVITY = 8.8541878128e-12
BOLTZMANN = 1.380649e-23
ELECTRON_MASS = 9.1093837015e-31

TOL_CLOSURE = 1e-10
NEWTON_MAX_ITERS = 50

DENSITY_GUARD = (0.25, 4.0)
VELOCITY_GUARD = 1.0


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional parameters of the two-fluid plasma."""

    n0: float
    TFe: float
    me: float = ELECTRON_MASS
    mi: float = 1836.15267343 * ELECTRON_MASS  # proton default
    e: float = ELEMENTARY_CHARGE
    hbar: float = HBAR
    eps0: float = VACUUM_PERMITTIVITY
    kB: float = BOLTZMANN

    def __post_init__(self):
        for name in ("n0", "TFe", "me", "mi", "e", "hbar", "eps0", "kB"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"physical parameter {name} must be positive")
        if not self.mi > self.me:
            raise ConfigurationError("ion mass must exceed electron mass")


@dataclass(frozen=True)
class Scales:
    omega_pe: float
    omega_pi: float
    c_s: float
    v_Fe: float


def nondimensionalize(p: PhysicalParams) -> tuple[float, Scales]:
    """Quantum coupling H = hbar*omega_pe/(kB*TFe) plus the reference scales."""
    omega_pe = math.sqrt(p.n0 * p.e**2 / (p.me * p.eps0))
    omega_pi = math.sqrt(p.n0 * p.e**2 / (p.mi * p.eps0))
    c_s = math.sqrt(p.kB * p.TFe / p.mi)
    v_Fe = math.sqrt(p.kB * p.TFe / p.me)
    H = p.hbar * omega_pe / (p.kB * p.TFe)
    return H, Scales(omega_pe=omega_pe, omega_pi=omega_pi, c_s=c_s, v_Fe=v_Fe)


@dataclass(frozen=True)
class Frame:
    """Lab frame or the long-wave scaled frame with parameter eps."""

    tag: str  # "lab" | "scaled"
    eps: Optional[float] = None

    def __post_init__(self):
        if self.tag not in ("lab", "scaled"):
            raise ConfigurationError(f"unknown frame tag {self.tag!r}")
        if self.tag == "scaled":
            if self.eps is None or not 0.0 < self.eps < 1.0:
                raise ConfigurationError("scaled frame requires eps in (0, 1)")
        elif self.eps is not None:
            raise ConfigurationError("lab frame takes no eps")

    @property
    def bohm_factor(self) -> float:
        """Prefactor of the Bohm term in the potential relation."""
        return 1.0 if self.tag == "lab" else self.eps

    @property
    def poisson_factor(self) -> float:
        """Prefactor of d2x phi in the Poisson equation."""
        return 1.0 if self.tag == "lab" else self.eps


LAB = Frame("lab")


def scaled_frame(eps: float) -> Frame:
    return Frame("scaled", float(eps))


@dataclass(frozen=True)
class EPState:
    t: float
    n_i: Field
    u_i: Field

    def __post_init__(self):
        _check_same_grid(self.n_i, self.u_i)
        if np.min(self.n_i.samples) <= 0:
            raise VacuumError(f"nonpositive ion density at t={self.t}")

    @property
    def grid(self) -> GridSpec:
        return self.n_i.grid


@dataclass(frozen=True)
class ClosureResult:
    n_e: Field
    phi: Field
    newton_iters: int
    residual: float


def _deriv(a: np.ndarray, k: np.ndarray, m: int) -> np.ndarray:
    c = np.fft.rfft(a) * (1j * k) ** m
    if m % 2 == 1:
        c[-1] = 0.0
    return np.fft.irfft(c, n=a.shape[0])


def _closure_phi(nu: np.ndarray, k: np.ndarray, H: float, b: float) -> np.ndarray:
    """Potential as a function of the electron perturbation nu = n_e - 1.

    Working in the perturbation keeps every differentiated array of size
    O(nu), so FFT rounding noise is not amplified to k^4 * machine-eps.
    s1 = sqrt(1 + nu) - 1 is formed cancellation-free.
    """
    s = np.sqrt(1.0 + nu)
    s1 = nu / (1.0 + s)
    return nu + 0.5 * nu**2 - (b * H**2 / 2.0) * _deriv(s1, k, 2) / s


def _closure_residual(nu: np.ndarray, nui: np.ndarray, k: np.ndarray, H: float,
                      b: float, c: float) -> np.ndarray:
    return c * _deriv(_closure_phi(nu, k, H, b), k, 2) - (nu - nui)


def electron_closure(n_i: Field, H: float, frame: Frame,
                     tol: float = TOL_CLOSURE, max_iters: int = NEWTON_MAX_ITERS) -> ClosureResult:
    """Solve the electron/potential closure for a given ion density.

    Damped Newton on n_e with phi eliminated; the Jacobian is applied
    spectrally and inverted by GMRES with the diagonal Fourier
    preconditioner 1/(1 + c k^2 + b c H^2 k^4 / 4) (exact at equilibrium).
    """
    if H < 0:
        raise ConfigurationError("H must be nonnegative")
    grid = n_i.grid
    ni = n_i.samples
    if np.min(ni) <= 0:
        raise VacuumError("ion density must be positive")
    k = grid.k
    b = frame.bohm_factor
    c = frame.poisson_factor
    N = grid.N

    sym = 1.0 + c * k**2 + b * c * H**2 * k**4 / 4.0  # -J at equilibrium, in Fourier

    def precond(v: np.ndarray) -> np.ndarray:
        return np.fft.irfft(np.fft.rfft(v) / -sym, n=N)

    nui = ni - 1.0
    nu = nui.copy()  # initial guess n_e := n_i
    F = _closure_residual(nu, nui, k, H, b, c)
    res = float(np.max(np.abs(F)))
    iters = 0
    while res > tol and iters < max_iters:
        s = np.sqrt(1.0 + nu)
        d2s = _deriv(nu / (1.0 + s), k, 2)

        def jmv(v: np.ndarray) -> np.ndarray:
            bohm = _deriv(v / (2.0 * s), k, 2) / s - d2s * v / (2.0 * s**3)
            return c * _deriv((1.0 + nu) * v - (b * H**2 / 2.0) * bohm, k, 2) - v

        J = LinearOperator((N, N), matvec=jmv, dtype=np.float64)
        M = LinearOperator((N, N), matvec=precond, dtype=np.float64)
        delta, info = gmres(J, -F, M=M, rtol=1e-10, atol=0.0, maxiter=200)
        if info != 0:
            raise ClosureFailureError(
                f"GMRES failed in Newton step (info={info})", residual=res, iterations=iters)
        # step halving on residual increase or loss of positivity
        alpha = 1.0
        for _ in range(30):
            trial = nu + alpha * delta
            if np.min(trial) > -1.0:
                Ft = _closure_residual(trial, nui, k, H, b, c)
                rt = float(np.max(np.abs(Ft)))
                if rt < res or rt <= tol:
                    nu, F, res = trial, Ft, rt
                    break
            alpha *= 0.5
        else:
            raise VacuumError("closure Newton iterate cannot stay positive")
        iters += 1
    if res > tol:
        raise ClosureFailureError(
            f"closure Newton did not reach tol={tol:.1e} in {max_iters} iterations",
            residual=res, iterations=iters)
    phi = _closure_phi(nu, k, H, b)
    return ClosureResult(n_e=Field(grid, 1.0 + nu), phi=Field(grid, phi),
                         newton_iters=iters, residual=res)


def ep_rhs(state: EPState, closure: ClosureResult, frame: Frame) -> tuple[Field, Field]:
    """Tendencies (dn_i/dt, du_i/dt) in the requested frame.

    All quadratic products are dealiased; the momentum equation is kept in
    perfect-derivative form so spatial means are conserved exactly.
    """
    n, u, phi = state.n_i, state.u_i, closure.phi
    flux = spectral_derivative(dealiased_product(n, u), 1)
    bern = spectral_derivative(dealiased_product(u, u) * 0.5 + phi, 1)
    if frame.tag == "lab":
        return -flux, -bern
    inv = 1.0 / frame.eps
    dn = (spectral_derivative(n, 1) - flux) * inv
    du = (spectral_derivative(u, 1) - bern) * inv
    return dn, du


@dataclass
class EPTrajectory:
    frame: Frame
    H: float
    dt: float
    times: list[float] = dc_field(default_factory=list)
    states: list[EPState] = dc_field(default_factory=list)
    closures: list[ClosureResult] = dc_field(default_factory=list)


def _check_guards(n: np.ndarray, u: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(n)) or not np.all(np.isfinite(u)):
        raise GuardTripError(f"NaN/Inf detected at t={t:.6g}", time=t)
    lo, hi = DENSITY_GUARD
    if np.min(n) <= lo or np.max(n) >= hi:
        raise GuardTripError(
            f"ion density left ({lo}, {hi}) at t={t:.6g}", time=t)
    if np.max(np.abs(u)) >= VELOCITY_GUARD:
        raise GuardTripError(f"|u_i| reached {VELOCITY_GUARD} at t={t:.6g}", time=t)


def solve_ep(initial: EPState, H: float, frame: Frame, T: float,
             cfl: float = 0.5, n_samples: int = 50) -> EPTrajectory:
    """Integrate the ion system with classical RK4, closure at every stage.

    The step is cfl * dx * min(1, eps): the scaled frame carries the fast
    -2/eps characteristic.  Samples land exactly on an even subdivision of
    [0, T]; the step is shrunk to divide the sampling interval.
    """
    if not T > 0:
        raise ConfigurationError("final time must be positive")
    grid = initial.grid
    eps_fac = 1.0 if frame.tag == "lab" else frame.eps
    dt_target = cfl * grid.dx * min(1.0, eps_fac)
    sample_dt = T / n_samples
    steps_per_sample = max(1, math.ceil(sample_dt / dt_target))
    dt = sample_dt / steps_per_sample

    traj = EPTrajectory(frame=frame, H=H, dt=dt)

    def accel(n: np.ndarray, u: np.ndarray, t: float):
        state = EPState(t, Field(grid, n), Field(grid, u))
        clo = electron_closure(state.n_i, H, frame)
        dn, du = ep_rhs(state, clo, frame)
        return dn.samples, du.samples, clo

    n = initial.n_i.samples.copy()
    u = initial.u_i.samples.copy()
    t = initial.t

    dn0, du0, clo0 = accel(n, u, t)
    traj.times.append(t)
    traj.states.append(EPState(t, Field(grid, n), Field(grid, u)))
    traj.closures.append(clo0)

    for _ in range(n_samples):
        for _ in range(steps_per_sample):
            k1n, k1u, _ = accel(n, u, t)
            k2n, k2u, _ = accel(n + 0.5 * dt * k1n, u + 0.5 * dt * k1u, t + 0.5 * dt)
            k3n, k3u, _ = accel(n + 0.5 * dt * k2n, u + 0.5 * dt * k2u, t + 0.5 * dt)
            k4n, k4u, _ = accel(n + dt * k3n, u + dt * k3u, t + dt)
            n = n + (dt / 6.0) * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
            u = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            t += dt
            _check_guards(n, u, t)
        t = initial.t + round((t - initial.t) / sample_dt) * sample_dt  # kill drift
        state = EPState(t, Field(grid, n), Field(grid, u))
        traj.times.append(t)
        traj.states.append(state)
        traj.closures.append(electron_closure(state.n_i, H, frame))
    return traj


def dispersion_oracle(k: float, H: float) -> float:
    """Linearized ion-acoustic frequency omega(k) of the lab-frame model."""
    q = k**2 * (1.0 + H**2 * k**2 / 4.0)
    return math.sqrt(q / (1.0 + q))


def measure_dispersion(k_mode: int, H: float, amplitude: float = 1e-6,
                       L: float = 2.0 * math.pi, N: int = 64,
                       T: float = 60.0, n_samples: int = 600) -> float:
    """Measure the oscillation frequency of a standing linear perturbation.

    Runs the lab-frame solver with n_i = 1 + a cos(k x), u_i = 0 and fits
    the time series of the k-th Fourier mode of n_i.
    """
    if amplitude > 1e-5:
        raise ConfigurationError("dispersion probe requires amplitude <= 1e-5")
    grid = make_grid(L, N)
    n0 = Field(grid, 1.0 + amplitude * np.cos(2.0 * np.pi * k_mode * grid.x / L))
    traj = solve_ep(EPState(0.0, n0, Field.zeros(grid)), H, LAB, T, n_samples=n_samples)
    times = np.array(traj.times)
    series = np.array([2.0 * np.real(s.n_i.coeffs[k_mode]) / N for s in traj.states])
    series = series / amplitude  # ~ cos(omega t)

    # crude frequency from zero crossings, then refined by least squares
    sign = np.sign(series)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if len(idx) < 2:
        raise FitFailureError("not enough oscillation periods to fit a frequency")
    crossings = times[idx] - series[idx] * (times[idx + 1] - times[idx]) / (
        series[idx + 1] - series[idx])
    half_period = np.mean(np.diff(crossings))
    omega0 = math.pi / half_period

    def model(t, A, w):
        return A * np.cos(w * t)

    popt, _ = curve_fit(model, times, series, p0=[1.0, omega0])
    return float(abs(popt[1]))
