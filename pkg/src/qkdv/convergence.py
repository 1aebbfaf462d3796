"""Long-wavelength convergence experiments.

Runs the full two-fluid model and its weakly-nonlinear approximation side by
side over a range of scaling parameters, measures the sup-in-time H2
discrepancy of the rescaled perturbation fields, and fits the observed decay
rate.  A weighted-energy time trace doubles as a no-blow-up monitor.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ClosureFailureError,
    ConfigurationError,
    FitFailureError,
    GuardTripError,
    VacuumError,
)
from .grid import Field, TripleNorm, sobolev_norm, triple_norm
from .kdv import (
    GRAD_MAX_DEFAULT,
    CorrectorSet,
    KdVState,
    build_approximation,
    hierarchy_source,
    prepare_initial_data,
    solve_kdv,
    solve_linearized_kdv,
)
from .qep import ClosureResult, EPState, scaled_frame, solve_ep

DEFAULT_EPSILONS = (0.1, 0.05, 0.025)
DEFAULT_N_SAMPLES = 200
DEFAULT_BOUND_FACTOR = 100.0


@dataclass(frozen=True)
class RemainderTrace:
    """Per-time discrepancy fields and norms for one epsilon run.

    fields[i] = (D_n, D_ne, D_u): the rescaled perturbations of the full
    solution minus the approximation of the requested order, divided by
    epsilon.  triple_norms (order-2 runs only) are the weighted energies of
    the same fields divided by epsilon^2, i.e. of the eps^3-normalized
    remainders.
    """

    eps: float
    order: int
    times: tuple[float, ...]
    fields: tuple[tuple[Field, Field, Field], ...]
    h2_norms: tuple[float, ...]
    triple_norms: Optional[tuple[TripleNorm, ...]]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigurationError("trace times must be strictly increasing")
        if any(h < 0 for h in self.h2_norms):
            raise ConfigurationError("norms must be nonnegative")


@dataclass(frozen=True)
class EpsilonRunRecord:
    """Outcome of a single epsilon in a sweep."""

    eps: float
    ok: bool
    sup_error: Optional[float]
    lab_horizon: float
    error_kind: Optional[str] = None
    error_message: Optional[str] = None
    trace: Optional[RemainderTrace] = None
    norm_bounded: Optional[bool] = None
    norm_max_ratio: Optional[float] = None


@dataclass(frozen=True)
class ConvergenceReport:
    """Sweep summary: one sup-in-time H2 discrepancy per surviving epsilon."""

    epsilons: tuple[float, ...]
    sup_errors: tuple[Optional[float], ...]
    fitted_slope: Optional[float]
    fit_residual: Optional[float]
    order: int
    tau: float
    H: float
    records: tuple[EpsilonRunRecord, ...]
    config: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if len(self.epsilons) != len(self.sup_errors):
            raise ConfigurationError("one sup_error entry per epsilon required")

    @property
    def surviving(self) -> list[tuple[float, float]]:
        return [(e, s) for e, s in zip(self.epsilons, self.sup_errors) if s is not None]


def scaled_discrepancy(state: EPState, closure: ClosureResult,
                       approx: tuple[Field, Field, Field], eps: float
                       ) -> tuple[tuple[Field, Field, Field], float]:
    """Rescaled gap between the full fields and an approximation.

    approx = (n_i, n_e, u_i) built at the same time; the returned fields are
    (full - approx)/eps and h2 is the root-sum-square of their H2 norms.
    """
    if not 0.0 < eps < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {eps}")
    inv = 1.0 / eps
    D_n = (state.n_i - approx[0]) * inv
    D_ne = (closure.n_e - approx[1]) * inv
    D_u = (state.u_i - approx[2]) * inv
    h2 = float(np.sqrt(sobolev_norm(D_n, 2) ** 2 + sobolev_norm(D_ne, 2) ** 2
                       + sobolev_norm(D_u, 2) ** 2))
    return (D_n, D_ne, D_u), h2


def norm_trace(trace: RemainderTrace, bound_factor: float = DEFAULT_BOUND_FACTOR
               ) -> tuple[tuple[float, ...], bool, float]:
    """Weighted-energy series of an order-2 trace with a no-blow-up verdict.

    Returns (series, bounded, max/(1+initial) ratio); bounded means the
    maximum stays below bound_factor * (1 + initial value).
    """
    if trace.order != 2 or trace.triple_norms is None:
        raise ConfigurationError("norm_trace requires an order-2 remainder trace")
    series = tuple(tn.total for tn in trace.triple_norms)
    initial = series[0]
    peak = max(series)
    ratio = peak / (1.0 + initial)
    return series, bool(peak <= bound_factor * (1.0 + initial)), float(ratio)


def _run_one_epsilon(eps: float, tau: float, n1_0: Field, H: float, order: int,
                     n_samples: int, kdv_dt: Optional[float],
                     bound_factor: float, grad_max: float) -> EpsilonRunRecord:
    lab_horizon = float(eps ** -1.5 * tau)
    try:
        grid = n1_0.grid
        state0 = prepare_initial_data(n1_0, None, eps, order, H)
        ep_traj = solve_ep(state0, H, scaled_frame(eps), tau, n_samples=n_samples)
        if order == 1:
            kdv_traj = solve_kdv(KdVState(0.0, n1_0), H, tau, dt=kdv_dt,
                                 n_samples=n_samples, grad_max=grad_max)
            n1_fields = kdv_traj.fields
            n2_fields = [None] * len(n1_fields)
        else:
            traj2, traj1 = solve_linearized_kdv(
                KdVState(0.0, Field.zeros(grid)), n1_0, hierarchy_source(H),
                H, tau, dt=kdv_dt, n_samples=n_samples, grad_max=grad_max)
            n1_fields = traj1.fields
            n2_fields = traj2.fields

        times, fields, h2s, tns = [], [], [], []
        for state, closure, n1, n2 in zip(ep_traj.states, ep_traj.closures,
                                          n1_fields, n2_fields):
            if order == 1:
                correctors = CorrectorSet.first_order(state.t, n1)
            else:
                correctors = CorrectorSet.second_order(state.t, n1, n2, H)
            approx = build_approximation(correctors, eps, order)
            (D_n, D_ne, D_u), h2 = scaled_discrepancy(state, closure, approx, eps)
            times.append(state.t)
            fields.append((D_n, D_ne, D_u))
            h2s.append(h2)
            if order == 2:
                inv2 = eps ** -2
                tns.append(triple_norm(D_n * inv2, D_ne * inv2, D_u * inv2, eps))
        trace = RemainderTrace(eps=eps, order=order, times=tuple(times),
                               fields=tuple(fields), h2_norms=tuple(h2s),
                               triple_norms=tuple(tns) if order == 2 else None)
        sup_error = float(max(h2s))
        bounded = ratio = None
        if order == 2:
            _, bounded, ratio = norm_trace(trace, bound_factor)
            if not bounded:
                return EpsilonRunRecord(
                    eps=eps, ok=False, sup_error=None, lab_horizon=lab_horizon,
                    error_kind="NormBlowUp",
                    error_message=f"weighted energy grew by factor {ratio:.3g}",
                    trace=trace, norm_bounded=False, norm_max_ratio=ratio)
        return EpsilonRunRecord(eps=eps, ok=True, sup_error=sup_error,
                                lab_horizon=lab_horizon, trace=trace,
                                norm_bounded=bounded, norm_max_ratio=ratio)
    except (GuardTripError, ClosureFailureError, VacuumError) as exc:
        return EpsilonRunRecord(eps=eps, ok=False, sup_error=None,
                                lab_horizon=lab_horizon,
                                error_kind=type(exc).__name__,
                                error_message=str(exc))


def _worker_count() -> int:
    raw = os.environ.get("QKDV_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(f"QKDV_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise ConfigurationError(f"QKDV_THREADS must be >= 1, got {n}")
    return n


def run_sweep(epsilons: Sequence[float], tau: float, n1_0: Field, H: float,
              order: int = 1, n_samples: int = DEFAULT_N_SAMPLES,
              kdv_dt: Optional[float] = None,
              bound_factor: float = DEFAULT_BOUND_FACTOR,
              grad_max: float = GRAD_MAX_DEFAULT) -> ConvergenceReport:
    """Run the approximation-vs-full experiment over a list of epsilons.

    Each epsilon runs independently (optionally in parallel, QKDV_THREADS);
    solver failures are recorded per epsilon and excluded from the fit, which
    needs at least three surviving points.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ConfigurationError("epsilon list must be nonempty")
    for e in eps_list:
        if not 0.0 < e <= 0.25:
            raise ConfigurationError(f"epsilon must lie in (0, 0.25], got {e}")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("epsilons must be strictly descending")
    if not tau > 0:
        raise ConfigurationError(f"horizon must be positive, got {tau}")
    if order not in (1, 2):
        raise ConfigurationError(f"order must be 1 or 2, got {order}")

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda e: _run_one_epsilon(e, tau, n1_0, H, order, n_samples,
                                           kdv_dt, bound_factor, grad_max),
                eps_list))
    else:
        records = [_run_one_epsilon(e, tau, n1_0, H, order, n_samples,
                                    kdv_dt, bound_factor, grad_max)
                   for e in eps_list]

    sup_errors = tuple(r.sup_error for r in records)
    config = {
        "L": n1_0.grid.L, "N": n1_0.grid.N, "H": H, "order": order,
        "tau": tau, "epsilons": eps_list, "n_samples": n_samples,
        "bound_factor": bound_factor, "grad_max": grad_max,
    }
    report = ConvergenceReport(
        epsilons=tuple(eps_list), sup_errors=sup_errors, fitted_slope=None,
        fit_residual=None, order=order, tau=tau, H=H,
        records=tuple(records), config=config)
    surviving = report.surviving
    if len(surviving) >= 3 and all(s > 0.0 for _, s in surviving):
        slope, residual = fit_order(report)
        report = ConvergenceReport(
            epsilons=report.epsilons, sup_errors=report.sup_errors,
            fitted_slope=slope, fit_residual=residual, order=order,
            tau=tau, H=H, records=report.records, config=config)
    return report


def fit_order(report: ConvergenceReport) -> tuple[float, float]:
    """Least-squares slope of log(sup_error) vs log(epsilon).

    The residual is the maximum absolute deviation of the fit in log space.
    """
    pts = report.surviving
    if len(pts) < 3:
        raise FitFailureError(
            f"need at least 3 surviving epsilon points, have {len(pts)}")
    if any(s <= 0.0 for _, s in pts):
        raise FitFailureError("sup_errors must be positive for a log-log fit")
    xs = np.log([e for e, _ in pts])
    ys = np.log([s for _, s in pts])
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.max(np.abs(ys - (slope * xs + intercept))))
    if not np.isfinite(slope):
        raise FitFailureError("fitted slope is not finite")
    return float(slope), residual
