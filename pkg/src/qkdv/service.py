"""HTTP service exposing the laboratory's operations.

Each endpoint fronts one top-level operation; requests carry a flat
configuration payload (same keys as the config-file format) and responses
carry plain JSON arrays.  Domain failures map to HTTP 400/422 with a
machine-readable error record {kind, message, detail}.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field as PydField

from . import __version__
from .convergence import run_sweep
from .errors import ConfigurationError, GuardTripError, QkdvError
from .grid import Field, make_grid, sobolev_norm, triple_norm
from .kdv import (
    CorrectorSet,
    KdVState,
    dispersion_coefficient,
    hierarchy_source,
    kdv_invariants,
    prepare_initial_data,
    soliton_profile,
    solve_kdv,
    solve_linearized_kdv,
)
from .io import report_to_dict
from .qep import (
    EPState,
    LAB,
    dispersion_oracle,
    measure_dispersion,
    scaled_frame,
    solve_ep,
)


class ConfigPayload(BaseModel):
    """Flat request configuration; mirrors the config-file keys."""

    model_config = {"extra": "forbid"}

    # grid
    L: float = 32.0
    N: int = 256
    # model
    H: float = 1.0
    frame: str = "scaled"
    epsilon: Optional[float] = None
    epsilons: list[float] = PydField(default=[0.1, 0.05, 0.025])
    # initial data
    profile: str = "cosine"
    amplitude: float = 0.2
    mode: int = 1
    c: float = 1.0
    x0: Optional[float] = None
    samples: Optional[list[float]] = None  # inline initial data (profile "csv")
    # run
    tau: float = 1.0
    n_samples: int = 50
    order: int = 1
    dt: Optional[float] = None
    cfl: float = 0.5
    grad_max: float = 1e3
    bound_factor: float = 100.0
    # dispersion probe
    k_mode: int = 1
    probe_amplitude: float = 1e-6
    probe_time: float = 60.0
    # norms input (inline fields; missing slots are zero)
    n_i: Optional[list[float]] = None
    n_e: Optional[list[float]] = None
    u: Optional[list[float]] = None


def _initial_field(cfg: ConfigPayload) -> Field:
    grid = make_grid(cfg.L, cfg.N)
    if cfg.profile == "zero":
        return Field.zeros(grid)
    if cfg.profile == "cosine":
        return Field(grid, cfg.amplitude * np.cos(
            2.0 * math.pi * cfg.mode * grid.x / cfg.L))
    if cfg.profile == "soliton":
        x0 = cfg.x0 if cfg.x0 is not None else cfg.L / 2.0
        field, _ = soliton_profile(cfg.c, cfg.H, x0, grid)
        return field
    if cfg.profile == "csv":
        if cfg.samples is None:
            raise ConfigurationError(
                "profile 'csv' requires inline 'samples' in the request")
        return Field(grid, np.asarray(cfg.samples, dtype=float))
    raise ConfigurationError(f"unknown profile {cfg.profile!r}")


def _field_list(f: Field) -> list[float]:
    return [float(v) for v in f.samples]


app = FastAPI(title="qkdv", version=__version__)


@app.exception_handler(QkdvError)
async def _domain_error_handler(request: Request, exc: QkdvError):
    detail = {}
    if isinstance(exc, GuardTripError):
        detail = {"time": exc.time, "shock_time_estimate": exc.shock_time_estimate}
    status = 422 if isinstance(exc, ConfigurationError) else 400
    return JSONResponse(status_code=status, content={
        "kind": type(exc).__name__, "message": str(exc), "detail": detail})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/solve-ep")
def solve_ep_endpoint(cfg: ConfigPayload):
    grid = make_grid(cfg.L, cfg.N)
    perturbation = _initial_field(cfg)
    if cfg.frame == "scaled":
        if cfg.epsilon is None:
            raise ConfigurationError("scaled frame requires 'epsilon'")
        frame = scaled_frame(cfg.epsilon)
        state0 = prepare_initial_data(perturbation, None, cfg.epsilon,
                                      cfg.order, cfg.H)
    elif cfg.frame == "lab":
        frame = LAB
        state0 = EPState(0.0, Field(grid, 1.0 + perturbation.samples),
                         Field.zeros(grid))
    else:
        raise ConfigurationError(f"frame must be 'lab' or 'scaled', got {cfg.frame!r}")
    traj = solve_ep(state0, cfg.H, frame, cfg.tau, cfl=cfg.cfl,
                    n_samples=cfg.n_samples)
    return {
        "frame": frame.tag, "H": cfg.H, "dt": traj.dt,
        "x": [float(v) for v in grid.x],
        "times": [float(t) for t in traj.times],
        "n_i": [_field_list(s.n_i) for s in traj.states],
        "u_i": [_field_list(s.u_i) for s in traj.states],
        "n_e": [_field_list(c.n_e) for c in traj.closures],
        "phi": [_field_list(c.phi) for c in traj.closures],
        "newton_iters_max": max(c.newton_iters for c in traj.closures),
    }


@app.post("/solve-kdv")
def solve_kdv_endpoint(cfg: ConfigPayload):
    n0 = _initial_field(cfg)
    traj = solve_kdv(KdVState(0.0, n0), cfg.H, cfg.tau, dt=cfg.dt,
                     n_samples=cfg.n_samples, grad_max=cfg.grad_max)
    inv = [kdv_invariants(f) for f in traj.fields]
    return {
        "H": cfg.H, "delta": dispersion_coefficient(cfg.H), "dt": traj.dt,
        "x": [float(v) for v in n0.grid.x],
        "times": [float(t) for t in traj.times],
        "n": [_field_list(f) for f in traj.fields],
        "i1": [i[0] for i in inv],
        "i2": [i[1] for i in inv],
    }


@app.post("/correctors")
def correctors_endpoint(cfg: ConfigPayload):
    n1_0 = _initial_field(cfg)
    grid = n1_0.grid
    result = {
        "H": cfg.H, "order": cfg.order,
        "x": [float(v) for v in grid.x],
    }
    if cfg.order == 1:
        traj = solve_kdv(KdVState(0.0, n1_0), cfg.H, cfg.tau, dt=cfg.dt,
                         n_samples=cfg.n_samples, grad_max=cfg.grad_max)
        sets = [CorrectorSet.first_order(t, f)
                for t, f in zip(traj.times, traj.fields)]
    else:
        traj2, traj1 = solve_linearized_kdv(
            KdVState(0.0, Field.zeros(grid)), n1_0, hierarchy_source(cfg.H),
            cfg.H, cfg.tau, dt=cfg.dt, n_samples=cfg.n_samples,
            grad_max=cfg.grad_max)
        sets = [CorrectorSet.second_order(t, f1, f2, cfg.H)
                for t, f1, f2 in zip(traj1.times, traj1.fields, traj2.fields)]
    result["times"] = [float(cs.t) for cs in sets]
    result["n1"] = [_field_list(cs.n1) for cs in sets]
    if cfg.order >= 2:
        result["n2"] = [_field_list(cs.n2) for cs in sets]
        result["ne2"] = [_field_list(cs.ne2) for cs in sets]
        result["u2"] = [_field_list(cs.u2) for cs in sets]
        result["g1"] = [_field_list(cs.g1) for cs in sets]
    return result


@app.post("/sweep")
def sweep_endpoint(cfg: ConfigPayload):
    n1_0 = _initial_field(cfg)
    report = run_sweep(cfg.epsilons, cfg.tau, n1_0, cfg.H, order=cfg.order,
                       n_samples=cfg.n_samples, kdv_dt=cfg.dt,
                       bound_factor=cfg.bound_factor, grad_max=cfg.grad_max)
    return report_to_dict(report)


@app.post("/dispersion")
def dispersion_endpoint(cfg: ConfigPayload):
    omega = measure_dispersion(cfg.k_mode, cfg.H,
                               amplitude=cfg.probe_amplitude,
                               T=cfg.probe_time)
    predicted = dispersion_oracle(float(cfg.k_mode), cfg.H)
    return {
        "k_mode": cfg.k_mode, "H": cfg.H,
        "omega_measured": omega, "omega_predicted": predicted,
        "relative_error": abs(omega - predicted) / predicted,
    }


@app.post("/norms")
def norms_endpoint(cfg: ConfigPayload):
    grid = make_grid(cfg.L, cfg.N)

    def load(slot: Optional[list[float]]) -> Field:
        if slot is None:
            return Field.zeros(grid)
        return Field(grid, np.asarray(slot, dtype=float))

    f_ni, f_ne, f_u = load(cfg.n_i), load(cfg.n_e), load(cfg.u)
    result = {
        "h2": {"n_i": sobolev_norm(f_ni, 2), "n_e": sobolev_norm(f_ne, 2),
               "u": sobolev_norm(f_u, 2)},
    }
    if cfg.epsilon is not None:
        tn = triple_norm(f_ni, f_ne, f_u, cfg.epsilon)
        result["triple"] = {
            "epsilon": tn.eps, "total": tn.total, "total_sq": tn.total_sq,
            "total_ne_u": tn.total_ne_u, "h2_sq": tn.h2_sq,
            "eps_d3_sq": tn.eps_d3_sq, "eps2_d4_sq": tn.eps2_d4_sq,
            "eps3_d5_sq": tn.eps3_d5_sq, "eps4_d6_sq": tn.eps4_d6_sq,
        }
    return result
