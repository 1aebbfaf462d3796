"""Command-line client.

Thin wrapper over the HTTP service: every subcommand serializes its parsed
configuration, posts it to one endpoint, and writes the response artifacts.
With no --url the service runs in-process, so no daemon is needed.
"""

from __future__ import annotations

import json
import os
import sys
from typing import Optional

import click

from .config import RunConfig, parse_config
from .errors import IOFailureError, QkdvError
from . import io as qio

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_CLOSURE = 3
EXIT_GUARD = 4
EXIT_FIT = 5
EXIT_IO = 6

_KIND_TO_EXIT = {
    "ConfigurationError": EXIT_CONFIG,
    "GridMismatchError": EXIT_CONFIG,
    "NonIntegrableSourceError": EXIT_OTHER,
    "ClosureFailureError": EXIT_CLOSURE,
    "VacuumError": EXIT_CLOSURE,
    "GuardTripError": EXIT_GUARD,
    "TimeAlignmentError": EXIT_OTHER,
    "FitFailureError": EXIT_FIT,
    "IOFailureError": EXIT_IO,
}


def _fail(kind: str, message: str, detail: Optional[dict] = None,
          out_dir: Optional[str] = None):
    record = {"kind": kind, "message": message, "detail": detail or {}}
    click.echo(json.dumps(record, sort_keys=True), err=True)
    if out_dir:
        try:
            qio._atomic_write_text(
                os.path.join(out_dir, "error.json"),
                json.dumps(record, indent=1, sort_keys=True) + "\n")
        except IOFailureError:
            pass
    sys.exit(_KIND_TO_EXIT.get(kind, EXIT_OTHER))


def _load_config(path: str, out_override: Optional[str],
                 epsilon_override: Optional[float]) -> RunConfig:
    try:
        cfg = parse_config(path)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc))
    if out_override is not None:
        cfg.out_dir = out_override
    if epsilon_override is not None:
        if not 0.0 < epsilon_override < 1.0:
            _fail("ConfigurationError",
                  f"--epsilon must lie in (0, 1), got {epsilon_override}")
        cfg.epsilon = epsilon_override
        cfg.epsilons = (epsilon_override,)
    return cfg


def _payload(cfg: RunConfig) -> dict:
    payload = {
        "L": cfg.L, "N": cfg.N, "H": cfg.H, "frame": cfg.frame,
        "epsilons": list(cfg.epsilons), "profile": cfg.profile,
        "amplitude": cfg.amplitude, "mode": cfg.mode, "c": cfg.c,
        "tau": cfg.tau, "n_samples": cfg.n_samples, "order": cfg.order,
        "cfl": cfg.cfl, "grad_max": cfg.grad_max,
        "bound_factor": cfg.bound_factor, "k_mode": cfg.k_mode,
        "probe_amplitude": cfg.probe_amplitude, "probe_time": cfg.probe_time,
    }
    if cfg.epsilon is not None:
        payload["epsilon"] = cfg.epsilon
    if cfg.x0 is not None:
        payload["x0"] = cfg.x0
    if cfg.dt is not None:
        payload["dt"] = cfg.dt
    if cfg.profile == "csv":
        field = qio.read_field_csv(cfg.path)
        payload["L"] = field.grid.L
        payload["N"] = field.grid.N
        payload["samples"] = [float(v) for v in field.samples]
    return payload


def _client(url: Optional[str]):
    if url:
        import httpx
        return httpx.Client(base_url=url, timeout=3600.0)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    from .service import app
    return TestClient(app)


def _post(url: Optional[str], endpoint: str, payload: dict,
          out_dir: Optional[str]) -> dict:
    try:
        with _client(url) as client:
            resp = client.post(endpoint, json=payload)
    except Exception as exc:  # connection-level failure
        _fail("IOFailureError", f"cannot reach service: {exc}", out_dir=out_dir)
    if resp.status_code != 200:
        try:
            record = resp.json()
        except ValueError:
            record = {}
        _fail(record.get("kind", "ServiceError"),
              record.get("message", resp.text),
              record.get("detail"), out_dir=out_dir)
    return resp.json()


def _out_path(cfg: RunConfig, name: str) -> str:
    return os.path.join(cfg.out_dir, name)


def _echo(quiet: bool, message: str):
    if not quiet:
        click.echo(message)


def _common_options(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="configuration file")(fn)
    fn = click.option("--out", "out_dir", default=None,
                      type=click.Path(file_okay=False),
                      help="output directory (overrides config)")(fn)
    fn = click.option("--epsilon", type=float, default=None,
                      help="override the scaling parameter")(fn)
    fn = click.option("--quiet", is_flag=True, default=False,
                      help="suppress the summary line")(fn)
    fn = click.option("--url", default=None,
                      help="service URL (default: run in-process)")(fn)
    return fn


@click.group()
def main():
    """Laboratory for the quantum ion-acoustic long-wave limit."""


@main.command("solve-ep")
@_common_options
def solve_ep_cmd(config_path, out_dir, epsilon, quiet, url):
    """Integrate the two-fluid model and write t,x,n_i,u_i,n_e,phi."""
    cfg = _load_config(config_path, out_dir, epsilon)
    data = _post(url, "/solve-ep", _payload(cfg), cfg.out_dir)
    path = _out_path(cfg, "traj_ep.csv")
    try:
        qio.write_ep_payload_csv(path, data)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    _echo(quiet, f"solve-ep: {len(data['times'])} samples to t="
                 f"{data['times'][-1]:g} ({data['frame']} frame), "
                 f"max Newton iterations {data['newton_iters_max']} "
                 f"-> {path}")


@main.command("solve-kdv")
@_common_options
def solve_kdv_cmd(config_path, out_dir, epsilon, quiet, url):
    """Integrate the long-wave equation and write t,x,n."""
    cfg = _load_config(config_path, out_dir, epsilon)
    data = _post(url, "/solve-kdv", _payload(cfg), cfg.out_dir)
    path = _out_path(cfg, "traj_kdv.csv")
    try:
        qio.write_kdv_payload_csv(path, data)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    i2 = data["i2"]
    drift = abs(i2[-1] - i2[0]) / max(abs(i2[0]), 1e-300)
    _echo(quiet, f"solve-kdv: {len(data['times'])} samples to t="
                 f"{data['times'][-1]:g}, quadratic-invariant drift "
                 f"{drift:.3e} -> {path}")


@main.command("correctors")
@_common_options
def correctors_cmd(config_path, out_dir, epsilon, quiet, url):
    """Evolve the corrector hierarchy and write a JSON bundle keyed by time."""
    cfg = _load_config(config_path, out_dir, epsilon)
    data = _post(url, "/correctors", _payload(cfg), cfg.out_dir)
    path = _out_path(cfg, "correctors.json")
    try:
        qio.write_corrector_payload_json(path, data)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    _echo(quiet, f"correctors: order {data['order']}, "
                 f"{len(data['times'])} snapshots -> {path}")


@main.command("sweep")
@_common_options
def sweep_cmd(config_path, out_dir, epsilon, quiet, url):
    """Run the convergence experiment; write report.json, errors.csv,
    plot.gp, and one traj_eps*.csv time series per completed run."""
    cfg = _load_config(config_path, out_dir, epsilon)
    data = _post(url, "/sweep", _payload(cfg), cfg.out_dir)
    try:
        qio.write_json(_out_path(cfg, "report.json"), data)
        qio.write_errors_payload_csv(_out_path(cfg, "errors.csv"), data)
        qio.write_plot_script(_out_path(cfg, "plot.gp"), "errors.csv",
                              data["fitted_slope"])
        for rec in data["per_epsilon"]:
            if rec.get("trace") is not None:
                qio.write_trace_payload_csv(
                    _out_path(cfg, f"traj_eps{rec['epsilon']:g}.csv"),
                    rec["trace"])
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    ok = sum(1 for r in data["per_epsilon"] if r["ok"])
    slope = data["fitted_slope"]
    slope_txt = f"{slope:.3f}" if slope is not None else "n/a"
    resid = data["fit_residual"]
    resid_txt = f"{resid:.3e}" if resid is not None else "n/a"
    _echo(quiet, f"sweep: order {data['order']}, {ok}/{len(data['per_epsilon'])} "
                 f"runs ok, fitted slope = {slope_txt} "
                 f"(log residual {resid_txt}) -> {cfg.out_dir}")


@main.command("dispersion")
@_common_options
def dispersion_cmd(config_path, out_dir, epsilon, quiet, url):
    """Measure the linear oscillation frequency of one Fourier mode."""
    cfg = _load_config(config_path, out_dir, epsilon)
    data = _post(url, "/dispersion", _payload(cfg), cfg.out_dir)
    try:
        qio.write_json(_out_path(cfg, "dispersion.json"), data)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    _echo(quiet, f"dispersion: H={data['H']:g} k={data['k_mode']} "
                 f"omega = {data['omega_measured']:.4f} "
                 f"(predicted {data['omega_predicted']:.4f}, relative error "
                 f"{data['relative_error']:.2e})")


@main.command("norms")
@_common_options
def norms_cmd(config_path, out_dir, epsilon, quiet, url):
    """Evaluate H2 and weighted-energy norms of stored fields."""
    cfg = _load_config(config_path, out_dir, epsilon)
    payload = _payload(cfg)
    grid = None
    try:
        for key, path in (("n_i", cfg.n_i_path), ("n_e", cfg.n_e_path),
                          ("u", cfg.u_path)):
            if path is not None:
                field = qio.read_field_csv(path)
                payload[key] = [float(v) for v in field.samples]
                grid = field.grid
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    if grid is not None:
        payload["L"] = grid.L
        payload["N"] = grid.N
    data = _post(url, "/norms", payload, cfg.out_dir)
    try:
        qio.write_json(_out_path(cfg, "norms.json"), data)
    except QkdvError as exc:
        _fail(type(exc).__name__, str(exc), out_dir=cfg.out_dir)
    summary = (f"norms: H2(n_i)={data['h2']['n_i']:.6g} "
               f"H2(n_e)={data['h2']['n_e']:.6g} H2(u)={data['h2']['u']:.6g}")
    if "triple" in data:
        summary += f" triple={data['triple']['total']:.6g}"
    _echo(quiet, summary)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve_cmd(host, port):
    """Run the HTTP service."""
    import uvicorn
    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
