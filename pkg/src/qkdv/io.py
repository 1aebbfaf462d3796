"""Artifact I/O: CSV trajectories, JSON reports, and plot scripts.

All writers are atomic (write to a temporary file in the target directory,
then rename) and byte-deterministic: fixed column order, fixed float
formatting with 17 significant digits (round-trip exact for doubles), and
newline '\\n' regardless of platform.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Optional

import numpy as np

from .convergence import ConvergenceReport
from .errors import IOFailureError
from .grid import Field, make_grid
from .kdv import CorrectorSet, KdVTrajectory
from .qep import EPTrajectory


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qkdv-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IOFailureError(f"cannot write {path}: {exc}")


def write_field_csv(path: str, field: Field):
    """Single field as `x,value` rows."""
    lines = ["x,value"]
    for x, v in zip(field.grid.x, field.samples):
        lines.append(f"{_fmt(x)},{_fmt(v)}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_field_csv(path: str) -> Field:
    """Read a field written by write_field_csv; the grid is inferred.

    Requires uniformly spaced samples starting at x = 0; the period is
    N * dx.
    """
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise IOFailureError(f"cannot read field CSV {path}: {exc}")
    if data.shape[1] != 2 or data.shape[0] < 8:
        raise IOFailureError(
            f"field CSV {path} must have two columns and at least 8 rows")
    x, v = data[:, 0], data[:, 1]
    dx = x[1] - x[0]
    if abs(x[0]) > 1e-12 * max(dx, 1.0) or np.max(np.abs(np.diff(x) - dx)) > 1e-9 * dx:
        raise IOFailureError(
            f"field CSV {path} must sample a uniform grid starting at x=0")
    grid = make_grid(len(x) * dx, len(x))
    return Field(grid, v)


def write_ep_csv(path: str, traj: EPTrajectory):
    """Two-fluid trajectory as `t,x,n_i,u_i,n_e,phi` rows."""
    lines = ["t,x,n_i,u_i,n_e,phi"]
    for state, closure in zip(traj.states, traj.closures):
        xs = state.n_i.grid.x
        for j in range(len(xs)):
            lines.append(",".join((
                _fmt(state.t), _fmt(xs[j]), _fmt(state.n_i.samples[j]),
                _fmt(state.u_i.samples[j]), _fmt(closure.n_e.samples[j]),
                _fmt(closure.phi.samples[j]))))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_kdv_csv(path: str, traj: KdVTrajectory):
    """Long-wave trajectory as `t,x,n` rows."""
    lines = ["t,x,n"]
    for t, f in zip(traj.times, traj.fields):
        xs = f.grid.x
        for j in range(len(xs)):
            lines.append(f"{_fmt(t)},{_fmt(xs[j])},{_fmt(f.samples[j])}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_corrector_json(path: str, correctors: Iterable[CorrectorSet]):
    """Corrector bundles keyed by time."""
    bundle = {}
    for cs in correctors:
        entry = {"order": cs.order, "n1": [float(v) for v in cs.n1.samples]}
        if cs.order >= 2:
            entry["n2"] = [float(v) for v in cs.n2.samples]
            entry["ne2"] = [float(v) for v in cs.ne2.samples]
            entry["u2"] = [float(v) for v in cs.u2.samples]
            entry["g1"] = [float(v) for v in cs.g1.samples]
        bundle[_fmt(cs.t)] = entry
    _atomic_write_text(path, json.dumps(bundle, indent=1, sort_keys=True) + "\n")


def write_json(path: str, obj):
    _atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=True) + "\n")


def write_ep_payload_csv(path: str, payload: dict):
    """Two-fluid trajectory from a service response, same schema as write_ep_csv."""
    lines = ["t,x,n_i,u_i,n_e,phi"]
    xs = payload["x"]
    for i, t in enumerate(payload["times"]):
        for j in range(len(xs)):
            lines.append(",".join((
                _fmt(t), _fmt(xs[j]), _fmt(payload["n_i"][i][j]),
                _fmt(payload["u_i"][i][j]), _fmt(payload["n_e"][i][j]),
                _fmt(payload["phi"][i][j]))))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_kdv_payload_csv(path: str, payload: dict):
    """Long-wave trajectory from a service response, same schema as write_kdv_csv."""
    lines = ["t,x,n"]
    xs = payload["x"]
    for i, t in enumerate(payload["times"]):
        for j in range(len(xs)):
            lines.append(f"{_fmt(t)},{_fmt(xs[j])},{_fmt(payload['n'][i][j])}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_corrector_payload_json(path: str, payload: dict):
    """Corrector bundle keyed by time, from a service response."""
    bundle = {}
    for i, t in enumerate(payload["times"]):
        entry = {"order": payload["order"], "n1": payload["n1"][i]}
        if payload["order"] >= 2:
            for key in ("n2", "ne2", "u2", "g1"):
                entry[key] = payload[key][i]
        bundle[_fmt(t)] = entry
    _atomic_write_text(path, json.dumps(bundle, indent=1, sort_keys=True) + "\n")


def write_errors_payload_csv(path: str, payload: dict):
    """`epsilon,sup_h2_error` rows from a report dict, surviving runs only."""
    lines = ["epsilon,sup_h2_error"]
    for eps, sup in zip(payload["epsilons"], payload["sup_errors"]):
        if sup is not None:
            lines.append(f"{_fmt(eps)},{_fmt(sup)}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def report_to_dict(report: ConvergenceReport) -> dict:
    per_eps = []
    for r in report.records:
        trace = None
        if r.trace is not None:
            trace = {
                "times": [float(t) for t in r.trace.times],
                "h2_errors": [float(v) for v in r.trace.h2_norms],
                "triple_norms": (None if r.trace.triple_norms is None else
                                 [float(tn.total) for tn in r.trace.triple_norms]),
            }
        per_eps.append({
            "epsilon": r.eps,
            "ok": r.ok,
            "sup_h2_error": r.sup_error,
            "lab_horizon": r.lab_horizon,
            "error_kind": r.error_kind,
            "error_message": r.error_message,
            "norm_bounded": r.norm_bounded,
            "norm_max_ratio": r.norm_max_ratio,
            "trace": trace,
        })
    return {
        "epsilons": list(report.epsilons),
        "sup_errors": list(report.sup_errors),
        "fitted_slope": report.fitted_slope,
        "fit_residual": report.fit_residual,
        "order": report.order,
        "tau": report.tau,
        "H": report.H,
        "per_epsilon": per_eps,
        "config": report.config,
    }


def write_report_json(path: str, report: ConvergenceReport):
    _atomic_write_text(
        path, json.dumps(report_to_dict(report), indent=1, sort_keys=True) + "\n")


def write_trace_payload_csv(path: str, trace: dict):
    """Per-run time series `t,h2_error[,triple_norm]` from a report entry."""
    with_triple = trace["triple_norms"] is not None
    lines = ["t,h2_error,triple_norm" if with_triple else "t,h2_error"]
    for i, t in enumerate(trace["times"]):
        row = [_fmt(t), _fmt(trace["h2_errors"][i])]
        if with_triple:
            row.append(_fmt(trace["triple_norms"][i]))
        lines.append(",".join(row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_errors_csv(path: str, report: ConvergenceReport):
    """Two-column summary `epsilon,sup_h2_error`, surviving runs only."""
    lines = ["epsilon,sup_h2_error"]
    for eps, sup in report.surviving:
        lines.append(f"{_fmt(eps)},{_fmt(sup)}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_plot_script(path: str, errors_csv: str, slope: Optional[float]):
    """gnuplot script for the log-log error figure next to errors.csv."""
    title = "sup-in-time H2 discrepancy vs epsilon"
    if slope is not None:
        title += f" (fitted slope {slope:.3f})"
    text = "\n".join([
        "set terminal pngcairo size 800,600",
        "set output 'convergence.png'",
        "set logscale xy",
        "set xlabel 'epsilon'",
        "set ylabel 'sup H2 error'",
        f"set title '{title}'",
        "set datafile separator ','",
        "set key left top",
        f"plot '{errors_csv}' skip 1 using 1:2 with linespoints "
        "pointtype 7 title 'measured'",
        "",
    ])
    _atomic_write_text(path, text)
