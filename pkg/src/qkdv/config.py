"""Run configuration: flat-section key-value files with strict validation.

Format: INI-style sections, ``key = value`` pairs, ``#`` comments.  Unknown
sections or keys are errors; every value is range-checked before any compute
starts, and referenced files must exist at parse time.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigurationError, IOFailureError

VALID_PROFILES = ("zero", "cosine", "soliton", "csv")
VALID_FRAMES = ("lab", "scaled")
VALID_COMMANDS = ("solve-ep", "solve-kdv", "correctors", "sweep",
                  "dispersion", "norms")


@dataclass
class RunConfig:
    """Fully validated configuration for one command invocation."""

    # [grid]
    L: float = 32.0
    N: int = 256
    # [model]
    H: float = 1.0
    frame: str = "scaled"
    epsilon: Optional[float] = None
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.025)
    # [initial]
    profile: str = "cosine"
    amplitude: float = 0.2
    mode: int = 1
    c: float = 1.0
    x0: Optional[float] = None
    path: Optional[str] = None
    # [run]
    tau: float = 1.0
    n_samples: int = 50
    order: int = 1
    dt: Optional[float] = None
    cfl: float = 0.5
    grad_max: float = 1e3
    bound_factor: float = 100.0
    # [dispersion]
    k_mode: int = 1
    probe_amplitude: float = 1e-6
    probe_time: float = 60.0
    # [norms]
    n_i_path: Optional[str] = None
    n_e_path: Optional[str] = None
    u_path: Optional[str] = None
    # [output]
    out_dir: str = "."


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"key '{key}': expected a number, got {raw!r}")


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"key '{key}': expected an integer, got {raw!r}")


def _parse_float_list(raw: str, key: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigurationError(f"key '{key}': expected a comma-separated list")
    return tuple(_parse_float(p, key) for p in parts)


def _require_range(ok: bool, key: str, message: str):
    if not ok:
        raise ConfigurationError(f"key '{key}': {message}")


# section -> key -> setter(cfg, raw_value, base_dir)
def _set_L(cfg, raw, _):
    cfg.L = _parse_float(raw, "L")
    _require_range(cfg.L > 0, "L", f"L must be positive, got {cfg.L}")


def _set_N(cfg, raw, _):
    cfg.N = _parse_int(raw, "N")
    _require_range(cfg.N % 2 == 0, "N", "N must be even")
    _require_range(cfg.N >= 8, "N", f"N must be >= 8, got {cfg.N}")


def _set_H(cfg, raw, _):
    cfg.H = _parse_float(raw, "H")
    _require_range(cfg.H >= 0, "H", f"H must be nonnegative, got {cfg.H}")


def _set_frame(cfg, raw, _):
    _require_range(raw in VALID_FRAMES, "frame",
                   f"frame must be one of {VALID_FRAMES}, got {raw!r}")
    cfg.frame = raw


def _set_epsilon(cfg, raw, _):
    cfg.epsilon = _parse_float(raw, "epsilon")
    _require_range(0 < cfg.epsilon < 1, "epsilon",
                   f"epsilon must lie in (0, 1), got {cfg.epsilon}")


def _set_epsilons(cfg, raw, _):
    eps = _parse_float_list(raw, "epsilons")
    for e in eps:
        _require_range(0 < e <= 0.25, "epsilons",
                       f"each epsilon must lie in (0, 0.25], got {e}")
    _require_range(all(b < a for a, b in zip(eps, eps[1:])), "epsilons",
                   "epsilons must be strictly descending")
    cfg.epsilons = eps


def _set_profile(cfg, raw, _):
    _require_range(raw in VALID_PROFILES, "profile",
                   f"profile must be one of {VALID_PROFILES}, got {raw!r}")
    cfg.profile = raw


def _set_amplitude(cfg, raw, _):
    cfg.amplitude = _parse_float(raw, "amplitude")


def _set_mode(cfg, raw, _):
    cfg.mode = _parse_int(raw, "mode")
    _require_range(cfg.mode >= 1, "mode", f"mode must be >= 1, got {cfg.mode}")


def _set_c(cfg, raw, _):
    cfg.c = _parse_float(raw, "c")
    _require_range(cfg.c > 0, "c", f"soliton speed must be positive, got {cfg.c}")


def _set_x0(cfg, raw, _):
    cfg.x0 = _parse_float(raw, "x0")


def _existing_path(raw: str, key: str, base_dir: str) -> str:
    path = raw if os.path.isabs(raw) else os.path.join(base_dir, raw)
    if not os.path.isfile(path):
        raise ConfigurationError(f"key '{key}': file does not exist: {path}")
    return path


def _set_path(cfg, raw, base):
    cfg.path = _existing_path(raw, "path", base)


def _set_tau(cfg, raw, _):
    cfg.tau = _parse_float(raw, "tau")
    _require_range(cfg.tau > 0, "tau", f"tau must be positive, got {cfg.tau}")


def _set_n_samples(cfg, raw, _):
    cfg.n_samples = _parse_int(raw, "n_samples")
    _require_range(cfg.n_samples >= 1, "n_samples",
                   f"n_samples must be >= 1, got {cfg.n_samples}")


def _set_order(cfg, raw, _):
    cfg.order = _parse_int(raw, "order")
    _require_range(cfg.order in (1, 2), "order",
                   f"order must be 1 or 2, got {cfg.order}")


def _set_dt(cfg, raw, _):
    cfg.dt = _parse_float(raw, "dt")
    _require_range(cfg.dt > 0, "dt", f"dt must be positive, got {cfg.dt}")


def _set_cfl(cfg, raw, _):
    cfg.cfl = _parse_float(raw, "cfl")
    _require_range(0 < cfg.cfl <= 1, "cfl",
                   f"cfl must lie in (0, 1], got {cfg.cfl}")


def _set_grad_max(cfg, raw, _):
    cfg.grad_max = _parse_float(raw, "grad_max")
    _require_range(cfg.grad_max > 0, "grad_max",
                   f"grad_max must be positive, got {cfg.grad_max}")


def _set_bound_factor(cfg, raw, _):
    cfg.bound_factor = _parse_float(raw, "bound_factor")
    _require_range(cfg.bound_factor > 0, "bound_factor",
                   f"bound_factor must be positive, got {cfg.bound_factor}")


def _set_k_mode(cfg, raw, _):
    cfg.k_mode = _parse_int(raw, "k_mode")
    _require_range(cfg.k_mode >= 1, "k_mode",
                   f"k_mode must be >= 1, got {cfg.k_mode}")


def _set_probe_amplitude(cfg, raw, _):
    cfg.probe_amplitude = _parse_float(raw, "probe_amplitude")
    _require_range(cfg.probe_amplitude > 0, "probe_amplitude",
                   "probe_amplitude must be positive")


def _set_probe_time(cfg, raw, _):
    cfg.probe_time = _parse_float(raw, "probe_time")
    _require_range(cfg.probe_time > 0, "probe_time",
                   "probe_time must be positive")


def _set_n_i_path(cfg, raw, base):
    cfg.n_i_path = _existing_path(raw, "n_i_path", base)


def _set_n_e_path(cfg, raw, base):
    cfg.n_e_path = _existing_path(raw, "n_e_path", base)


def _set_u_path(cfg, raw, base):
    cfg.u_path = _existing_path(raw, "u_path", base)


def _set_out_dir(cfg, raw, _):
    cfg.out_dir = raw


_SCHEMA = {
    "grid": {"L": _set_L, "N": _set_N},
    "model": {"H": _set_H, "frame": _set_frame, "epsilon": _set_epsilon,
              "epsilons": _set_epsilons},
    "initial": {"profile": _set_profile, "amplitude": _set_amplitude,
                "mode": _set_mode, "c": _set_c, "x0": _set_x0,
                "path": _set_path},
    "run": {"tau": _set_tau, "n_samples": _set_n_samples, "order": _set_order,
            "dt": _set_dt, "cfl": _set_cfl, "grad_max": _set_grad_max,
            "bound_factor": _set_bound_factor},
    "dispersion": {"k_mode": _set_k_mode, "probe_amplitude": _set_probe_amplitude,
                   "probe_time": _set_probe_time},
    "norms": {"n_i_path": _set_n_i_path, "n_e_path": _set_n_e_path,
              "u_path": _set_u_path},
    "output": {"dir": _set_out_dir},
}


def parse_config(path: str) -> RunConfig:
    """Parse and validate a configuration file.

    Raises ConfigurationError with a line number on syntax errors and with
    the offending key name on unknown keys or out-of-range values.
    """
    if not os.path.isfile(path):
        raise IOFailureError(f"config file does not exist: {path}")
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#",), interpolation=None, strict=True)
    parser.optionxform = str  # keys are case-sensitive (L vs l)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except configparser.ParsingError as exc:
        lines = ", ".join(str(lineno) for lineno, _ in exc.errors)
        raise ConfigurationError(f"parse error in {path} at line(s) {lines}")
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"parse error in {path}: {exc}")

    cfg = RunConfig()
    base_dir = os.path.dirname(os.path.abspath(path))
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(
                f"unknown section [{section}]; valid sections: "
                f"{sorted(_SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(
                    f"unknown key '{key}' in section [{section}]; valid keys: "
                    f"{sorted(_SCHEMA[section])}")
            _SCHEMA[section][key](cfg, raw.strip(), base_dir)
    if cfg.profile == "csv" and cfg.path is None:
        raise ConfigurationError(
            "key 'path': profile 'csv' requires an initial-data file path")
    return cfg
