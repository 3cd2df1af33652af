"""``jchd`` command line: flat ``section.key = value`` configs in, CSV/JSON out."""
from __future__ import annotations

import argparse
import ast
import dataclasses
import enum
import io
import json
import math
import re
import sys
from dataclasses import dataclass
from typing import Any, Iterable, TextIO

import numpy as np

from .meanfield import EigensolverError, SolverOptions, build_basis
from .model import ModelParams, dressed_levels, quality_check
from .perturbation import NoHoppingError
from .scan import (
    RampSpec,
    lobe_mu_grid,
    lobe_tip,
    phase_boundary,
    ramp_trajectory,
    time_evolution,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3
COMMANDS = ("spectrum", "boundary", "tip", "evolve", "ramp", "validate")

# key -> (type, default); a None default is resolved during validation
SCHEMA: dict[str, tuple[type, Any]] = {
    "run.units": (str, "beta"),
    "model.omega_a": (float, None),
    "model.omega_c": (float, 1.0),
    "model.beta": (float, 1.0),
    "model.gamma_a": (float, 0.0),
    "model.gamma_c": (float, 0.0),
    "model.mu": (float, None),
    "model.z": (int, 4),
    "model.kappa": (float, 0.05),
    "solver.n_max": (int, 8),
    "solver.tol": (float, 1e-10),
    "solver.max_iter": (int, 10_000),
    "solver.mixing": (float, 0.5),
    "solver.psi0": (float, 0.1),
    "solver.accelerate": (bool, True),
    "scan.mu_min": (float, None),
    "scan.mu_max": (float, None),
    "scan.mu_points": (int, 30),
    "scan.t": (float, 0.0),
    "evolve.t_grid": (list, None),
    "evolve.t_max": (float, 4.0),
    "evolve.t_points": (int, 41),
    "ramp.kappa0": (float, 0.0),
    "ramp.rate": (float, 0.01),
    "ramp.t_end": (float, 20.0),
    "ramp.samples": (int, 41),
    "validate.bound": (float, 0.15),
}

_KEY_RE = re.compile(r"^[a-z_]+\.[a-z_0-9]+$")


class ConfigError(ValueError):
    def __init__(self, message, line=None, column=None):
        where = f"line {line}" + (f", column {column}" if column else "") if line else ""
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings. ``params`` holds rates as written in the config."""

    params: ModelParams
    units: str
    n_max: int
    solver: SolverOptions
    mu_min: float
    mu_max: float
    mu_points: int
    t_scan: float
    t_grid: tuple[float, ...]
    ramp: RampSpec
    bound: float

    @property
    def mu_grid(self) -> tuple[float, ...]:
        return tuple(float(x) for x in np.linspace(self.mu_min, self.mu_max, self.mu_points))

    def compute_params(self) -> ModelParams:
        """Parameters handed to the solvers; beta-normalized runs use beta = 1."""
        return self.params.replace(beta=1.0) if self.units == "beta" else self.params


def _coerce(key, raw, typ, line, col):
    if typ is float:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{key} expects a number, got {raw!r}", line, col)
        return float(raw)
    if typ is int:
        if isinstance(raw, bool) or not (isinstance(raw, int) or
                                         (isinstance(raw, float) and raw.is_integer())):
            raise ConfigError(f"{key} expects an integer, got {raw!r}", line, col)
        return int(raw)
    if typ is bool:
        if not isinstance(raw, bool):
            raise ConfigError(f"{key} expects true or false, got {raw!r}", line, col)
        return raw
    if typ is list:
        if not isinstance(raw, (list, tuple)) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
            raise ConfigError(f"{key} expects a list of numbers", line, col)
        return [float(x) for x in raw]
    if not isinstance(raw, str):
        raise ConfigError(f"{key} expects a word, got {raw!r}", line, col)
    return raw


def _parse_value(text, line, col):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if re.fullmatch(r"[A-Za-z_][A-Za-z_0-9-]*", text):
        return text
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse value {text!r}", line, col) from exc


def parse_entries(text: str) -> dict[str, tuple[Any, int]]:
    """Raw ``key -> (value, line)`` map; syntax and unknown keys are checked here."""
    entries: dict[str, tuple[Any, int]] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            col = len(raw_line) - len(raw_line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key, value = (s.strip() for s in stripped.split("=", 1))
        key_col = raw_line.index(key) + 1 if key else 1
        if not _KEY_RE.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno, key_col)
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, key_col)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", lineno, key_col)
        value_col = raw_line.index("=") + 2 + (len(raw_line.split("=", 1)[1]) -
                                                 len(raw_line.split("=", 1)[1].lstrip()))
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno, value_col)
        typ = SCHEMA[key][0]
        entries[key] = (_coerce(key, _parse_value(value, lineno, value_col), typ,
                                lineno, value_col), lineno)
    return entries


def _check_sorted(name, grid):
    if any(not math.isfinite(x) for x in grid):
        raise ConfigError(f"{name} must be finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"{name} must be sorted ascending")


def parse_config(text: str) -> RunConfig:
    entries = parse_entries(text)
    values = {k: entries[k][0] if k in entries else default
              for k, (_, default) in SCHEMA.items()}

    units = values["run.units"]
    if units not in ("beta", "raw"):
        raise ConfigError("run.units must be 'beta' or 'raw'",
                          entries.get("run.units", (None, None))[1])
    if values["model.omega_a"] is None:
        values["model.omega_a"] = values["model.omega_c"]

    try:
        solver = SolverOptions(psi0=values["solver.psi0"], tol=values["solver.tol"],
                               max_iter=values["solver.max_iter"],
                               mixing=values["solver.mixing"],
                               accelerate=values["solver.accelerate"])
        params = ModelParams(
            omega_a=values["model.omega_a"], omega_c=values["model.omega_c"],
            beta=values["model.beta"], gamma_a=values["model.gamma_a"],
            gamma_c=values["model.gamma_c"], mu=values["model.mu"] or 0.0,
            z=values["model.z"], kappa=values["model.kappa"])
        ramp = RampSpec(values["ramp.kappa0"], values["ramp.rate"], values["ramp.t_end"],
                        values["ramp.samples"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if values["solver.n_max"] < 2:
        raise ConfigError("solver.n_max must be >= 2")
    if not values["validate.bound"] > 0:
        raise ConfigError("validate.bound must be positive")
    if values["scan.t"] < 0:
        raise ConfigError("scan.t must be non-negative")

    compute = params.replace(beta=1.0) if units == "beta" else params
    if values["model.mu"] is None:
        # default chemical potential: the lobe tip of this parameter set
        try:
            tip_mu, _ = lobe_tip(compute, 0.0)
        except (ValueError, RuntimeError) as exc:
            raise ConfigError(f"model.mu is required here: {exc}") from exc
        params = params.replace(mu=tip_mu)

    points = values["scan.mu_points"]
    if points < 1:
        raise ConfigError("scan.mu_points must be >= 1")
    mu_min, mu_max = values["scan.mu_min"], values["scan.mu_max"]
    if mu_min is None and mu_max is None:
        try:
            grid = lobe_mu_grid(compute, points)
        except ValueError as exc:
            raise ConfigError(f"scan.mu_min/scan.mu_max are required here: {exc}") from exc
        mu_min, mu_max = float(grid[0]), float(grid[-1])
    elif mu_min is None or mu_max is None:
        raise ConfigError("scan.mu_min and scan.mu_max must be given together")
    if mu_max < mu_min or (points > 1 and mu_max == mu_min):
        raise ConfigError("scan grid must be sorted ascending")

    if values["evolve.t_grid"] is not None:
        t_grid = tuple(values["evolve.t_grid"])
    else:
        if values["evolve.t_points"] < 2 or not values["evolve.t_max"] > 0:
            raise ConfigError("evolve.t_points must be >= 2 and evolve.t_max positive")
        t_grid = tuple(float(x) for x in np.linspace(0.0, values["evolve.t_max"],
                                                      values["evolve.t_points"]))
    _check_sorted("evolve time grid", t_grid)
    if t_grid and t_grid[0] < 0:
        raise ConfigError("evolve times must be non-negative")

    return RunConfig(params, units, values["solver.n_max"], solver, mu_min, mu_max, points,
                     values["scan.t"], t_grid, ramp, values["validate.bound"])


def render_config(cfg: RunConfig) -> str:
    """Config text that parses back to ``cfg``."""
    p, s, r = cfg.params, cfg.solver, cfg.ramp
    pairs = [
        ("run.units", cfg.units),
        ("model.omega_a", p.omega_a), ("model.omega_c", p.omega_c), ("model.beta", p.beta),
        ("model.gamma_a", p.gamma_a), ("model.gamma_c", p.gamma_c), ("model.mu", p.mu),
        ("model.z", p.z), ("model.kappa", p.kappa),
        ("solver.n_max", cfg.n_max), ("solver.tol", s.tol), ("solver.max_iter", s.max_iter),
        ("solver.mixing", s.mixing), ("solver.psi0", s.psi0),
        ("solver.accelerate", s.accelerate),
        ("scan.t", cfg.t_scan),
        ("evolve.t_grid", list(cfg.t_grid)),
        ("ramp.kappa0", r.kappa0), ("ramp.rate", r.rate), ("ramp.t_end", r.t_end),
        ("ramp.samples", r.samples),
        ("validate.bound", cfg.bound),
    ]
    pairs += [("scan.mu_min", cfg.mu_min), ("scan.mu_max", cfg.mu_max),
              ("scan.mu_points", cfg.mu_points)]
    lines = [f"{k} = {_render_value(v)}" for k, v in pairs]
    return "\n".join(lines) + "\n"


def _render_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return "[" + ", ".join(repr(float(x)) for x in v) + "]"
    return repr(v) if not isinstance(v, str) else v


# --- emission ---------------------------------------------------------------

def _as_dict(row) -> dict:
    return dataclasses.asdict(row) if dataclasses.is_dataclass(row) else dict(row)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, enum.Enum):
        v = v.value
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def emit(rows: Iterable, fmt: str, sink: TextIO, fields: list[str] | None = None) -> None:
    """Write homogeneous records as CSV (17 significant digits) or a JSON array.

    ``fields`` names the CSV header when ``rows`` is empty.
    """
    dicts = [_as_dict(r) for r in rows]
    if dicts:
        keys = list(dicts[0])
        for d in dicts[1:]:
            if list(d) != keys:
                raise ValueError("rows are not homogeneous")
    else:
        keys = list(fields or [])
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(keys) + "\n")
        for d in dicts:
            buf.write(",".join(_csv_cell(d[k]) for k in keys) + "\n")
        sink.write(buf.getvalue())
    elif fmt == "json":
        data = [{k: _json_value(d[k]) for k in keys} for d in dicts]
        sink.write(json.dumps(data, indent=2, allow_nan=False) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _report(record: dict, stream: TextIO) -> None:
    stream.write(json.dumps({k: _json_value(v) for k, v in record.items()}) + "\n")


# --- commands ---------------------------------------------------------------

class ValidationFailure(Exception):
    pass


def _cmd_spectrum(cfg, err):
    p = cfg.compute_params()
    ratio, flagged = quality_check(p)
    if flagged:
        _report({"advisory": "low_q", "gamma_c_over_omega_c": ratio}, err)
    return [{"n": lv.n, "branch": lv.branch, "energy": lv.energy,
             "grand_energy": lv.energy - p.mu * lv.n, "decay": lv.decay}
            for lv in dressed_levels(p, cfg.n_max)]


def _cmd_boundary(cfg, err):
    p = cfg.compute_params()
    rows = phase_boundary(p, cfg.mu_grid, cfg.t_scan, build_basis(cfg.n_max), cfg.solver)
    for r in rows:
        if r.error:
            _report({"error": "point_failed", "mu": r.mu, "message": r.error}, err)
    return rows


def _cmd_tip(cfg, err):
    p = cfg.compute_params()
    mu_a, zc_a = lobe_tip(p, cfg.t_scan, "analytic")
    mu_n, zc_n = lobe_tip(p, cfg.t_scan, "numeric", build_basis(cfg.n_max), cfg.solver)
    return [{"t": cfg.t_scan, "mu_star": mu_a, "zkappa_c": zc_a,
             "mu_star_numeric": mu_n, "zkappa_c_numeric": zc_n,
             "rel_dev": abs(zc_n - zc_a) / zc_a}]


def _cmd_evolve(cfg, err):
    return time_evolution(cfg.compute_params(), cfg.t_grid, build_basis(cfg.n_max), cfg.solver)


def _cmd_ramp(cfg, err):
    p = cfg.compute_params()
    samples, report = ramp_trajectory(p, cfg.ramp, build_basis(cfg.n_max), cfg.solver)
    _report({"event": "ramp_transition", **dataclasses.asdict(report)}, err)
    rows = []
    for s in samples:
        d = dataclasses.asdict(s)
        d["zkappa_eff"] = (p.z * cfg.ramp.kappa0 + cfg.ramp.rate * s.t) * math.exp(
            -2.0 * p.gamma * s.t)
        rows.append(d)
    return rows


def _cmd_validate(cfg, err):
    p = cfg.compute_params()
    points = phase_boundary(p, cfg.mu_grid, cfg.t_scan, build_basis(cfg.n_max), cfg.solver)
    rows, worst, failed = [], 0.0, False
    for r in points:
        a, n = r.zkappa_c_analytic, r.zkappa_c_numeric
        if r.error:
            failed = True
        if a is None and (n is None or r.mott_n != 1):
            dev = None  # outside the one-excitation lobe: nothing to compare
        elif a is None or n is None:
            dev = math.inf
        else:
            dev = abs(n - a) / a
        if dev is not None:
            worst = max(worst, dev)
        rows.append({"mu": r.mu, "zkappa_c_analytic": a, "zkappa_c_numeric": n,
                     "rel_dev": dev, "mott_n": r.mott_n})
    passed = not failed and worst <= cfg.bound
    _report({"event": "validate", "max_rel_dev": worst, "bound": cfg.bound,
             "passed": passed}, err)
    return rows, passed


_FIELDS = {
    "spectrum": ["n", "branch", "energy", "grand_energy", "decay"],
    "boundary": ["mu", "zkappa_c_analytic", "zkappa_c_numeric", "t", "mott_n", "error"],
    "tip": ["t", "mu_star", "zkappa_c", "mu_star_numeric", "zkappa_c_numeric", "rel_dev"],
    "evolve": ["t", "psi_analytic", "psi_numeric", "envelope", "mean_n", "var_n"],
    "ramp": ["t", "psi_analytic", "psi_numeric", "envelope", "mean_n", "var_n", "zkappa_eff"],
    "validate": ["mu", "zkappa_c_analytic", "zkappa_c_numeric", "rel_dev", "mott_n"],
}


def run_command(name: str, cfg: RunConfig, out: TextIO, fmt: str = "csv",
                err: TextIO | None = None) -> int:
    err = err if err is not None else sys.stderr
    try:
        if name == "validate":
            rows, passed = _cmd_validate(cfg, err)
        else:
            handler = {"spectrum": _cmd_spectrum, "boundary": _cmd_boundary, "tip": _cmd_tip,
                       "evolve": _cmd_evolve, "ramp": _cmd_ramp}.get(name)
            if handler is None:
                _report({"error": "usage", "message": f"unknown command {name!r}"}, err)
                return EXIT_CONFIG
            rows, passed = handler(cfg, err), True
    except (RuntimeError, EigensolverError, NoHoppingError, ValueError,
            np.linalg.LinAlgError) as exc:
        _report({"error": "solver", "message": str(exc)}, err)
        return EXIT_SOLVER
    emit(rows, fmt, out, _FIELDS[name])
    if name == "boundary" and any(r.error for r in rows):
        return EXIT_SOLVER
    return EXIT_OK if passed else EXIT_VALIDATION


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report({"error": "usage", "message": message}, sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="jchd", description="Dissipative Jaynes-Cummings-Hubbard mean field")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat 'section.key = value' file (defaults if omitted)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", help="output path (stdout if omitted)")
    args = parser.parse_args(argv)

    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text)
    except (OSError, UnicodeDecodeError, ConfigError) as exc:
        _report({"error": "config", "message": str(exc)}, sys.stderr)
        return EXIT_CONFIG

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            return run_command(args.command, cfg, fh, args.format)
    return run_command(args.command, cfg, sys.stdout, args.format)


if __name__ == "__main__":
    sys.exit(main())
