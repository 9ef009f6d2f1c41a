"""Command-line front end for bound curves, simulations, and sweeps.

Config resolution is three-layered: built-in defaults, then an optional
JSON config file, then explicit flags.  The fully resolved configuration
is written next to every output as ``manifest.json``; feeding a manifest
back through ``--config`` reproduces the run byte-for-byte (the manifest
records its own duration, which is the one field allowed to differ).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BOUND_METHODS, BoundConfig, bound_curve, gen01_crossover
from .divergence import g_sigma_result
from .evolution import MixtureParams, f_sigma_iter
from .quadrature import QuadratureConvergenceError
from .simulator import TrialConfig, run_trials
from .svg import render_line_svg


class ConfigError(ValueError):
    """Invalid or contradictory configuration (exit code 2)."""


_TOP_KEYS = ("params", "bound", "trial", "sweep", "grid", "output")
_SECTION_KEYS = {
    "params": {"sigma", "d", "n", "m", "tau", "w"},
    "bound": {"t_max", "method", "epsilon", "delta", "r", "c", "c1", "c2",
              "tol", "expectation", "mc_samples", "mc_seed"},
    "trial": {"mode", "trials", "seed", "pop_risk", "pop_mc_size"},
    "sweep": {"sigma", "n", "m", "t"},
    "grid": {"sigma", "t", "x_min", "x_max", "x_points",
             "alpha_min", "alpha_max", "alpha_points", "tol"},
    "output": {"format", "svg"},
}
_INT_KEYS = {"d", "n", "m", "tau", "t_max", "mc_samples", "mc_seed", "trials",
             "seed", "pop_mc_size", "x_points", "alpha_points"}
_FLOAT_KEYS = {"sigma", "epsilon", "delta", "r", "c", "c1", "c2", "tol",
               "x_min", "x_max", "alpha_min", "alpha_max"}

_PARAM_DEFAULTS = {
    "bound": {"sigma": None, "d": 2, "n": 10, "m": 1000, "tau": 10, "w": None},
    "simulate": {"sigma": None, "d": 50, "n": 10, "m": 1000, "tau": 20, "w": None},
    "sweep": {"sigma": None, "d": 2, "n": 10, "m": 1000, "tau": 10, "w": None},
}
_BOUND_DEFAULTS = {"t_max": 6, "method": "fresh", "epsilon": 0.0, "delta": 0.05,
                   "r": None, "c": None, "c1": None, "c2": None, "tol": 1e-8,
                   "expectation": "quad2d", "mc_samples": 200_000, "mc_seed": 0}
_TRIAL_DEFAULTS = {"mode": "fresh", "trials": 2000, "seed": 0,
                   "pop_risk": "analytic", "pop_mc_size": 100_000}
_FSIGMA_GRID = {"sigma": None, "t": [1], "x_min": -1.0, "x_max": 1.0,
                "x_points": 201}
_GSIGMA_GRID = {"sigma": None, "alpha_min": -1.0, "alpha_max": 1.0,
                "alpha_points": 101, "tol": 1e-8}

BOUND_HEADER = ["t", "bound", "method", "sigma", "d", "n", "m", "w",
                "epsilon", "delta"]
SIMULATE_HEADER = ["t", "gen_mean", "gen_stderr", "rho_mean", "rho_stderr",
                   "pseudo_err_mean", "pseudo_err_stderr", "train_risk_mean",
                   "pop_risk_mean", "trials", "seed"]
FSIGMA_HEADER = ["x", "t", "sigma", "value"]
GSIGMA_HEADER = ["alpha", "sigma", "value", "abs_err_estimate"]
CROSSOVER_HEADER = ["sigma", "n", "gen0", "gen1", "crossover_n"]
INDEX_HEADER = ["sigma", "n", "m", "t", "file", "status"]


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run, minus the wall clock."""

    command: str
    config: dict
    seed: int
    version: str
    duration_s: float

    def write(self, path: Path) -> None:
        doc = {"command": self.command, "config": self.config,
               "seed": self.seed, "version": self.version,
               "duration_s": self.duration_s}
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _coerce(section: str, key: str, value):
    if value is None:
        return None
    if key == "w":
        if value == "auto":
            return "auto"
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.w must be a number or \"auto\", got {value!r}")
    if section == "sweep" or (section == "grid" and key in ("sigma", "t")):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{section}.{key} must be a list")
        cast = float if key == "sigma" else int
        return [cast(v) for v in value]
    if key in _INT_KEYS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if key in _FLOAT_KEYS:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    if not isinstance(value, (str, bool)):
        raise ConfigError(f"{section}.{key} has unsupported type {type(value).__name__}")
    return value


def _check_section(name: str, mapping) -> dict:
    if not isinstance(mapping, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    unknown = sorted(set(mapping) - _SECTION_KEYS[name])
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {', '.join(unknown)}")
    return {k: _coerce(name, k, v) for k, v in mapping.items()}


def _validate_config(doc) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(doc) - set(_TOP_KEYS))
    if unknown:
        raise ConfigError(f"unknown top-level config key(s): {', '.join(unknown)}")
    return {name: _check_section(name, sec) for name, sec in doc.items()}


def _load_config(path: str, command: str):
    """Read a config file; returns (validated sections, manifest seed or None).

    A manifest from a previous run (detected by its command/config keys)
    is unwrapped so old runs replay directly.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    seed = None
    if isinstance(doc, dict) and "command" in doc and "config" in doc:
        if doc["command"] != command:
            raise ConfigError(
                f"manifest was produced by {doc['command']!r}, not {command!r}")
        seed = doc.get("seed")
        doc = doc["config"]
    return _validate_config(doc), seed


def _merge(defaults: dict, file_sec: dict, flag_sec: dict) -> dict:
    out = dict(defaults)
    out.update({k: v for k, v in file_sec.items()})
    out.update({k: v for k, v in flag_sec.items() if v is not None})
    if out.get("w") == "auto":
        out["w"] = None
    return out


def _require(value, field: str):
    if value is None:
        raise ConfigError(f"missing required parameter: {field}")
    return value


def _mixture(params: dict) -> MixtureParams:
    _require(params["sigma"], "sigma")
    return MixtureParams(sigma=params["sigma"], d=params["d"], n=params["n"],
                         m=params["m"], tau=params["tau"], w=params["w"])


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _write_rows(out_dir: Path, stem: str, header, rows, fmt: str) -> Path:
    if fmt == "csv":
        path = out_dir / f"{stem}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt_cell(row[h]) for h in header])
    else:
        path = out_dir / f"{stem}.json"
        payload = [{h: row[h] for h in header} for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def _write_svg(out_dir: Path, stem: str, series, **kwargs) -> Path:
    path = out_dir / f"{stem}.svg"
    path.write_text(render_line_svg(series, **kwargs), encoding="utf-8")
    return path


def _bound_config(params: MixtureParams, b: dict) -> BoundConfig:
    return BoundConfig(params=params, delta=b["delta"], epsilon=b["epsilon"],
                       r=b["r"], c=b["c"], c1=b["c1"], c2=b["c2"], tol=b["tol"],
                       expectation=b["expectation"], mc_samples=b["mc_samples"],
                       mc_seed=b["mc_seed"])


def _bound_rows(config: BoundConfig, b: dict) -> list:
    curve = bound_curve(config, b["t_max"], method=b["method"])
    p = config.params
    w = p.reuse_weight() if b["method"] == "reuse" else 0.0
    return [{"t": int(t), "bound": float(v), "method": b["method"],
             "sigma": p.sigma, "d": p.d, "n": p.n, "m": p.m, "w": w,
             "epsilon": config.epsilon, "delta": config.delta}
            for t, v in zip(curve.t_values, curve.bounds)]


def _cmd_bound(resolved: dict, out_dir: Path) -> None:
    params = _mixture(resolved["params"])
    rows = _bound_rows(_bound_config(params, resolved["bound"]), resolved["bound"])
    out = resolved["output"]
    _write_rows(out_dir, "bound", BOUND_HEADER, rows, out["format"])
    if out["svg"]:
        series = [(resolved["bound"]["method"], [r["t"] for r in rows],
                   [r["bound"] for r in rows])]
        _write_svg(out_dir, "bound", series, title="generalization bound",
                   xlabel="t", ylabel="bound")


def _cmd_simulate(resolved: dict, out_dir: Path) -> None:
    params = _mixture(resolved["params"])
    tr = resolved["trial"]
    config = TrialConfig(params=params, mode=tr["mode"], trials=tr["trials"],
                         seed=tr["seed"], population_risk=tr["pop_risk"],
                         pop_mc_size=tr["pop_mc_size"])
    results = run_trials(config)
    rows = results.to_rows()
    out = resolved["output"]
    _write_rows(out_dir, "simulate", SIMULATE_HEADER, rows, out["format"])
    if out["svg"]:
        ts = [r["t"] for r in rows]
        series = [("mean gen", ts, [r["gen_mean"] for r in rows]),
                  ("pseudo-label err", ts, [r["pseudo_err_mean"] for r in rows])]
        _write_svg(out_dir, "simulate", series, title="self-training trace",
                   xlabel="t", ylabel="value")


def _cmd_fsigma(resolved: dict, out_dir: Path) -> None:
    grid = resolved["grid"]
    sigmas = _require(grid["sigma"], "sigma")
    if grid["x_points"] < 1:
        raise ConfigError("x_points must be >= 1")
    if grid["x_min"] > grid["x_max"]:
        raise ConfigError("x grid is empty: x_min > x_max")
    if grid["x_min"] < -1.0 or grid["x_max"] > 1.0:
        raise ConfigError("x grid must lie inside [-1, 1]")
    if any(t < 0 for t in grid["t"]):
        raise ConfigError("t values must be >= 0")
    xs = np.linspace(grid["x_min"], grid["x_max"], grid["x_points"])
    rows = []
    series = []
    for sigma in sigmas:
        for t in grid["t"]:
            values = np.atleast_1d(f_sigma_iter(xs, sigma, t))
            rows.extend({"x": float(x), "t": int(t), "sigma": float(sigma),
                         "value": float(v)} for x, v in zip(xs, values))
            series.append((f"sigma={sigma:g} t={t}", xs, values))
    out = resolved["output"]
    _write_rows(out_dir, "fsigma", FSIGMA_HEADER, rows, out["format"])
    if out["svg"]:
        _write_svg(out_dir, "fsigma", series, title="correlation evolution map",
                   xlabel="x", ylabel="value")


def _cmd_gsigma(resolved: dict, out_dir: Path) -> None:
    grid = resolved["grid"]
    sigmas = _require(grid["sigma"], "sigma")
    if grid["alpha_points"] < 1:
        raise ConfigError("alpha_points must be >= 1")
    if grid["alpha_min"] > grid["alpha_max"]:
        raise ConfigError("alpha grid is empty: alpha_min > alpha_max")
    if grid["alpha_min"] < -1.0 or grid["alpha_max"] > 1.0:
        raise ConfigError("alpha grid must lie inside [-1, 1]")
    alphas = np.linspace(grid["alpha_min"], grid["alpha_max"], grid["alpha_points"])
    rows = []
    series = []
    for sigma in sigmas:
        values = []
        for alpha in alphas:
            res = g_sigma_result(float(alpha), float(sigma), tol=grid["tol"])
            rows.append({"alpha": float(alpha), "sigma": float(sigma),
                         "value": res.value,
                         "abs_err_estimate": res.abs_error_estimate})
            values.append(res.value)
        series.append((f"sigma={sigma:g}", alphas, values))
    out = resolved["output"]
    _write_rows(out_dir, "gsigma", GSIGMA_HEADER, rows, out["format"])
    if out["svg"]:
        _write_svg(out_dir, "gsigma", series, title="pseudo-label divergence",
                   xlabel="alpha", ylabel="G", logy=True)


def _cmd_sweep(resolved: dict, out_dir: Path) -> None:
    axes = resolved["sweep"]
    for name, vals in axes.items():
        if not vals:
            raise ConfigError(f"empty sweep axis: {name}")
    if not axes:
        raise ConfigError("sweep requires at least one axis (sigma, n, m, or t)")
    if "sigma" not in axes:
        _require(resolved["params"]["sigma"], "sigma")
    base_params = dict(resolved["params"])
    b = resolved["bound"]
    out = resolved["output"]

    axis_names = [k for k in ("sigma", "n", "m", "t") if k in axes]
    index_rows = []
    points = list(itertools.product(*(axes[k] for k in axis_names)))
    for i, combo in enumerate(points):
        assign = dict(zip(axis_names, combo))
        params_dict = dict(base_params)
        for k in ("sigma", "n", "m"):
            if k in assign:
                params_dict[k] = assign[k]
        stem = f"point_{i:04d}"
        row = {"sigma": params_dict["sigma"], "n": params_dict["n"],
               "m": params_dict["m"], "t": assign.get("t"),
               "file": None, "status": None}
        try:
            config = _bound_config(_mixture(params_dict), b)
            if "t" in assign:
                point_b = dict(b, t_max=assign["t"])
                rows = _bound_rows(config, point_b)
                rows = rows[-1:]
            else:
                rows = _bound_rows(config, b)
            path = _write_rows(out_dir, stem, BOUND_HEADER, rows, out["format"])
            row["file"] = path.name
            row["status"] = "ok"
        except (ValueError, ArithmeticError, QuadratureConvergenceError) as exc:
            row["status"] = f"error: {exc}"
        index_rows.append(row)
    _write_rows(out_dir, "index", INDEX_HEADER, index_rows, "csv")

    sigma_axis = axes.get("sigma") or [base_params["sigma"]]
    n_axis = sorted(set(axes.get("n") or [base_params["n"]]))
    crossover_rows = []
    series = []
    for sigma in sigma_axis:
        config = _bound_config(_mixture(dict(base_params, sigma=sigma)), b)
        result = gen01_crossover(config, n_axis)
        crossover_rows.extend(
            {"sigma": float(sigma), "n": int(n), "gen0": float(g0),
             "gen1": float(g1), "crossover_n": result.crossover_n}
            for n, g0, g1 in zip(result.n_values, result.gen0, result.gen1))
        series.append((f"gen0 sigma={sigma:g}", result.n_values, result.gen0))
        series.append((f"gen1 sigma={sigma:g}", result.n_values, result.gen1))
    _write_rows(out_dir, "crossover", CROSSOVER_HEADER, crossover_rows, "csv")
    if out["svg"]:
        _write_svg(out_dir, "crossover", series, title="supervised vs one round",
                   xlabel="n", ylabel="bound", logy=True)


_HANDLERS = {"bound": _cmd_bound, "simulate": _cmd_simulate,
             "fsigma": _cmd_fsigma, "gsigma": _cmd_gsigma, "sweep": _cmd_sweep}


def _flag_sections(args) -> dict:
    """Sort explicitly given flags into their config sections."""
    cmd = args.command
    sec = {"params": {}, "bound": {}, "trial": {}, "sweep": {}, "grid": {},
           "output": {"format": args.fmt, "svg": args.svg}}
    if cmd == "bound":
        sec["params"] = {"sigma": args.sigma, "d": args.d, "n": args.n,
                         "m": args.m, "w": args.w}
    elif cmd == "simulate":
        sec["params"] = {"sigma": args.sigma, "d": args.d, "n": args.n,
                         "m": args.m, "tau": args.tau}
    elif cmd == "sweep":
        sec["params"] = {"d": args.d, "w": args.w}
        sec["sweep"] = {"sigma": args.sigma, "n": args.n, "m": args.m,
                        "t": args.t}
    if cmd in ("bound", "sweep"):
        sec["bound"] = {"t_max": args.t_max, "method": args.method,
                        "epsilon": args.epsilon, "delta": args.delta,
                        "r": args.r, "c": args.c, "tol": args.tol,
                        "expectation": args.expectation,
                        "mc_samples": args.mc_samples, "mc_seed": args.seed}
    if cmd == "simulate":
        sec["trial"] = {"mode": args.mode, "trials": args.trials,
                        "seed": args.seed, "pop_risk": args.pop_risk,
                        "pop_mc_size": args.pop_mc_size}
    if cmd == "fsigma":
        sec["grid"] = {"sigma": args.sigma, "t": args.t, "x_min": args.x_min,
                       "x_max": args.x_max, "x_points": args.x_points}
    if cmd == "gsigma":
        sec["grid"] = {"sigma": args.sigma, "alpha_min": args.alpha_min,
                       "alpha_max": args.alpha_max,
                       "alpha_points": args.alpha_points, "tol": args.tol}
    return sec


def _resolve(args) -> tuple:
    """Merge defaults, config file, and flags into the final run config."""
    cmd = args.command
    file_cfg, manifest_seed = ({}, None)
    if args.config:
        file_cfg, manifest_seed = _load_config(args.config, cmd)
    flags = {name: _check_section(name, sec_vals)
             for name, sec_vals in _flag_sections(args).items()}
    if args.seed is None and manifest_seed is not None:
        if cmd in ("bound", "sweep"):
            flags["bound"]["mc_seed"] = int(manifest_seed)
        elif cmd == "simulate":
            flags["trial"]["seed"] = int(manifest_seed)

    resolved = {}
    if cmd in ("bound", "simulate", "sweep"):
        resolved["params"] = _merge(_PARAM_DEFAULTS[cmd],
                                    file_cfg.get("params", {}), flags["params"])
    if cmd in ("bound", "sweep"):
        resolved["bound"] = _merge(_BOUND_DEFAULTS, file_cfg.get("bound", {}),
                                   flags["bound"])
    if cmd == "simulate":
        resolved["trial"] = _merge(_TRIAL_DEFAULTS, file_cfg.get("trial", {}),
                                   flags["trial"])
    if cmd == "sweep":
        resolved["sweep"] = _merge({}, file_cfg.get("sweep", {}), flags["sweep"])
    if cmd in ("fsigma", "gsigma"):
        defaults = _FSIGMA_GRID if cmd == "fsigma" else _GSIGMA_GRID
        resolved["grid"] = _merge(defaults, file_cfg.get("grid", {}),
                                  flags["grid"])
    resolved["output"] = _merge({"format": "csv", "svg": False},
                                file_cfg.get("output", {}), flags["output"])

    if cmd in ("bound", "sweep"):
        seed = resolved["bound"]["mc_seed"]
    elif cmd == "simulate":
        seed = resolved["trial"]["seed"]
    else:
        seed = args.seed if args.seed is not None else 0
    return resolved, int(seed)


def _add_common(p) -> None:
    p.add_argument("--config", metavar="PATH",
                   help="JSON config file, or a manifest.json from a previous run")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                   help="tabular output format (default csv)")
    p.add_argument("--svg", action="store_true", default=None,
                   help="also render an SVG figure")


def _add_bound_policy_flags(p) -> None:
    p.add_argument("--t-max", type=int, help="last self-training round")
    p.add_argument("--method", choices=BOUND_METHODS, help="bound family")
    p.add_argument("--tol", type=float, help="quadrature tolerance")
    p.add_argument("--epsilon", type=float, help="divergence stabilizer")
    p.add_argument("--delta", type=float, help="tail mass for the (r, c) policy")
    p.add_argument("--r", type=float, help="override the truncation radius")
    p.add_argument("--c", type=float, help="override the mean-norm cap")
    p.add_argument("--expectation", choices=("quad2d", "mc"),
                   help="how to average over the initial classifier")
    p.add_argument("--mc-samples", type=int, help="samples for --expectation mc")
    p.add_argument("--w", help="reuse weight in [0,1], or 'auto' for n/(n+m)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmm-selftrain",
        description="Generalization bounds and simulations for self-training "
                    "on a symmetric two-component Gaussian mixture.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("bound", help="evaluate a generalization-bound curve")
    p.add_argument("--sigma", type=float, help="mixture noise level")
    p.add_argument("--d", type=int, help="ambient dimension")
    p.add_argument("--n", type=int, help="labelled sample count")
    p.add_argument("--m", type=int, help="unlabelled batch size")
    _add_bound_policy_flags(p)
    _add_common(p)

    p = sub.add_parser("simulate", help="run self-training trials and aggregate")
    p.add_argument("--sigma", type=float, help="mixture noise level")
    p.add_argument("--d", type=int, help="ambient dimension")
    p.add_argument("--n", type=int, help="labelled sample count")
    p.add_argument("--m", type=int, help="unlabelled batch size per round")
    p.add_argument("--tau", type=int, help="number of self-training rounds")
    p.add_argument("--mode", choices=("fresh", "reuse"), help="refit mode")
    p.add_argument("--trials", type=int, help="independent trials to average")
    p.add_argument("--pop-risk", choices=("analytic", "mc"),
                   help="population risk evaluation")
    p.add_argument("--pop-mc-size", type=int,
                   help="test-set size for --pop-risk mc")
    _add_common(p)

    p = sub.add_parser("fsigma", help="tabulate the correlation evolution map")
    p.add_argument("--sigma", type=float, nargs="+", help="noise level(s)")
    p.add_argument("--t", type=int, nargs="+", help="iteration count(s)")
    p.add_argument("--x-min", type=float, help="grid start (>= -1)")
    p.add_argument("--x-max", type=float, help="grid end (<= 1)")
    p.add_argument("--x-points", type=int, help="grid size")
    _add_common(p)

    p = sub.add_parser("gsigma", help="tabulate the pseudo-label divergence")
    p.add_argument("--sigma", type=float, nargs="+", help="noise level(s)")
    p.add_argument("--alpha-min", type=float, help="grid start (>= -1)")
    p.add_argument("--alpha-max", type=float, help="grid end (<= 1)")
    p.add_argument("--alpha-points", type=int, help="grid size")
    p.add_argument("--tol", type=float, help="quadrature tolerance")
    _add_common(p)

    p = sub.add_parser("sweep", help="bound curves over a parameter grid, "
                                     "with a supervised-vs-one-round report")
    p.add_argument("--sigma", type=float, nargs="*", help="sigma axis")
    p.add_argument("--n", type=int, nargs="*", help="n axis")
    p.add_argument("--m", type=int, nargs="*", help="m axis")
    p.add_argument("--t", type=int, nargs="*", help="t axis")
    p.add_argument("--d", type=int, help="ambient dimension")
    _add_bound_policy_flags(p)
    _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        resolved, seed = _resolve(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.command](resolved, out_dir)
    except QuadratureConvergenceError as exc:
        print(f"gmm-selftrain: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"gmm-selftrain: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError) as exc:
        print(f"gmm-selftrain: numerical failure: {exc}", file=sys.stderr)
        return 3
    manifest = RunManifest(command=args.command, config=resolved, seed=seed,
                           version=__version__,
                           duration_s=round(time.perf_counter() - start, 6))
    manifest.write(out_dir / "manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
