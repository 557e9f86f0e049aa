"""Configuration-driven command-line front end.

Subcommands:

* ``taucalc grid``      build an orbit grid, emit CSV + limit diagnostics
* ``taucalc chain``     build a factorization chain, emit per-level CSVs
                        and a manifest with the residual table
* ``taucalc validate``  run the acceptance suite, emit a JSON report

Configuration is a JSON file (``--config``); unknown keys are rejected.
Named presets (``--preset``) replace or shortcut the config.  Exit codes:
0 success, 1 validation failures, 2 configuration errors, 3 numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as tcio
from .chain import (CoefficientTriple, advance_level, eigen_residual_norm,
                    factorization_residual, from_coefficients, make_level,
                    particular_gauge_xi, solve_step_constant, with_step)
from .errors import CalculusError, ConfigError
from .expressions import parse_expression
from .grid import GROUP, INTERVAL, SEMIGROUP, build_grid
from .gridfn import GridFunction
from .hilbert import PearsonTriple, pearson_residual
from .maps import fractional_map, linear_map, power_map
from .scenarios import constant_gauge_chain, fractional_chain, qhahn_chain
from .validation import (CRITERIA, format_report, results_to_dict,
                         run_criteria)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# residual gates enforced by the chain command
PEARSON_GATE = 1e-10
FACTORIZATION_GATE = 1e-9


def _take(mapping, allowed: dict, context: str) -> dict:
    """Read a config dict, rejecting unknown keys; ``allowed`` maps key ->
    default (a ``_REQUIRED`` default makes the key mandatory)."""
    if not isinstance(mapping, dict):
        raise ConfigError(f"{context} must be a JSON object, got "
                          f"{type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")
    out = {}
    for key, default in allowed.items():
        if key in mapping:
            out[key] = mapping[key]
        elif default is _REQUIRED:
            raise ConfigError(f"{context} is missing required key {key!r}")
        else:
            out[key] = default
    return out


_REQUIRED = object()


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    return data


def _build_map(spec) -> object:
    spec = _take(spec, {"kind": _REQUIRED, "q": None, "shift": 0.0,
                        "a": None, "p": None, "domain": None}, "map spec")
    domain = tuple(spec["domain"]) if spec["domain"] is not None else None
    kind = spec["kind"]
    try:
        if kind == "linear":
            if spec["q"] is None:
                raise ConfigError("linear map needs key 'q'")
            return linear_map(float(spec["q"]), float(spec["shift"]),
                              domain=domain)
        if kind == "fractional":
            if spec["a"] is None:
                raise ConfigError("fractional map needs key 'a'")
            return (fractional_map(float(spec["a"]), domain=domain)
                    if domain is not None else fractional_map(float(spec["a"])))
        if kind == "power":
            if spec["p"] is None:
                raise ConfigError("power map needs key 'p'")
            return (power_map(float(spec["p"]), domain=domain)
                    if domain is not None else power_map(float(spec["p"])))
    except ValueError as exc:
        raise ConfigError(f"invalid map parameters: {exc}") from exc
    raise ConfigError(f"unknown map kind {kind!r} "
                      "(expected linear, fractional or power)")


_MODES = {"semigroup": SEMIGROUP, "group": GROUP, "interval": INTERVAL}


def _build_grid(config: dict, depth_override: int | None):
    gspec = _take(config.get("grid", {}),
                  {"mode": "semigroup", "bases": _REQUIRED, "depth": 512,
                   "tol": 1e-9}, "grid spec")
    if gspec["mode"] not in _MODES:
        raise ConfigError(f"unknown grid mode {gspec['mode']!r}")
    bases = gspec["bases"]
    bases = tuple(bases) if isinstance(bases, (list, tuple)) else float(bases)
    depth = depth_override if depth_override is not None else int(gspec["depth"])
    if "map" not in config:
        raise ConfigError("config is missing the map spec")
    tau = _build_map(config["map"])
    return build_grid(tau, mode=_MODES[gspec["mode"]], bases=bases,
                      tol=float(gspec["tol"]), max_depth=depth)


def _grid_fn(grid, expr: str, label: str) -> GridFunction:
    fn = parse_expression(expr)
    out = GridFunction.from_callable(grid, fn, label=label)
    if not all(np.all(np.isfinite(v)) for v in out.values):
        raise ConfigError(
            f"expression for {label!r} is not finite on the grid")
    return out


# ---------------------------------------------------------------------------
# presets

def _preset_grid(name: str, depth: int | None):
    if name == "linear":
        return build_grid(linear_map(0.5), mode=SEMIGROUP, bases=1.0,
                          max_depth=depth or 30)
    if name == "fractional":
        return build_grid(fractional_map(2.0), mode=SEMIGROUP, bases=0.5,
                          max_depth=depth or 25)
    scenario = _preset_chain(name, depth)
    return scenario.grid


def _preset_chain(name: str, depth: int | None):
    if name == "qhahn":
        return qhahn_chain(depth=depth or 140, n_levels=6)
    if name == "constant-gauge":
        return constant_gauge_chain(depth=depth or 20, n_levels=6)
    if name == "fractional":
        return fractional_chain(depth=depth or 40, n_levels=6)
    raise ConfigError(f"unknown preset {name!r} "
                      "(expected qhahn, constant-gauge or fractional)")


# ---------------------------------------------------------------------------
# commands

def cmd_grid(args) -> int:
    out_dir = Path(args.out)
    if args.preset:
        grid = _preset_grid(args.preset, args.depth)
    elif args.config:
        grid = _build_grid(_check_top(_load_config(args.config)), args.depth)
    else:
        raise ConfigError("grid command needs --preset or --config")
    out_dir.mkdir(parents=True, exist_ok=True)
    tcio.write_grid_csv(grid, out_dir / "grid.csv")
    tcio.write_json(tcio.grid_diagnostics(grid), out_dir / "grid.json")
    print(f"wrote {out_dir / 'grid.csv'} and {out_dir / 'grid.json'} "
          f"(limit {grid.limit:.17g}, depth {grid.depth})")
    return EXIT_OK


def _check_top(config: dict) -> dict:
    return _take(config, {"map": _REQUIRED, "grid": _REQUIRED, "level0": None,
                          "chain": None, "output": None, "emit": ["csv", "json"]},
                 "config")


def _level0_from_config(grid, spec):
    coeff_keys = {"alpha", "beta", "gamma", "lambda", "h0", "seed"}
    direct_keys = {"B0", "eta0", "h0", "f0"}
    if not isinstance(spec, dict):
        raise ConfigError("level0 spec must be a JSON object")
    if "alpha" in spec:
        spec = _take(spec, {"alpha": _REQUIRED, "beta": _REQUIRED,
                            "gamma": _REQUIRED, "lambda": 0.0,
                            "h0": "1", "seed": None}, "level0 coefficient spec")
        if spec["seed"] is None:
            raise ConfigError(
                "coefficient input needs the ratio seed 'seed' "
                "(value of phi0/h0 at each branch base)")
        coef = CoefficientTriple(
            alpha=_grid_fn(grid, spec["alpha"], "alpha"),
            beta=_grid_fn(grid, spec["beta"], "beta"),
            gamma=_grid_fn(grid, spec["gamma"], "gamma"),
            value=complex(spec["lambda"]))
        h0 = _grid_fn(grid, spec["h0"], "h0")
        return from_coefficients(coef, h0, spec["seed"])
    if set(spec) <= direct_keys:
        spec = _take(spec, {"B0": _REQUIRED, "eta0": _REQUIRED,
                            "h0": "1", "f0": "0"}, "level0 direct spec")
        return make_level(grid,
                          B=_grid_fn(grid, spec["B0"], "B0"),
                          eta=_grid_fn(grid, spec["eta0"], "eta0"),
                          h=_grid_fn(grid, spec["h0"], "h0"),
                          f=_grid_fn(grid, spec["f0"], "f0"))
    raise ConfigError(
        "level0 spec must give either coefficients "
        f"({', '.join(sorted(coeff_keys))}) or direct data "
        f"({', '.join(sorted(direct_keys))})")


def _chain_from_config(grid, config):
    level = _level0_from_config(grid, config.get("level0"))
    cspec = _take(config.get("chain") or {},
                  {"levels": 1, "step": None}, "chain spec")
    n_levels = int(cspec["levels"])
    step = _take(cspec["step"] or {},
                 {"source": "explicit", "g": None, "h": "1", "d": 1.0,
                  "xi0": 1.0}, "chain step spec")
    d = complex(step["d"])
    levels, gauges = [], []
    for k in range(n_levels):
        h_next = _grid_fn(grid, step["h"], "h")
        if step["source"] == "explicit":
            if step["g"] is None:
                raise ConfigError("explicit step source needs the gauge 'g'")
            g = _grid_fn(grid, step["g"], "g")
            c = solve_step_constant(level, h_next, g, d)
        elif step["source"] == "xi":
            _, g = particular_gauge_xi(level, d, xi0=float(step["xi0"]))
            c = 0.0
        else:
            raise ConfigError(
                f"unknown chain step source {step['source']!r} "
                "(expected explicit or xi; presets go through --preset)")
        level = with_step(level, g=g, c=c, d=d)
        levels.append(level)
        gauges.append(g)
        if k + 1 < n_levels:
            level = advance_level(level, h_next)
    return levels, gauges


def _residual_table(levels, scenario=None) -> dict:
    residuals = {}
    for level in levels:
        p = PearsonTriple.from_B_eta(level.B, level.eta)
        res = pearson_residual(p, level.w)
        residuals[f"pearson_shift_level_{level.k}"] = float(res.shift)
        if res.shift > PEARSON_GATE:
            raise _ResidualFailure(
                f"pearson residual {res.shift:.3e} at level {level.k} "
                f"exceeds {PEARSON_GATE:g}")
    for lo, hi in zip(levels, levels[1:]):
        worst = factorization_residual(lo, hi, probes=6, rng=lo.k)
        residuals[f"factorization_level_{lo.k}_{hi.k}"] = float(worst)
        if worst > FACTORIZATION_GATE:
            raise _ResidualFailure(
                f"factorization residual {worst:.3e} between levels "
                f"{lo.k} and {hi.k} exceeds {FACTORIZATION_GATE:g}")
    if scenario is not None and hasattr(scenario, "kernel_pair"):
        pair = scenario.kernel_pair()
        residuals["eigen_kernel_route"] = float(
            eigen_residual_norm(levels[pair.level], pair, margin=1))
    return residuals


class _ResidualFailure(CalculusError):
    """A chain residual exceeded its gate (numerical-failure exit)."""


def cmd_chain(args) -> int:
    out_dir = Path(args.out)
    scenario = None
    gauges = []
    if args.preset:
        scenario = _preset_chain(args.preset, args.depth)
        levels = list(scenario.levels)
        extra = {"preset": args.preset}
    elif args.config:
        config = _check_top(_load_config(args.config))
        if config.get("level0") is None:
            raise ConfigError("chain command needs a level0 spec or --preset")
        grid = _build_grid(config, args.depth)
        levels, gauges = _chain_from_config(grid, config)
        extra = {"config": str(args.config)}
    else:
        raise ConfigError("chain command needs --preset or --config")
    residuals = _residual_table(levels, scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = tcio.write_chain(levels, out_dir, manifest_extra=extra,
                                residuals=residuals)
    for k, g in enumerate(gauges):
        tcio.write_function_csv(g, out_dir / f"gauge_{k}.csv")
    print(f"wrote {len(levels)} level file(s) and {manifest}")
    for name, value in residuals.items():
        print(f"  {name}: {value:.3e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    names = args.criterion or None
    try:
        results = run_criteria(names=names, tol_override=args.tol)
    except KeyError as exc:
        raise ConfigError(
            f"{exc.args[0]}; valid names: "
            f"{', '.join(CRITERIA)}") from exc
    report = format_report(results)
    print(report)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        tcio.write_json(results_to_dict(results), out_dir / "validation.json")
        print(f"wrote {out_dir / 'validation.json'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taucalc",
        description="orbit-grid calculus, factorization chains and the "
                    "acceptance suite")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--preset", help="named preset "
                       "(qhahn, constant-gauge, fractional, linear)")
        p.add_argument("--depth", type=int, help="orbit depth override")
        p.add_argument("--tol", type=float, help="tolerance override")

    p_grid = sub.add_parser("grid", help="build an orbit grid")
    common(p_grid)
    p_grid.set_defaults(func=cmd_grid)

    p_chain = sub.add_parser("chain", help="build a factorization chain")
    common(p_chain)
    p_chain.set_defaults(func=cmd_chain)

    p_val = sub.add_parser("validate", help="run the acceptance suite")
    common(p_val)
    p_val.add_argument("--criterion", action="append",
                       help="run only this criterion (repeatable)")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalculusError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
