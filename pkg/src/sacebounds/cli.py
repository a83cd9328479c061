"""Command line front end.

Two subcommands. ``estimate`` reads a JSON run configuration naming a CSV
dataset, an estimand, and assumptions, fits the models, and writes a JSON
report. ``synth`` reads a data-generating spec, writes a CSV sample and
optionally the exact truth values.

Reports carry no timestamps or machine information: the same configuration,
data, and seed produce byte-identical output regardless of thread count.

Exit codes: 0 on success, 2 for configuration problems, 1 for any typed
estimation error (the error class and message go to stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from typing import Optional

from . import __version__
from .data import CsvSchema, Dataset, load_csv, save_csv, weighted_mean
from .errors import ConfigError, SaceBoundsError
from .estimands import (
    AssumptionSet,
    EstimatorConfig,
    MeanDominance,
    adjusted_naive_estimate,
    estimate_interval,
    fit_models,
    naive_estimate,
)
from .identification import Monotonicity, stratum_bounds
from .inference import bootstrap
from .oracle import DgpSpec, generate, truth
from .simulate import SimConfig

REPORT_VERSION = 1


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context} is missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping: dict, allowed: set, context: str) -> None:
    if not isinstance(mapping, dict):
        raise ConfigError(f"{context} must be an object")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"{context} has unknown keys {sorted(unknown)}")


def _load_run_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    _check_keys(
        raw,
        {
            "data",
            "estimand",
            "assumptions",
            "simulation",
            "bootstrap",
            "engine",
            "on_separation",
            "output",
        },
        "config",
    )
    return raw


def _build_estimator_config(raw: dict) -> EstimatorConfig:
    estimand = _require(raw, "estimand", "config")
    assumptions_raw = raw.get("assumptions", {})
    _check_keys(assumptions_raw, {"monotonicity", "mean_dominance"}, "assumptions")
    try:
        assumptions = AssumptionSet(
            monotonicity=Monotonicity(assumptions_raw.get("monotonicity", "none")),
            mean_dominance=MeanDominance(assumptions_raw.get("mean_dominance", "none")),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    sim_raw = raw.get("simulation", {})
    _check_keys(sim_raw, {"mode", "draws_per_unit", "seed"}, "simulation")
    try:
        sim = SimConfig(
            mode=sim_raw.get("mode", "analytic"),
            draws_per_unit=int(sim_raw.get("draws_per_unit", 1000)),
            seed=int(sim_raw.get("seed", 0)),
        )
        config = EstimatorConfig(
            estimand=estimand,
            assumptions=assumptions,
            sim=sim,
            engine=raw.get("engine", "auto"),
            on_separation=raw.get("on_separation", "raise"),
        )
    except (SaceBoundsError, ValueError) as err:
        raise ConfigError(str(err)) from None
    if config.estimand == "sace_att" and assumptions.monotonicity is not Monotonicity.NEGATIVE:
        raise ConfigError(
            "estimand 'sace_att' requires assumptions.monotonicity = 'negative'"
        )
    return config


def _load_dataset(raw: dict) -> tuple[Dataset, str]:
    data_raw = _require(raw, "data", "config")
    _check_keys(data_raw, {"path", "schema"}, "data")
    path = _require(data_raw, "path", "data")
    schema_raw = data_raw.get("schema", {})
    try:
        schema = CsvSchema.from_dict(schema_raw)
    except SaceBoundsError as err:
        raise ConfigError(f"data.schema: {err}") from None
    try:
        return load_csv(path, schema), path
    except OSError as err:
        raise ConfigError(f"cannot read data {path}: {err}") from None


def _data_summary(data: Dataset, path: str) -> dict:
    summary = {"path": path, "n": data.n, "covariates": list(data.covariate_names)}
    for arm, label in ((1, "treated"), (0, "control")):
        mask = data.treatment == arm
        summary[f"n_{label}"] = int(mask.sum())
        summary[f"n_survivors_{label}"] = int((mask & (data.existence == 1)).sum())
        if mask.any():
            summary[f"weighted_survival_{label}"] = weighted_mean(
                data.existence[mask].astype(float), data.weight[mask]
            )
    return summary


def _model_block(models) -> dict:
    if models.engine == "plugin":
        cells = []
        for key in sorted(models.existence.survival):
            control, treated = models.existence.survival[key]
            cells.append(
                {
                    "covariates": list(key),
                    "survival_control": control,
                    "survival_treated": treated,
                }
            )
        return {"engine": "plugin", "cells": cells}
    block: dict = {
        "engine": "parametric",
        "existence": {
            "control": list(map(float, models.existence.fit_control.coefficients)),
            "treated": list(map(float, models.existence.fit_treated.coefficients)),
        },
    }
    if models.outcome is not None:
        block["outcome_mean"] = {
            "control": list(map(float, models.outcome.mean_control.coefficients)),
            "treated": list(map(float, models.outcome.mean_treated.coefficients)),
        }
        block["outcome_log_variance"] = {
            "control": list(map(float, models.outcome.var_control.coefficients)),
            "treated": list(map(float, models.outcome.var_treated.coefficients)),
        }
    return block


def _stratum_summary(data: Dataset, existence_model) -> dict:
    p_treated = existence_model.predict(1, data.covariates)
    p_control = existence_model.predict(0, data.covariates)
    lower, upper = stratum_bounds(p_treated, p_control)
    return {
        "always_survivor_lower_mean": weighted_mean(lower, data.weight),
        "always_survivor_upper_mean": weighted_mean(upper, data.weight),
    }


def _naive_block(data: Dataset, models, warnings: list) -> dict:
    block: dict = {"observed": None, "adjusted": None}
    try:
        block["observed"] = naive_estimate(data)
    except SaceBoundsError as err:
        warnings.append({"kind": "naive_undefined", "count": 1, "detail": str(err)})
    if models.outcome is not None:
        try:
            block["adjusted"] = adjusted_naive_estimate(data, models.outcome)
        except SaceBoundsError as err:
            warnings.append({"kind": "adjusted_naive_undefined", "count": 1, "detail": str(err)})
    return block


_WARNING_COUNTS = (
    "monotonicity_clamps",
    "dominance_ignored",
    "zero_share_units",
    "infinite_endpoints",
)


def run_estimate(raw_config: dict) -> dict:
    """Execute an ``estimate`` run and return the report dict."""
    config = _build_estimator_config(raw_config)
    data, data_path = _load_dataset(raw_config)

    bootstrap_raw = raw_config.get("bootstrap", {})
    _check_keys(bootstrap_raw, {"enabled", "replicates", "alpha", "seed"}, "bootstrap")
    use_bootstrap = bool(bootstrap_raw.get("enabled", False))

    models = fit_models(data, config)
    pinned = replace(config, engine=models.engine)
    warnings: list[dict] = []
    if models.fallback_from is not None:
        warnings.append({"kind": "engine_fallback", "count": 1, "detail": models.fallback_from})

    result = estimate_interval(data, pinned, replicate=0)
    boot_block = None
    if use_bootstrap:
        boot = bootstrap(
            data,
            pinned,
            replicates=int(bootstrap_raw.get("replicates", 1000)),
            alpha=float(bootstrap_raw.get("alpha", 0.05)),
            seed=int(bootstrap_raw.get("seed", 0)),
        )
        boot_block = {
            "replicates": boot.replicates,
            "alpha": boot.alpha,
            "ci_lower": boot.ci_lower,
            "ci_upper": boot.ci_upper,
            "failed": boot.failed,
            "seed": int(bootstrap_raw.get("seed", 0)),
        }
        if boot.failed:
            warnings.append({"kind": "bootstrap_failed_replicates", "count": boot.failed})

    for kind in _WARNING_COUNTS:
        count = result.diagnostics.get(kind, 0)
        if count:
            warnings.append({"kind": kind, "count": int(count)})
    clamps = models.existence.count_linear_clamps(data.covariates)
    if clamps:
        warnings.append({"kind": "linear_predictor_clamps", "count": clamps})

    report = {
        "report_version": REPORT_VERSION,
        "estimand": config.estimand,
        "assumptions": {
            "monotonicity": config.assumptions.monotonicity.value,
            "mean_dominance": config.assumptions.mean_dominance.value,
        },
        "engine": models.engine,
        "data": _data_summary(data, data_path),
        "stratum_shares": _stratum_summary(data, models.existence),
        "bounds": {"lower": result.lower, "upper": result.upper},
        "bootstrap": boot_block,
        "naive": _naive_block(data, models, warnings),
        "models": _model_block(models),
        "simulation": {
            "mode": config.sim.mode.value,
            "draws_per_unit": config.sim.draws_per_unit,
            "seed": config.sim.seed,
        },
        "warnings": sorted(warnings, key=lambda w: w["kind"]),
    }
    return report


def _emit(payload: dict, output: Optional[str]) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)


def _cmd_estimate(args: argparse.Namespace) -> int:
    raw = _load_run_config(args.config)
    if args.data is not None:
        raw.setdefault("data", {})["path"] = args.data
    if args.seed is not None:
        raw.setdefault("simulation", {})["seed"] = args.seed
        raw.setdefault("bootstrap", {})["seed"] = args.seed
    if args.replicates is not None:
        raw.setdefault("bootstrap", {})["replicates"] = args.replicates
    if args.draws is not None:
        raw.setdefault("simulation", {})["draws_per_unit"] = args.draws
    output = args.output if args.output is not None else raw.get("output")
    report = run_estimate(raw)
    _emit(report, output)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as handle:
            spec = DgpSpec.from_json(handle.read())
    except OSError as err:
        raise ConfigError(f"cannot read spec {args.spec}: {err}") from None
    data = generate(spec, n=args.n, seed=args.seed, method=args.method)
    save_csv(data, args.output)
    if args.truth is not None:
        _emit(truth(spec).to_dict(), args.truth)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sacebounds",
        description="Bound causal effects when treatment changes whether the outcome exists.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate bounds from a run configuration")
    est.add_argument("--config", required=True, help="JSON run configuration")
    est.add_argument("--data", help="override the data path in the config")
    est.add_argument("--output", help="write the JSON report here instead of stdout")
    est.add_argument("--seed", type=int, help="override simulation and bootstrap seeds")
    est.add_argument("--replicates", type=int, help="override bootstrap replicate count")
    est.add_argument("--draws", type=int, help="override Monte Carlo draws per unit")
    est.set_defaults(func=_cmd_estimate)

    synth = sub.add_parser("synth", help="generate a synthetic dataset from a spec")
    synth.add_argument("--spec", required=True, help="JSON data-generating spec")
    synth.add_argument("--n", type=int, required=True, help="number of units")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--method", choices=("random", "balanced"), default="random")
    synth.add_argument("--output", required=True, help="CSV output path")
    synth.add_argument("--truth", help="also write exact truth values to this JSON path")
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 2
    except SaceBoundsError as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
