"""Command-line entry point: ``ipocvpc {simulate-study,fit,vpc,plot}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or parse failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from .coxph import CoxFitError
from .formats import (
    FormatError,
    dataset_csv,
    dump_models,
    load_models,
    parse_keyvalue,
    parse_study_spec,
    read_band_csv,
    read_dataset,
)
from .studygen import generate_study
from .svg import render_bands, result_to_bands
from .vpc import Algorithm, VpcConfig, WeightForm, fit_models, run_vpc

SEED_ENV = "VPC_IPOC_SEED"

# config-file keys accepted by `vpc`, and how to convert them
CONFIG_KEYS = {
    "algorithm": str,
    "replicates": int,
    "marginal-replicates": int,
    "seed": int,
    "grid": int,
    "quantiles": str,
    "stratify-by": str,
    "covariates": str,
    "weight-form": str,
    "max-weight": float,
    "workers": int,
}


class UsageError(Exception):
    pass


def default_spec_text() -> str:
    return resources.files("ipocvpc").joinpath("data/default_study.txt").read_text("utf-8")


def _csv_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _quantiles(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--quantiles expects two comma-separated numbers, got {text!r}")
    return lo, hi


def cmd_simulate_study(args) -> int:
    if args.spec is None:
        text, source = default_spec_text(), "<bundled default>"
    else:
        text, source = Path(args.spec).read_text(encoding="utf-8"), args.spec
    spec = parse_study_spec(text, source)
    Path(args.out).write_text(dataset_csv(generate_study(spec)), encoding="utf-8")
    return 0


def cmd_fit(args) -> int:
    study = read_dataset(args.dataset)
    covariates = _csv_list(args.covariates) if args.covariates else None
    if covariates:
        for name in covariates:
            if name not in study.covariate_names:
                raise UsageError(f"dataset has no covariate column {name!r}")
    event_model, cens_model = fit_models(study, covariates)
    dump_models(event_model, cens_model, args.out)
    return 0


def _resolve_config(args) -> VpcConfig:
    values = {}
    if args.config:
        raw = parse_keyvalue(Path(args.config).read_text(encoding="utf-8"), args.config)
        for key, text in raw.items():
            if key not in CONFIG_KEYS:
                raise FormatError(f"{args.config}: unknown key {key!r}", key)
            try:
                values[key] = CONFIG_KEYS[key](text)
            except ValueError:
                raise FormatError(f"{args.config}: invalid value {text!r} for {key!r}", key)
    for key in CONFIG_KEYS:
        flag = getattr(args, key.replace("-", "_"))
        if flag is not None:
            values[key] = flag
    if "seed" not in values:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                values["seed"] = int(env)
            except ValueError:
                raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}")
    try:
        return VpcConfig(
            algorithm=values.get("algorithm", "standard"),
            replicates=values.get("replicates", 500),
            marginal_replicates=values.get("marginal-replicates"),
            seed=values.get("seed", 0),
            grid_size=values.get("grid", 200),
            quantiles=_quantiles(values["quantiles"]) if "quantiles" in values else (0.05, 0.95),
            stratify_by=values.get("stratify-by"),
            covariates=_csv_list(values["covariates"]) if "covariates" in values else None,
            weight_form=values.get("weight-form", "simplified"),
            max_weight=values.get("max-weight"),
            workers=values.get("workers", 1),
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_vpc(args) -> int:
    config = _resolve_config(args)
    study = read_dataset(args.dataset)
    if config.stratify_by is not None and config.stratify_by not in study.covariate_names:
        raise UsageError(f"dataset has no column {config.stratify_by!r} to stratify by")
    event_model = cens_model = None
    if args.model:
        event_model, cens_model = load_models(args.model)
    result = run_vpc(study, config, event_model, cens_model)
    Path(args.out).write_text(result.to_csv(), encoding="utf-8")
    if args.svg:
        Path(args.svg).write_text(render_bands(result_to_bands(result)), encoding="utf-8")
    return 0


def cmd_plot(args) -> int:
    bands = read_band_csv(args.bands)
    Path(args.out).write_text(render_bands(bands), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ipocvpc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-study", help="generate a synthetic study dataset")
    s.add_argument("--spec", help="key=value study spec (default: bundled two-arm study)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate_study)

    f = sub.add_parser("fit", help="fit the Cox event model and reverse-KM censoring model")
    f.add_argument("dataset")
    f.add_argument("--covariates", help="comma-separated columns (default: all)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    v = sub.add_parser("vpc", help="run a visual predictive check")
    v.add_argument("dataset")
    v.add_argument("--model", help="model JSON from `fit` (default: fit on the dataset)")
    v.add_argument("--config", help="key=value file; flags override it")
    v.add_argument("--algorithm", choices=[a.value for a in Algorithm])
    v.add_argument("--replicates", type=int)
    v.add_argument("--marginal-replicates", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--grid", type=int, help="number of equally spaced grid points")
    v.add_argument("--quantiles", help="lower,upper (default 0.05,0.95)")
    v.add_argument("--stratify-by")
    v.add_argument("--covariates")
    v.add_argument("--weight-form", choices=[w.value for w in WeightForm])
    v.add_argument("--max-weight", type=float)
    v.add_argument("--workers", type=int)
    v.add_argument("--out", required=True, help="band CSV path")
    v.add_argument("--svg", help="also write an SVG plot here")
    v.set_defaults(func=cmd_vpc)

    pl = sub.add_parser("plot", help="render a band CSV to SVG")
    pl.add_argument("bands")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, FormatError) as exc:
        print(f"ipocvpc: error: {exc}", file=sys.stderr)
        return 2
    except (CoxFitError, ValueError, OSError) as exc:
        print(f"ipocvpc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
