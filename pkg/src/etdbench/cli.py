"""Command-line interface: generate datasets, run experiments, score files.

Verbs:

* ``generate`` -- resolve a scenario, write train+test bundles.
* ``experiment`` -- run the stencil-learning study, write a JSON report.
* ``metrics`` -- compare two trajectory bundles, write a JSON report.
* ``list`` -- print the scenario registry (46 rows).

Exit codes: 0 success (including partial experiment results), 2 usage
errors (unknown scenario, malformed config, shape mismatch), 3 numeric
failure (trajectory divergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .etdrk import TrajectoryDiverged
from .experiments import run_stencil_experiment
from .export import read_bundle, write_bundle
from .metrics import metric_from_name, rollout_metrics
from .scenarios import IcConfig, registry_list, resolve_scenario
from .spectral import Grid

__all__ = ["main", "run_generate", "run_experiment", "run_metrics"]

USAGE_ERROR = 2
NUMERIC_ERROR = 3

_GENERATE_KEYS = {
    "scenario",
    "dims",
    "seed",
    "out",
    "format",
    "workers",
    "resolution",
    "train_samples",
    "train_steps",
    "test_samples",
    "test_steps",
    "gammas",
    "deltas",
    "dt",
    "substeps",
    "order",
    "warmup",
    "ic_cutoff",
    "ic_offset",
    "type",
    "physical",
}

_EXPERIMENT_KEYS = {
    "gamma1",
    "resolution",
    "cutoff",
    "methodologies",
    "seed",
    "out",
    "horizon",
    "metric",
    "coarse_proportion",
    "correction",
    "train_samples",
    "train_steps",
    "test_samples",
    "test_steps",
}


def _load_config(path: str, allowed: set[str], verb: str) -> dict:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"{verb} config must be a JSON object")
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown {verb} config keys: {sorted(unknown)}")
    return data


def _spec_overrides(options: dict) -> dict:
    overrides: dict = {}
    simple = {
        "train_samples",
        "train_steps",
        "test_samples",
        "test_steps",
        "substeps",
        "order",
        "warmup",
    }
    for key in simple & set(options):
        if options[key] is not None:
            overrides[key] = options[key]
    if options.get("gammas") is not None:
        gammas = [float(g) for g in options["gammas"]]
        if len(gammas) != 5:
            raise ValueError("gammas needs exactly 5 values (orders 0..4)")
        overrides["gammas"] = tuple(gammas)
    if options.get("deltas") is not None:
        overrides["deltas"] = {k: float(v) for k, v in options["deltas"].items()}
    if options.get("ic_cutoff") is not None or options.get("ic_offset") is not None:
        ic = IcConfig(
            cutoff=options.get("ic_cutoff") or 5,
            offset_range=tuple(options.get("ic_offset") or (0.0, 0.0)),
        )
        overrides["ic"] = ic
    return overrides


def run_generate(options: dict) -> int:
    scenario = options.get("scenario")
    if not scenario:
        print("generate: a scenario id is required", file=sys.stderr)
        return USAGE_ERROR
    out_dir = options.get("out") or "."
    seed = int(options.get("seed") or 0)
    fmt = options.get("format") or "raw64"
    workers = int(options.get("workers") or 1)
    try:
        overrides = _spec_overrides(options)
        if options.get("physical"):
            overrides["physical"] = {k: float(v) for k, v in options["physical"].items()}
        if options.get("dt") is not None:
            physical = dict(overrides.get("physical") or {})
            physical["time_step"] = float(options["dt"])
            overrides["physical"] = physical
        spec = resolve_scenario(
            scenario,
            dimension=int(options.get("dims") or 1),
            resolution=options.get("resolution"),
            gs_type=options.get("type"),
            **overrides,
        )
    except (KeyError, ValueError) as err:
        print(f"generate: {err}", file=sys.stderr)
        return USAGE_ERROR
    try:
        for split in ("train", "test"):
            sidecar = write_bundle(spec, split, seed, out_dir, fmt=fmt, workers=workers)
            payload = f"{spec.name}.{split}.{'raw64' if fmt == 'raw64' else 'csv'}"
            print(f"wrote {Path(out_dir) / payload} ({sidecar['checksum']})")
    except TrajectoryDiverged as err:
        print(f"generate: {err}", file=sys.stderr)
        return NUMERIC_ERROR
    return 0


def run_experiment(options: dict) -> int:
    out_dir = Path(options.get("out") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    methodologies = options.get("methodologies") or ["one", "sup;10", "sup;50"]
    try:
        report = run_stencil_experiment(
            gamma1=float(options.get("gamma1", 0.75)),
            resolution=int(options.get("resolution") or 30),
            cutoff=int(options.get("cutoff") or 5),
            methodologies=list(methodologies),
            seed=int(options.get("seed") or 0),
            horizon=int(options.get("horizon") or 100),
            metric=options.get("metric") or "mean_nRMSE",
            coarse_proportion=float(options.get("coarse_proportion", 0.0)),
            correction_variant=options.get("correction") or "none",
            train_samples=int(options.get("train_samples") or 5),
            train_steps=int(options.get("train_steps") or 200),
            test_samples=int(options.get("test_samples") or 50),
            test_steps=int(options.get("test_steps") or 200),
        )
    except ValueError as err:
        print(f"experiment: {err}", file=sys.stderr)
        return USAGE_ERROR
    except TrajectoryDiverged as err:
        print(f"experiment: {err}", file=sys.stderr)
        return NUMERIC_ERROR
    path = out_dir / "stencil_experiment.json"
    path.write_text(json.dumps(report, indent=2))
    print(f"wrote {path}")
    return 0


def run_metrics(pred_path: str, ref_path: str, descriptors, horizon: int, out: str) -> int:
    try:
        pred, pred_meta = read_bundle(pred_path)
        ref, ref_meta = read_bundle(ref_path)
    except (OSError, ValueError, KeyError) as err:
        print(f"metrics: {err}", file=sys.stderr)
        return USAGE_ERROR
    if pred.shape != ref.shape:
        print(
            f"metrics: shape mismatch {pred.shape} vs {ref.shape}", file=sys.stderr
        )
        return USAGE_ERROR
    dims = len(pred.shape) - 3
    grid = Grid(dims, pred.shape[-1], 1.0)
    report: dict = {
        "prediction": str(pred_path),
        "reference": str(ref_path),
        "horizon": horizon,
        "metrics": {},
    }
    try:
        for name in descriptors:
            desc = metric_from_name(name)
            result = rollout_metrics(pred, ref, desc, grid, horizon=horizon)
            report["metrics"][name] = {
                "per_step": result.per_step.tolist(),
                "aggregate": result.aggregate,
                "degenerate": result.degenerate,
            }
    except ValueError as err:
        print(f"metrics: {err}", file=sys.stderr)
        return USAGE_ERROR
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2))
    print(f"wrote {out_path}")
    return 0


def run_list() -> int:
    rows = registry_list()
    print(f"{'scenario':<24} {'dims':<5} {'class':<10} modes")
    for row in rows:
        canonical = f"{row['dimension']}d_{row['preferred_mode']}_{row['dynamic']}"
        print(
            f"{canonical:<24} {row['dimension']:<5} {row['classes']:<10} "
            f"{','.join(row['modes'])}"
        )
    print(f"total: {len(rows)} scenarios")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etdbench",
        description="Pseudo-spectral PDE benchmark: datasets, experiments, metrics.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("generate", help="generate train+test trajectory bundles")
    gen.add_argument("--config", help="JSON config file mirroring the flags")
    gen.add_argument("--scenario", help="scenario id, e.g. diff_adv or phy_gs_type")
    gen.add_argument("--dims", type=int, help="spatial dimension (default 1)")
    gen.add_argument("--seed", type=int, help="base seed (default 0)")
    gen.add_argument("--out", help="output directory (default .)")
    gen.add_argument("--format", choices=("raw64", "csv"), help="payload format")
    gen.add_argument("--workers", type=int, help="worker threads (default 1)")
    gen.add_argument("--resolution", type=int, help="override points per dimension")
    gen.add_argument("--train-samples", type=int, dest="train_samples")
    gen.add_argument("--train-steps", type=int, dest="train_steps")
    gen.add_argument("--test-samples", type=int, dest="test_samples")
    gen.add_argument("--test-steps", type=int, dest="test_steps")
    gen.add_argument("--gammas", type=float, nargs=5, help="difficulty values, orders 0..4")
    gen.add_argument("--dt", type=float, help="physical-mode time step override")
    gen.add_argument("--substeps", type=int)
    gen.add_argument("--order", type=int, help="ETDRK order (default 2)")
    gen.add_argument("--warmup", type=int)
    gen.add_argument("--ic-cutoff", type=int, dest="ic_cutoff")
    gen.add_argument("--type", help="Gray-Scott pattern type (gs_type scenarios)")

    exp = sub.add_parser("experiment", help="run the stencil-learning experiment")
    exp.add_argument("--config", help="JSON config file mirroring the flags")
    exp.add_argument("--gamma1", type=float, help="advection difficulty (default 0.75)")
    exp.add_argument("--resolution", type=int)
    exp.add_argument("--cutoff", type=int)
    exp.add_argument(
        "--methodologies",
        nargs="+",
        help="labels like one sup;10 div;5 (default: one sup;10 sup;50)",
    )
    exp.add_argument("--seed", type=int)
    exp.add_argument("--out", help="output directory (default .)")
    exp.add_argument("--horizon", type=int)
    exp.add_argument("--metric")
    exp.add_argument("--coarse-proportion", type=float, dest="coarse_proportion")
    exp.add_argument("--correction", choices=("none", "sequential", "parallel"))
    exp.add_argument("--train-samples", type=int, dest="train_samples")
    exp.add_argument("--train-steps", type=int, dest="train_steps")
    exp.add_argument("--test-samples", type=int, dest="test_samples")
    exp.add_argument("--test-steps", type=int, dest="test_steps")

    met = sub.add_parser("metrics", help="score a prediction bundle against a reference")
    met.add_argument("--pred", required=True, help="prediction sidecar (.json)")
    met.add_argument("--ref", required=True, help="reference sidecar (.json)")
    met.add_argument(
        "--descriptors", nargs="+", default=["mean_nRMSE"], help="metric names"
    )
    met.add_argument("--horizon", type=int, default=100)
    met.add_argument("--out", default="metrics_report.json")

    sub.add_parser("list", help="print the 46-entry scenario registry")
    return parser


def _merge_config(args: argparse.Namespace, allowed: set[str], verb: str) -> dict:
    options: dict = {}
    if getattr(args, "config", None):
        options.update(_load_config(args.config, allowed, verb))
    for key in allowed:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.verb == "list":
        return run_list()
    if args.verb == "generate":
        try:
            options = _merge_config(args, _GENERATE_KEYS, "generate")
        except (ValueError, OSError, json.JSONDecodeError) as err:
            print(f"generate: {err}", file=sys.stderr)
            return USAGE_ERROR
        return run_generate(options)
    if args.verb == "experiment":
        try:
            options = _merge_config(args, _EXPERIMENT_KEYS, "experiment")
        except (ValueError, OSError, json.JSONDecodeError) as err:
            print(f"experiment: {err}", file=sys.stderr)
            return USAGE_ERROR
        return run_experiment(options)
    if args.verb == "metrics":
        return run_metrics(args.pred, args.ref, args.descriptors, args.horizon, args.out)
    parser.error(f"unknown verb {args.verb!r}")
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
