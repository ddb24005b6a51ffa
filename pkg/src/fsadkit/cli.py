"""Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 numerical failure, 4 undefined metric.
"""

import argparse
import json
import os
import sys

import torch
import yaml

from .config import load_config_file, load_resolved, resolve_config
from .checkpoint import load_checkpoint, read_manifest
from .data.synthetic import SyntheticSpec, generate_synthetic
from .errors import (
    ConfigError,
    DecodeError,
    FsadkitError,
    InsufficientDataError,
    InvalidInputError,
    InvalidSpecError,
    NotFoundError,
    NumericalError,
    OracleError,
    SchemaViolationError,
    UndefinedMetricError,
)
from .evaluation.embeddings import dump_embeddings
from .evaluation.report import RunResult, aggregate, render_table_csv, render_table_markdown
from .runner import build_model, evaluate_all, prepare_dataset, train_all
from .selftest import run_selftest
from .training.gradcheck import standard_gradchecks

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_UNDEFINED_METRIC = 4

USAGE_ERRORS = (
    ConfigError,
    InvalidSpecError,
    InvalidInputError,
    NotFoundError,
    SchemaViolationError,
    InsufficientDataError,
    DecodeError,
)

DEFAULT_TOY_SYNTHETIC = {
    "n_categories": 5,
    "train_per_category": 12,
    "test_normal_per_category": 8,
    "test_anomalous_per_category": 8,
    "resolution": 64,
    "defect_area_fraction": 0.05,
    "seed": 0,
}


def _add_common_flags(parser):
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--seed", type=int, help="base run seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--toy", action="store_true",
                        help="desk-scale profile (R=64, 5 epochs, 32 pairs/epoch)")
    parser.add_argument("--adversarial", choices=["on", "off"])
    parser.add_argument("--host", choices=["siamese", "masked-recon"])
    parser.add_argument("--shots", help="comma-separated K values, e.g. 2,4,8")
    parser.add_argument("--runs", type=int, help="runs per K")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--dataset-root", help="existing dataset root directory")


def _overrides_from(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out:
        overrides["output_dir"] = args.out
    if args.adversarial:
        overrides["adversarial"] = args.adversarial == "on"
    if args.host:
        overrides["host"] = args.host
    if args.shots:
        overrides["shots"] = [int(k) for k in str(args.shots).split(",")]
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.dataset_root:
        overrides["dataset_root"] = args.dataset_root
    return overrides


def _resolve(args):
    raw = load_config_file(args.config) if args.config else {}
    overrides = _overrides_from(args)
    if args.toy and "dataset_root" not in {**raw, **overrides} \
            and "synthetic" not in {**raw, **overrides}:
        overrides["synthetic"] = dict(DEFAULT_TOY_SYNTHETIC)
    return resolve_config(raw, overrides, toy=args.toy)


def cmd_make_synthetic(args):
    if args.spec:
        with open(args.spec) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise InvalidSpecError("synthetic spec file must hold a mapping")
        spec = SyntheticSpec.from_dict(data)
    else:
        spec = SyntheticSpec.from_dict(DEFAULT_TOY_SYNTHETIC)
    index = generate_synthetic(spec, args.out)
    for cat in index.categories:
        c = index.category(cat)
        n_anom = sum(t.label for t in c.test_items)
        print(f"{cat}: {len(c.train_normals)} train, "
              f"{len(c.test_items)} test ({n_anom} anomalous)")
    print(f"dataset written to {args.out}")
    return EXIT_OK


def cmd_train(args):
    config = _resolve(args)
    cells = train_all(config, progress=print)
    print(f"trained {cells} cells under {config.output_dir}")
    return EXIT_OK


def _config_for_rundir(args):
    resolved = os.path.join(args.out or ".", "resolved.yaml")
    if args.config:
        return _resolve(args)
    if not os.path.isfile(resolved):
        raise NotFoundError(f"no resolved.yaml under {args.out!r}; pass --config")
    config = load_resolved(resolved)
    if args.out:
        config = resolve_config(config.to_dict(), {"output_dir": args.out})
    return config


def cmd_evaluate(args):
    config = _config_for_rundir(args)
    records = evaluate_all(config, progress=print)
    print(f"evaluated {len(records)} cells")
    return EXIT_OK


def _load_results(path):
    files = []
    if os.path.isfile(path):
        files = [path]
    elif os.path.isdir(path):
        for dirpath, _, names in os.walk(path):
            files.extend(
                os.path.join(dirpath, n) for n in names
                if n == "results.jsonl" or n.endswith(".results.jsonl")
            )
    if not files:
        raise NotFoundError(f"no results files under {path}")
    records = []
    for fname in sorted(files):
        with open(fname) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
    return records


def cmd_report(args):
    records = _load_results(args.results)
    if not records:
        raise NotFoundError("results files are empty")
    variants = {}
    for rec in records:
        label = rec["host"] + (" + adversarial" if rec["adversarial"] else "")
        key = (rec["K"], label, rec["seed"])
        variants.setdefault(key, {"image_auc": {}, "pixel_auc": {}})
        variants[key]["image_auc"][rec["category"]] = rec["image_auc"]
        variants[key]["pixel_auc"][rec["category"]] = rec["pixel_auc"]

    os.makedirs(args.out, exist_ok=True)
    shot_values = sorted({k for k, _, _ in variants})
    for metric in ("image_auc", "pixel_auc"):
        for shots in shot_values:
            rows = []
            labels = sorted({lbl for k, lbl, _ in variants if k == shots})
            categories = None
            for label in labels:
                results = [
                    RunResult(seed=seed, shots=shots,
                              image_auc=data["image_auc"],
                              pixel_auc=data["pixel_auc"])
                    for (k, lbl, seed), data in variants.items()
                    if k == shots and lbl == label
                ]
                cats, means, average = aggregate(results, metric=metric)
                categories = cats
                rows.append((label, means, average))
            stem = f"{metric}_K{shots}"
            with open(os.path.join(args.out, stem + ".csv"), "w") as fh:
                fh.write(render_table_csv(rows, categories))
            title = f"{metric.replace('_', ' ')} (K={shots})"
            with open(os.path.join(args.out, stem + ".md"), "w") as fh:
                fh.write(render_table_markdown(rows, categories, title=title))
            print(f"wrote {stem}.csv / {stem}.md")
    return EXIT_OK


def cmd_dump_features(args):
    config = _config_for_rundir(args)
    meta, _, _ = read_manifest(args.checkpoint)
    host = meta.get("host", config.host)
    if host != config.host:
        raise ConfigError(
            f"checkpoint host {host!r} does not match configured {config.host!r}"
        )
    model = build_model(config, config.seed)
    load_checkpoint(model, args.checkpoint)
    index = prepare_dataset(config)
    tagged = []
    from .data.preprocess import load_and_preprocess

    for cat in index.categories:
        for item in index.category(cat).test_items:
            image = load_and_preprocess(
                item.image, config.resolution, config.standardize
            )
            tagged.append((os.path.basename(item.image), cat, item.label, image))
    count = dump_embeddings(model, tagged, args.features_out)
    print(f"wrote {count} embedding records to {args.features_out}")
    return EXIT_OK


def cmd_gradcheck(args):
    dtype = torch.float64 if args.dtype == "float64" else torch.float32
    results = standard_gradchecks(dtype=dtype, seed=args.seed or 0,
                                  corrupt=args.corrupt)
    failed = False
    for name, err, tol in results:
        status = "ok" if err < tol else "FAIL"
        print(f"{name}: max relative error {err:.3e} (tolerance {tol:.0e}) {status}")
        failed = failed or err >= tol
    return EXIT_VERIFICATION if failed else EXIT_OK


def cmd_selftest(args):
    failed = False
    for name, ok, detail in run_selftest(seed=args.seed or 0):
        print(f"{name}: {'ok' if ok else 'FAIL'} ({detail})")
        failed = failed or not ok
    return EXIT_VERIFICATION if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fsadkit",
        description="Few-shot anomaly detection with adversarial feature-pair training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", help="generate a synthetic dataset")
    p.add_argument("--spec", help="YAML synthetic spec (defaults to the toy spec)")
    p.add_argument("--out", required=True, help="dataset output directory")
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("train", help="train all (K, seed, category) cells")
    _add_common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score trained cells and write results")
    _add_common_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate results into CSV/Markdown tables")
    p.add_argument("--results", required=True, help="results.jsonl file or directory")
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("dump-features", help="write pooled feature embeddings as CSV")
    _add_common_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features-out", required=True, help="embeddings CSV path")
    p.set_defaults(func=cmd_dump_features)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--dtype", choices=["float32", "float64"], default="float64")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)  # fault-injection hook
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("selftest", help="run the quick verification bundle")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UndefinedMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED_METRIC
    except (NumericalError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FsadkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except yaml.YAMLError as exc:
        print(f"error: cannot parse YAML: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
