"""Command-line front end: summarize, curate, train, evaluate, compare.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
Every artifact embeds the seed and config hash that produced it; re-running
a command with identical inputs reproduces identical bytes. Partial outputs
are removed when a command fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import bayes as bayes_mod
from . import dtree as dtree_mod
from . import mlp as mlp_mod
from .curate import (
    CurationError,
    CurationPlan,
    deduplicate,
    split_holdout,
    stratified_sample,
)
from .encoding import CATEGORY, EncodingError, FINE
from .experiment import (
    ExperimentError,
    SchemaMismatch,
    config_hash,
    evaluate_model,
    train_model,
)
from .figures import save_class_rates, save_comparison, save_confusion_heatmap
from .ingest import (
    DatasetSummary,
    ParseError,
    load_dataset,
    summarize_file,
    write_records,
)
from .metrics import MetricsError
from .modelstore import (
    KINDS,
    ModelStoreError,
    load_model,
    save_model,
)
from .report import comparison_csv, render_comparison, render_csv, render_kv, render_text
from .rng import derive_seed
from .schema import (
    AttackCategory,
    FeatureSchema,
    LabelError,
    UnknownLabelPolicy,
    label_to_category,
    SKIP_POLICY,
)

logger = logging.getLogger("kddids")

DATA_DIR_ENV = "KDDIDS_DATA_DIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DATA_ERRORS = (
    ParseError, CurationError, LabelError, EncodingError, MetricsError,
    ModelStoreError, ExperimentError, SchemaMismatch,
    dtree_mod.TreeError, mlp_mod.MlpError, bayes_mod.BayesError,
    FileNotFoundError, IsADirectoryError, json.JSONDecodeError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def resolve_data_path(path: str) -> Path:
    """Resolve a data path, falling back to $KDDIDS_DATA_DIR for relatives."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / p
        if candidate.exists():
            return candidate
    return p


def parse_policy(name: str) -> UnknownLabelPolicy:
    if name == "error":
        return UnknownLabelPolicy.error()
    if name == "skip":
        return UnknownLabelPolicy.skip()
    return UnknownLabelPolicy.map_to(AttackCategory(name))


class _Artifacts:
    """Tracks files written by a command so failures leave nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def write_text(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.paths.append(path)

    def track(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.paths.append(path)
        return path

    def discard_all(self) -> None:
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def build_parser() -> _Parser:
    parser = _Parser(prog="kddids", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="per-label and per-category counts")
    p.add_argument("data", help="record file (42-field CSV, optionally gzip)")
    p.add_argument("--on-error", choices=("abort", "skip"), default="abort")
    p.add_argument("--out", help="also write the summary as CSV")

    p = sub.add_parser("curate", help="dedup, stratify-sample, split holdout")
    p.add_argument("data")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--plan", help="curation plan JSON (default: built-in targets)")
    p.add_argument("--seed", type=int, default=None,
                   help="overrides the plan seed")
    p.add_argument("--holdout", type=int, default=None,
                   help="overrides the plan holdout size")
    p.add_argument("--unknown-label", default="error",
                   choices=("error", "skip", "normal", "dos", "u2r", "r2l", "probe"))
    p.add_argument("--on-error", choices=("abort", "skip"), default="abort")

    p = sub.add_parser("train", help="train one classifier on curated records")
    p.add_argument("--data", help="curated training records")
    p.add_argument("--model", choices=KINDS, dest="kind")
    p.add_argument("--out", help="model file to write")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--target", choices=(CATEGORY, FINE), default=None)
    p.add_argument("--config", help="experiment config JSON supplying defaults")
    p.add_argument("--unknown-label", default="error",
                   choices=("error", "skip", "normal", "dos", "u2r", "r2l", "probe"))
    p.add_argument("--log", help="write training progress log to this file")
    # tree hyperparameters
    p.add_argument("--criterion", choices=(dtree_mod.INFO_GAIN, dtree_mod.GAIN_RATIO),
                   default=dtree_mod.GAIN_RATIO)
    p.add_argument("--min-leaf", type=int, default=2)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--no-prune", action="store_true")
    p.add_argument("--confidence", type=float, default=0.25)
    # mlp hyperparameters
    p.add_argument("--hidden", help="comma-separated hidden widths")
    p.add_argument("--learning-rate", type=float, default=0.3)
    p.add_argument("--momentum", type=float, default=0.2)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--init-scale", type=float, default=0.5)
    p.add_argument("--max-instances", type=int, default=None,
                   help="subsample the training set (recorded in the report)")
    # bayes hyperparameters
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=10)

    p = sub.add_parser("evaluate", help="score a saved model on a record file")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--name", default=None, help="model name in the report")
    p.add_argument("--unknown-label", default="error",
                   choices=("error", "skip", "normal", "dos", "u2r", "r2l", "probe"))

    p = sub.add_parser("compare", help="side-by-side report across models")
    p.add_argument("models", nargs="+")
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--unknown-label", default="error",
                   choices=("error", "skip", "normal", "dos", "u2r", "r2l", "probe"))
    return parser


def _load_records(path, on_error: str = "abort", policy=None):
    """Read all records from a file, optionally dropping unknown labels."""
    schema = FeatureSchema.kdd99()
    stream, summary = load_dataset(resolve_data_path(path), schema, on_error=on_error)
    if policy is None or policy.kind != "skip":
        records = list(stream)
        skipped_unknown = 0
    else:
        records = []
        skipped_unknown = 0
        for rec in stream:
            if label_to_category(rec.label, SKIP_POLICY) is None:
                skipped_unknown += 1
            else:
                records.append(rec)
    return records, summary, skipped_unknown, schema


def _summary_table(summary: DatasetSummary) -> str:
    lines = [f"{'label':<18} {'count':>10}  category"]
    for label, count in sorted(
        summary.per_label.items(), key=lambda kv: (-kv[1], kv[0])
    ):
        cat = label_to_category(label, SKIP_POLICY)
        cat_name = cat.value if cat is not None else "(unknown)"
        lines.append(f"{label:<18} {count:>10}  {cat_name}")
    lines.append(f"{'TOTAL':<18} {summary.total:>10}")
    parts = [f"{c.value}={summary.per_category.get(c, 0)}"
             for c in AttackCategory]
    lines.append("per-category: " + " ".join(parts))
    if summary.uncategorized:
        lines.append(f"uncategorized: {summary.uncategorized}")
    if summary.malformed:
        lines.append(f"malformed lines skipped: {summary.malformed}")
    return "\n".join(lines) + "\n"


def _summary_csv(summary: DatasetSummary) -> str:
    lines = ["label,count,category"]
    for label, count in sorted(summary.per_label.items()):
        cat = label_to_category(label, SKIP_POLICY)
        lines.append(f"{label},{count},{cat.value if cat else ''}")
    lines.append(f"__total__,{summary.total},")
    return "\n".join(lines) + "\n"


def cmd_summarize(args, artifacts: _Artifacts) -> int:
    schema = FeatureSchema.kdd99()
    summary = summarize_file(resolve_data_path(args.data), schema,
                             on_error=args.on_error)
    sys.stdout.write(_summary_table(summary))
    if args.out:
        artifacts.write_text(Path(args.out), _summary_csv(summary))
    return EXIT_OK


def cmd_curate(args, artifacts: _Artifacts) -> int:
    if args.plan:
        plan = CurationPlan.from_json(Path(resolve_data_path(args.plan)).read_text())
    else:
        plan = CurationPlan.default()
    if args.seed is not None:
        plan.seed = args.seed
    if args.holdout is not None:
        plan.holdout_size = args.holdout
    policy = parse_policy(args.unknown_label)

    records, summary, skipped_unknown, schema = _load_records(
        args.data, on_error=args.on_error, policy=policy
    )
    if policy.kind == "error":
        for rec in records:
            label_to_category(rec.label, policy)

    pool = deduplicate(records)
    curated = stratified_sample(pool, plan)

    sampled_keys = {id(r) for r in curated.records}
    leftover = [r for r in pool if id(r) not in sampled_keys]
    _, holdout = split_holdout(leftover, plan.holdout_size, plan.seed)

    outdir = Path(args.out)
    train_path = artifacts.track(outdir / "train.csv")
    write_records(curated.records, train_path)
    holdout_path = artifacts.track(outdir / "holdout.csv")
    write_records(holdout, holdout_path)

    provenance = {
        "plan": json.loads(plan.to_json()),
        "seed": plan.seed,
        "config_hash": config_hash(
            {"plan": plan.to_json(), "unknown_label": args.unknown_label}
        ),
        "input": {
            "total": summary.total,
            "malformed_skipped": summary.malformed,
            "unknown_label_skipped": skipped_unknown,
            "distinct_after_dedup": len(pool),
        },
        "shortfalls": {
            k: {"target": t, "available": a}
            for k, (t, a) in sorted(curated.shortfalls.items())
        },
        "train_counts": dict(sorted(curated.summary.per_label.items())),
        "train_total": curated.summary.total,
        "holdout_total": len(holdout),
    }
    artifacts.write_text(
        outdir / "provenance.json",
        json.dumps(provenance, indent=2, sort_keys=True) + "\n",
    )
    print(
        f"curated {curated.summary.total} training and {len(holdout)} holdout "
        f"records from {len(pool)} distinct (seed {plan.seed})"
    )
    if curated.shortfalls:
        print(f"shortfalls: {len(curated.shortfalls)} labels under target")
    return EXIT_OK


def _merge_experiment_config(args) -> None:
    """Fill unset train flags from an experiment config document.

    Explicit command-line flags win over config values.
    """
    doc = json.loads(Path(resolve_data_path(args.config)).read_text())
    for key, attr in (("dataset", "data"), ("classifier", "kind"),
                      ("target", "target"), ("seed", "seed"), ("out", "out")):
        if key in doc and getattr(args, attr) is None:
            setattr(args, attr, doc[key])
    for key, value in doc.get("classifier_config", {}).items():
        attr = key.replace("-", "_")
        if hasattr(args, attr):
            setattr(args, attr, value)


def cmd_train(args, artifacts: _Artifacts) -> int:
    if args.config:
        _merge_experiment_config(args)
    if args.seed is None:
        args.seed = 0
    if args.target is None:
        args.target = CATEGORY
    for attr, flag in (("data", "--data"), ("kind", "--model"), ("out", "--out")):
        if getattr(args, attr) is None:
            raise UsageError(f"{flag} is required (flag or experiment config)")
    if args.kind not in KINDS:
        raise UsageError(f"unknown classifier {args.kind!r}")
    if args.log:
        handler = logging.FileHandler(args.log, mode="w")
        handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(message)s"))
        logging.getLogger("kddids").addHandler(handler)
        logging.getLogger("kddids").setLevel(logging.INFO)

    policy = parse_policy(args.unknown_label)
    records, _, _, schema = _load_records(args.data, policy=policy)

    tree_config = dtree_mod.GrowConfig(
        criterion=args.criterion,
        min_leaf=args.min_leaf,
        max_depth=args.max_depth,
        pruning=dtree_mod.PRUNE_OFF if args.no_prune else dtree_mod.PRUNE_PESSIMISTIC,
        confidence=args.confidence,
    )
    mlp_config = mlp_mod.TrainConfig(
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        epochs=args.epochs,
        seed=derive_seed(args.seed, "mlp.init"),
        init_scale=args.init_scale,
    )
    hidden = None
    if args.hidden:
        hidden = tuple(int(x) for x in args.hidden.split(","))

    trained, seconds = train_model(
        kind=args.kind,
        records=records,
        schema=schema,
        seed=args.seed,
        target=args.target,
        policy=policy,
        tree_config=tree_config,
        mlp_config=mlp_config,
        hidden_widths=hidden,
        bayes_config=bayes_mod.SmoothingConfig(alpha=args.alpha),
        n_bins=args.bins,
        max_instances=args.max_instances,
    )
    out = artifacts.track(Path(args.out))
    save_model(trained, out)
    print(f"trained {args.kind} on {len(records)} records in {seconds:.1f} s "
          f"-> {out}")
    return EXIT_OK


def _report_base(name: str, test_path: str, seed) -> str:
    stem = Path(test_path).name.split(".")[0]
    return f"{name}__{stem}__seed{seed}"


def _write_report_files(report, outdir: Path, base: str,
                        artifacts: _Artifacts) -> None:
    artifacts.write_text(outdir / f"{base}.report.txt", render_text(report))
    artifacts.write_text(outdir / f"{base}.report.csv", render_csv(report))
    artifacts.write_text(outdir / f"{base}.metrics.kv", render_kv(report))
    save_confusion_heatmap(
        report.matrix,
        artifacts.track(outdir / f"{base}.confusion.png"),
        title=report.display_name,
    )
    save_class_rates(report, artifacts.track(outdir / f"{base}.rates.png"))


def cmd_evaluate(args, artifacts: _Artifacts) -> int:
    trained = load_model(resolve_data_path(args.model))
    policy = parse_policy(args.unknown_label)
    records, _, _, schema = _load_records(args.test, policy=policy)
    name = args.name or Path(args.model).stem
    report = evaluate_model(trained, records, schema, model_name=name,
                            policy=policy)
    outdir = Path(args.out)
    base = _report_base(name, args.test, trained.seeds.get("train", 0))
    _write_report_files(report, outdir, base, artifacts)
    sys.stdout.write(render_text(report, include_timing=True))
    return EXIT_OK


def cmd_compare(args, artifacts: _Artifacts) -> int:
    policy = parse_policy(args.unknown_label)
    records, _, _, schema = _load_records(args.test, policy=policy)
    reports = []
    for model_path in sorted(args.models, key=lambda p: Path(p).stem):
        trained = load_model(resolve_data_path(model_path))
        name = Path(model_path).stem
        reports.append(
            evaluate_model(trained, records, schema, model_name=name,
                           policy=policy)
        )
    outdir = Path(args.out)
    artifacts.write_text(outdir / "comparison.txt", render_comparison(reports))
    artifacts.write_text(outdir / "comparison.csv", comparison_csv(reports))
    save_comparison(reports, artifacts.track(outdir / "comparison.png"))
    sys.stdout.write(render_comparison(reports))
    return EXIT_OK


_COMMANDS = {
    "summarize": cmd_summarize,
    "curate": cmd_curate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit status."""
    parser = build_parser()
    artifacts = _Artifacts()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, artifacts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        artifacts.discard_all()
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        artifacts.discard_all()
        raise
    except Exception as exc:  # pragma: no cover - defensive
        artifacts.discard_all()
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING)
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
