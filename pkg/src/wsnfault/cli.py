"""Command-line entry point.

Subcommands: prepare, pca, train, eval, crossval, inject, compare, report.
Flags are long-form only. Resolution order: values from --config override
explicit flags, which override built-in defaults. Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure. Failures print one
machine-readable JSON record to stderr naming the failing stage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dataset as ds
from . import metrics as mx
from . import pca as pc
from .errors import ConfigError, DataError, NumericalError, WsnFaultError
from .pipeline import (
    PipelineConfig,
    StageError,
    dump_json,
    evaluate_split,
    mark_failed,
    parse_synthetic_spec,
    run_compare,
    run_crossval,
    run_pipeline,
    write_csv,
)
from .trainer import TrainedModel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

OUT_DIR_ENV = "WSNFAULT_OUT"

_UNSET = argparse.SUPPRESS  # flags the user did not pass stay absent


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the normal error path."""

    def error(self, message):
        raise ConfigError(message)


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", dest="data_path", default=_UNSET,
                   help="path to a delimited dataset with a header row")
    p.add_argument("--synthetic", default=_UNSET,
                   help="synthetic spec, e.g. wsn:n=4688,seed=0 or blob:n=200,features=12,sep=3.0,seed=7")
    p.add_argument("--label-column", dest="label_column", default=_UNSET,
                   help="name of the label column (default: label)")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pca-threshold", dest="pca_threshold", type=float, default=_UNSET,
                   help="cumulative variance threshold for component selection (default 0.995)")
    p.add_argument("--hidden-layers", dest="hidden_layers", default=_UNSET,
                   help="comma-separated hidden layer sizes (default 8,7,6,5,4,3)")
    p.add_argument("--optimizer", default=_UNSET, choices=("goa", "pso"))
    p.add_argument("--population", type=int, default=_UNSET)
    p.add_argument("--iterations", type=int, default=_UNSET)
    p.add_argument("--weight-bound", dest="weight_bound", type=float, default=_UNSET,
                   help="half-width of the symmetric weight search box (default 5)")
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=_UNSET)
    p.add_argument("--val-fraction", dest="val_fraction", type=float, default=_UNSET,
                   help="validation fraction carved from the train side (default 0.25)")
    p.add_argument("--seed", type=int, default=_UNSET)
    p.add_argument("--paper-faithful", dest="paper_faithful", action="store_true", default=_UNSET,
                   help="fit scaler and projection on the full dataset before splitting")


def _add_fault_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fault-kind", dest="fault_kind", default=_UNSET,
                   choices=tuple(k.value for k in ds.FaultKind))
    p.add_argument("--fault-magnitude", dest="fault_magnitude", type=float, default=_UNSET)
    p.add_argument("--fault-columns", dest="fault_columns", default=_UNSET,
                   help="comma-separated feature column indices")
    p.add_argument("--fault-fraction", dest="fault_fraction", type=float, default=_UNSET)
    p.add_argument("--fault-seed", dest="fault_seed", type=int, default=_UNSET)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", dest="out_dir", default=_UNSET,
                   help=f"output directory (default: ${OUT_DIR_ENV} or current directory)")
    p.add_argument("--config", dest="config_file", default=None,
                   help="JSON config; its values override flags (artifact files with an "
                        "embedded 'config' key are accepted)")


def build_parser() -> _Parser:
    parser = _Parser(prog="wsnfault", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="normalize and split a dataset into partition files")
    for add in (_add_dataset_flags, _add_run_flags, _add_common):
        add(p)

    p = sub.add_parser("pca", help="fit the projection and emit the eigenvalue curve")
    for add in (_add_dataset_flags, _add_run_flags, _add_common):
        add(p)

    p = sub.add_parser("train", help="run the full pipeline and write all artifacts")
    for add in (_add_dataset_flags, _add_run_flags, _add_fault_flags, _add_common):
        add(p)

    p = sub.add_parser("eval", help="evaluate a saved model on a dataset")
    p.add_argument("--model", required=True, help="path to a trained model JSON")
    for add in (_add_dataset_flags, _add_fault_flags, _add_common):
        add(p)

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation with repeats")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=5)
    for add in (_add_dataset_flags, _add_run_flags, _add_common):
        add(p)

    p = sub.add_parser("inject", help="write a fault-injected copy of a dataset")
    for add in (_add_dataset_flags, _add_fault_flags, _add_common):
        add(p)

    p = sub.add_parser("compare", help="train with several optimizers on shared seeds")
    p.add_argument("--optimizers", default="goa,pso", help="comma-separated optimizer names")
    p.add_argument("--runs", type=int, default=10, help="number of shared seeds")
    for add in (_add_dataset_flags, _add_run_flags, _add_common):
        add(p)

    p = sub.add_parser("report", help="summarize a report JSON and extract its tables")
    p.add_argument("--report", required=True, help="path to a report JSON artifact")
    _add_common(p)

    return parser


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated integers, got {text!r}") from None


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Merge defaults, explicit flags and the config file (highest priority)."""
    field_names = set(PipelineConfig.__dataclass_fields__)
    merged = {k: v for k, v in vars(args).items() if k in field_names}
    if isinstance(merged.get("hidden_layers"), str):
        merged["hidden_layers"] = _parse_int_list(merged["hidden_layers"], "--hidden-layers")
    if isinstance(merged.get("fault_columns"), str):
        merged["fault_columns"] = _parse_int_list(merged["fault_columns"], "--fault-columns")

    config_file = getattr(args, "config_file", None)
    if config_file:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if isinstance(loaded, dict) and "config" in loaded and "schema_version" in loaded:
            loaded = loaded["config"]
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        merged.update(loaded)

    if "out_dir" not in merged:
        merged["out_dir"] = os.environ.get(OUT_DIR_ENV, ".")
    try:
        return PipelineConfig.from_dict(merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _emit_error(stage: str, error: BaseException) -> None:
    cause = error.cause if isinstance(error, StageError) else error
    record = {
        "stage": stage,
        "error": type(cause).__name__,
        "message": str(cause),
    }
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _exit_code_for(error: BaseException) -> int:
    cause = error.cause if isinstance(error, StageError) else error
    if isinstance(cause, ConfigError):
        return EXIT_USAGE
    if isinstance(cause, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(cause, DataError):
        return EXIT_DATA
    return EXIT_DATA


# -- subcommand bodies -------------------------------------------------------

def _cmd_prepare(config: PipelineConfig) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = resolve_dataset_stage(config)
    try:
        train_part, val_part, test_part = ds.stratified_split(
            data, config.train_fraction, config.val_fraction, config.seed
        )
        if config.paper_faithful:
            _, scaler = ds.min_max_normalize(data)
        else:
            _, scaler = ds.min_max_normalize(train_part)

        def normalized(part):
            return ds.LabeledDataset(
                scaler.transform(part.features), part.labels, part.feature_names, part.source
            )

        for name, part in (("train", train_part), ("val", val_part), ("test", test_part)):
            ds.save_dataset(normalized(part), out / f"{name}.csv", config.label_column)
        scaler_doc = {
            "schema_version": 1,
            "kind": "minmax_scaler",
            "config": config.to_dict(),
            **scaler.to_dict(),
        }
        dump_json(scaler_doc, out / "scaler.json")
    except WsnFaultError as exc:
        raise StageError("normalize", exc) from exc
    print(f"wrote train/val/test partitions and scaler.json to {out}")
    return EXIT_OK


def _cmd_pca(config: PipelineConfig) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = resolve_dataset_stage(config)
    try:
        _, scaler = ds.min_max_normalize(data)
        model = pc.fit_pca(scaler.transform(data.features), config.pca_threshold)
    except WsnFaultError as exc:
        raise StageError("pca", exc) from exc
    doc = {
        "schema_version": 1,
        "kind": "pca_model",
        "config": config.to_dict(),
        **model.to_dict(),
    }
    dump_json(doc, out / "pca_model.json")
    cumulative = pc.cumulative_variance(model)
    write_csv(
        out / "eigencurve.csv",
        config.to_dict(),
        ["component", "cumulative_variance_fraction"],
        [(i + 1, float(v)) for i, v in enumerate(cumulative)],
    )
    print(f"retained {model.retained} of {model.n_features} components; wrote {out}/eigencurve.csv")
    return EXIT_OK


def resolve_dataset_stage(config: PipelineConfig):
    from .pipeline import resolve_dataset

    try:
        return resolve_dataset(config)
    except WsnFaultError as exc:
        raise StageError("load", exc) from exc


def _cmd_train(config: PipelineConfig) -> int:
    result = run_pipeline(config)
    metrics = result.report["metrics"]
    print(
        f"retained={result.report['retained_components']} "
        f"test accuracy={metrics['accuracy']:.4f} auc={result.report['auc']:.4f} "
        f"-> {config.out_dir}"
    )
    return EXIT_OK


def _cmd_eval(config: PipelineConfig, model_path: str) -> int:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        model = TrainedModel.load(model_path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise StageError("load", DataError(f"cannot read model {model_path}: {exc}")) from exc
    data = resolve_dataset_stage(config)
    try:
        if config.fault_kind is not None:
            kind = ds.FaultKind(config.fault_kind)
            magnitude = config.fault_magnitude
            if magnitude is None:
                magnitude = ds.DEFAULT_FAULT_MAGNITUDES[kind]
            normalized = ds.LabeledDataset(
                model.scaler.transform(data.features) if model.scaler else data.features,
                data.labels, data.feature_names, data.source,
            )
            spec = ds.FaultSpec(kind, magnitude, config.fault_columns or (0,),
                                config.fault_fraction, config.fault_seed)
            faulted = ds.inject_fault(normalized, spec)
            features = faulted.features
            if model.pca is not None:
                features = pc.transform(model.pca, features)
            evaluation = evaluate_split(model, features, faulted.labels)
        else:
            predicted, scores = model.predict_raw(data.features)
            counts = mx.confusion(data.labels, predicted)
            roc = mx.roc_auc(scores, data.labels)
            evaluation = {
                "confusion": counts.to_dict(),
                "metrics": mx.classification_metrics(counts).to_dict(),
                "auc": roc.auc,
                "roc_points": [[x, y] for x, y in roc.points],
            }
    except WsnFaultError as exc:
        raise StageError("evaluate", exc) from exc
    report = {
        "schema_version": 1,
        "kind": "evaluation_report",
        "config": config.to_dict(),
        "model_path": str(model_path),
        "dataset": {"source": data.source, "n_samples": data.n_samples},
        "per_fold": [],
        "stats": None,
        "t_tests": [],
        **evaluation,
    }
    dump_json(report, out / "eval_report.json")
    write_csv(out / "roc.csv", config.to_dict(), ["fpr", "tpr"],
              [tuple(p) for p in evaluation["roc_points"]])
    print(f"accuracy={evaluation['metrics']['accuracy']:.4f} auc={evaluation['auc']:.4f} -> {out}")
    return EXIT_OK


def _cmd_crossval(config: PipelineConfig, folds: int, repeats: int) -> int:
    report = run_crossval(config, folds, repeats)
    rendered = report["stats"]["accuracy"]["rendered"]
    print(f"{folds}-fold x {repeats} repeats: accuracy {rendered} -> {config.out_dir}")
    return EXIT_OK


def _cmd_inject(config: PipelineConfig) -> int:
    if config.fault_kind is None:
        raise ConfigError("--fault-kind is required for inject")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = resolve_dataset_stage(config)
    try:
        kind = ds.FaultKind(config.fault_kind)
        magnitude = config.fault_magnitude
        if magnitude is None:
            magnitude = ds.DEFAULT_FAULT_MAGNITUDES[kind]
        spec = ds.FaultSpec(kind, magnitude, config.fault_columns or (0,),
                            config.fault_fraction, config.fault_seed)
        faulted = ds.inject_fault(data, spec)
        ds.save_dataset(faulted, out / "injected.csv", config.label_column)
    except WsnFaultError as exc:
        raise StageError("inject", exc) from exc
    print(f"wrote {out}/injected.csv ({kind.value}, fraction {config.fault_fraction})")
    return EXIT_OK


def _cmd_compare(config: PipelineConfig, optimizers: str, runs: int) -> int:
    names = [n.strip() for n in optimizers.split(",") if n.strip()]
    report = run_compare(config, names, runs)
    for name in names:
        s = report["summary"][name]
        print(
            f"{name}: mean accuracy {s['mean_accuracy']:.4f}, "
            f"mean plateau iteration {s['mean_plateau_iteration']:.1f}"
        )
    print(f"-> {config.out_dir}")
    return EXIT_OK


def _cmd_report(report_path: str, out_dir: str | None) -> int:
    path = Path(report_path)
    if not path.is_file():
        raise StageError("load", DataError(f"report not found: {path}"))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise StageError("load", DataError(f"{path} is not valid JSON: {exc}")) from exc

    lines = [f"kind: {doc.get('kind', 'unknown')} (schema {doc.get('schema_version', '?')})"]
    if "metrics" in doc and doc["metrics"]:
        for name, value in sorted(doc["metrics"].items()):
            if isinstance(value, float):
                lines.append(f"  {name}: {100.0 * value:.2f}%")
    if doc.get("auc") is not None:
        lines.append(f"  auc: {doc['auc']:.4f}")
    if doc.get("confusion"):
        c = doc["confusion"]
        lines.append(f"  confusion: tp={c['tp']} tn={c['tn']} fp={c['fp']} fn={c['fn']}")
    if doc.get("stats"):
        lines.append("  per-metric mean ± std:")
        for name, s in sorted(doc["stats"].items()):
            lines.append(f"    {name}: {s['rendered']}")
    if doc.get("per_fold"):
        lines.append(f"  folds: {len(doc['per_fold'])}")
    print("\n".join(lines))

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cfg = doc.get("config", {})
        if doc.get("per_fold"):
            write_csv(
                out / "folds.csv",
                cfg,
                ["repeat", "fold", "accuracy", "precision", "recall", "f1", "auc"],
                [
                    (f["repeat"], f["fold"], f["metrics"]["accuracy"], f["metrics"]["precision"],
                     f["metrics"]["recall"], f["metrics"]["f1"], f["auc"])
                    for f in doc["per_fold"]
                ],
            )
        if doc.get("roc_points"):
            write_csv(out / "roc.csv", cfg, ["fpr", "tpr"],
                      [tuple(p) for p in doc["roc_points"]])
        if doc.get("metrics"):
            write_csv(out / "metrics.csv", cfg, ["metric", "value"],
                      sorted((k, v) for k, v in doc["metrics"].items() if isinstance(v, (int, float))))
    return EXIT_OK


def main(argv=None) -> int:
    out_dir_hint = None
    try:
        args = build_parser().parse_args(argv)
        if args.command == "report":
            return _cmd_report(args.report, vars(args).get("out_dir"))
        config = resolve_config(args)
        out_dir_hint = config.out_dir
        if args.command == "prepare":
            return _cmd_prepare(config)
        if args.command == "pca":
            return _cmd_pca(config)
        if args.command == "train":
            return _cmd_train(config)
        if args.command == "eval":
            return _cmd_eval(config, args.model)
        if args.command == "crossval":
            return _cmd_crossval(config, args.folds, args.repeats)
        if args.command == "inject":
            return _cmd_inject(config)
        if args.command == "compare":
            return _cmd_compare(config, args.optimizers, args.runs)
        raise ConfigError(f"unknown command {args.command!r}")
    except StageError as exc:
        _emit_error(exc.stage, exc)
        code = _exit_code_for(exc)
        if out_dir_hint is not None:
            mark_failed(out_dir_hint, {
                "stage": exc.stage,
                "error": type(exc.cause).__name__,
                "message": str(exc.cause),
            })
        return code
    except ConfigError as exc:
        _emit_error("usage", exc)
        return EXIT_USAGE
    except WsnFaultError as exc:
        _emit_error("run", exc)
        if out_dir_hint is not None:
            mark_failed(out_dir_hint, {
                "stage": "run",
                "error": type(exc).__name__,
                "message": str(exc),
            })
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
