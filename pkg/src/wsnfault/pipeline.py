"""End-to-end orchestration: load, normalize, split, project, train, evaluate.

Every artifact embeds the fully resolved configuration and all seeds, so any
output can be regenerated byte-identically from its own header. Failures are
wrapped in :class:`StageError` naming the stage that died.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import metrics as mx
from . import pca as pc
from .errors import ConfigError, WsnFaultError
from .network import NetworkSpec
from .swarm import GoaConfig, PsoConfig
from .trainer import (
    OptimizerKind,
    TrainedModel,
    TrainingTask,
    default_bounds,
    train,
)

SCHEMA_VERSION = 1


class StageError(WsnFaultError):
    """Wraps a failure with the pipeline stage it happened in."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    """Fully deterministic run plan; serialized verbatim into every output."""

    data_path: str | None = None
    synthetic: str | None = None
    label_column: str = "label"
    pca_threshold: float = 0.995
    hidden_layers: tuple[int, ...] = (8, 7, 6, 5, 4, 3)
    optimizer: str = "goa"
    population: int = 100
    iterations: int = 150
    weight_bound: float = 5.0
    train_fraction: float = 0.4
    val_fraction: float = 0.25
    seed: int = 0
    paper_faithful: bool = False
    fault_kind: str | None = None
    fault_magnitude: float | None = None
    fault_columns: tuple[int, ...] = ()
    fault_fraction: float = ds.DEFAULT_AFFECTED_FRACTION
    fault_seed: int = 0
    out_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        object.__setattr__(self, "fault_columns", tuple(int(c) for c in self.fault_columns))
        if self.optimizer not in ("goa", "pso"):
            raise ConfigError(f"optimizer must be 'goa' or 'pso', got {self.optimizer!r}")
        if self.data_path is None and self.synthetic is None:
            raise ConfigError("either a dataset path or a synthetic spec is required")
        if self.data_path is not None and self.synthetic is not None:
            raise ConfigError("dataset path and synthetic spec are mutually exclusive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_layers"] = list(self.hidden_layers)
        d["fault_columns"] = list(self.fault_columns)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def parse_synthetic_spec(spec: str) -> ds.LabeledDataset:
    """Build a synthetic dataset from a spec string.

    Forms: ``wsn:n=4688,seed=0[,faulty_fraction=0.5]`` or
    ``blob:n=200,features=12,sep=3.0,seed=7``.
    """
    kind, _, args = spec.partition(":")
    params: dict[str, str] = {}
    if args:
        for pair in args.split(","):
            key, eq, value = pair.partition("=")
            if not eq:
                raise ConfigError(f"bad synthetic parameter {pair!r} in {spec!r}")
            params[key.strip()] = value.strip()
    try:
        if kind == "wsn":
            return ds.synthesize_wsn_dataset(
                n_samples=int(params.get("n", 4688)),
                seed=int(params.get("seed", 0)),
                faulty_fraction=float(params.get("faulty_fraction", 0.5)),
            )
        if kind == "blob":
            return ds.synthesize_dataset(
                n_samples=int(params.get("n", 200)),
                n_features=int(params.get("features", 12)),
                class_separation=float(params.get("sep", 3.0)),
                seed=int(params.get("seed", 0)),
            )
    except ValueError as exc:
        raise ConfigError(f"bad synthetic spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown synthetic kind {kind!r} (expected wsn or blob)")


def resolve_dataset(config: PipelineConfig) -> ds.LabeledDataset:
    if config.data_path is not None:
        return ds.load_dataset(config.data_path, config.label_column)
    return parse_synthetic_spec(config.synthetic)


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


# -- artifact writing --------------------------------------------------------

def dump_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def write_csv(path: Path, config_dict: dict, header: list[str], rows) -> None:
    """Two-line provenance header (config JSON) then plain CSV."""
    lines = ["# config: " + json.dumps(config_dict, sort_keys=True)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def mark_failed(out_dir: str | Path, record: dict) -> None:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        dump_json(record, out / ".failed")
    except OSError:
        pass  # cannot even write the marker; the exit code still reports it


# -- evaluation helpers ------------------------------------------------------

def evaluate_split(model: TrainedModel, features: np.ndarray, labels: np.ndarray) -> dict:
    predicted, scores = model.predict(features)
    counts = mx.confusion(labels, predicted)
    metric_set = mx.classification_metrics(counts)
    roc = mx.roc_auc(scores, labels)
    return {
        "confusion": counts.to_dict(),
        "metrics": metric_set.to_dict(),
        "auc": roc.auc,
        "roc_points": [[x, y] for x, y in roc.points],
    }


def plateau_iteration(curve: np.ndarray, rtol: float = 0.01) -> int:
    """First iteration whose best-so-far is within ``rtol`` of the total descent."""
    curve = np.asarray(curve, dtype=float)
    final = curve[-1]
    span = curve[0] - final
    if span <= 0:
        return 0
    target = final + rtol * span
    return int(np.argmax(curve <= target))


@dataclass(frozen=True)
class PipelineResult:
    config: PipelineConfig
    model: TrainedModel
    report: dict
    spec: NetworkSpec


def _prepare(config: PipelineConfig, data: ds.LabeledDataset, seed: int):
    """Split and fit preprocessing; returns projected partitions and artifacts.

    Default: scaler and projection statistics come from the train partition
    only. ``paper_faithful`` restores the published order of fitting the
    preprocessing on the full dataset before splitting.
    """
    train_part, val_part, test_part = _stage(
        "split", ds.stratified_split, data, config.train_fraction, config.val_fraction, seed
    )
    if config.paper_faithful:
        _, scaler = _stage("normalize", ds.min_max_normalize, data)
        pca = _stage("pca", pc.fit_pca, scaler.transform(data.features), config.pca_threshold)
    else:
        normalized_train, scaler = _stage("normalize", ds.min_max_normalize, train_part)
        pca = _stage("pca", pc.fit_pca, normalized_train.features, config.pca_threshold)

    def project(part: ds.LabeledDataset) -> ds.LabeledDataset:
        projected = pc.transform(pca, scaler.transform(part.features))
        names = tuple(f"pc{i}" for i in range(pca.retained))
        return ds.LabeledDataset(projected, part.labels, names, part.source)

    return (
        (train_part, val_part, test_part),
        (project(train_part), project(val_part), project(test_part)),
        scaler,
        pca,
    )


def _train_model(config: PipelineConfig, projected, scaler, pca, seed: int) -> tuple[TrainedModel, NetworkSpec]:
    train_proj, val_proj, _ = projected
    spec = NetworkSpec((pca.retained, *config.hidden_layers, 2))
    lower, upper = default_bounds(spec, config.weight_bound)
    if config.optimizer == "goa":
        opt_config = GoaConfig(
            lower, upper, population=config.population, iterations=config.iterations, seed=seed
        )
    else:
        opt_config = PsoConfig(
            lower, upper, population=config.population, iterations=config.iterations, seed=seed
        )
    task = TrainingTask(
        spec=spec,
        train_set=train_proj,
        val_set=val_proj,
        optimizer=OptimizerKind(config.optimizer),
        optimizer_config=opt_config,
        seed=seed,
        pca=pca,
        scaler=scaler,
    )
    return _stage("train", train, task), spec


def run_pipeline(config: PipelineConfig) -> PipelineResult:
    """Load, preprocess, train and evaluate; write all report artifacts."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()

    data = _stage("load", resolve_dataset, config)
    raw_parts, projected, scaler, pca = _prepare(config, data, config.seed)
    model, spec = _train_model(config, projected, scaler, pca, config.seed)

    train_proj, val_proj, test_proj = projected
    train_side_features = np.vstack([train_proj.features, val_proj.features])
    train_side_labels = np.concatenate([train_proj.labels, val_proj.labels])
    train_eval = _stage("evaluate", evaluate_split, model, train_side_features, train_side_labels)
    test_eval = _stage("evaluate", evaluate_split, model, test_proj.features, test_proj.labels)

    fault_eval = None
    if config.fault_kind is not None:
        fault_eval = _stage("evaluate", _evaluate_with_fault, config, model, raw_parts[2], scaler, pca)

    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "evaluation_report",
        "config": cfg,
        "dataset": {
            "source": data.source,
            "n_samples": data.n_samples,
            "n_features": data.n_features,
            "partition_sizes": {
                "train": raw_parts[0].n_samples,
                "val": raw_parts[1].n_samples,
                "test": raw_parts[2].n_samples,
            },
        },
        "retained_components": pca.retained,
        "confusion": test_eval["confusion"],
        "metrics": test_eval["metrics"],
        "auc": test_eval["auc"],
        "roc_points": test_eval["roc_points"],
        "train": {k: train_eval[k] for k in ("confusion", "metrics", "auc")},
        "fault": fault_eval,
        "per_fold": [],
        "stats": None,
        "t_tests": [],
    }

    def write_artifacts():
        model_doc = model.to_dict()
        model_doc["config"] = cfg
        dump_json(model_doc, out / "model.json")
        dump_json(report, out / "report.json")
        write_csv(
            out / "convergence.csv",
            cfg,
            ["iteration", "best_cost"],
            list(enumerate(model.run.convergence.tolist())),
        )
        cumulative = pc.cumulative_variance(pca)
        write_csv(
            out / "eigencurve.csv",
            cfg,
            ["component", "cumulative_variance_fraction"],
            [(i + 1, float(v)) for i, v in enumerate(cumulative)],
        )
        write_csv(
            out / "roc.csv",
            cfg,
            ["fpr", "tpr"],
            [tuple(p) for p in report["roc_points"]],
        )

    _stage("write", write_artifacts)
    return PipelineResult(config=config, model=model, report=report, spec=spec)


def _evaluate_with_fault(config: PipelineConfig, model, test_part, scaler, pca) -> dict:
    kind = ds.FaultKind(config.fault_kind)
    magnitude = config.fault_magnitude
    if magnitude is None:
        magnitude = ds.DEFAULT_FAULT_MAGNITUDES[kind]
    columns = config.fault_columns or (0,)
    normalized_test = ds.LabeledDataset(
        scaler.transform(test_part.features),
        test_part.labels,
        test_part.feature_names,
        test_part.source,
    )
    spec = ds.FaultSpec(kind, magnitude, columns, config.fault_fraction, config.fault_seed)
    faulted = ds.inject_fault(normalized_test, spec)
    projected = pc.transform(pca, faulted.features)
    result = evaluate_split(model, projected, faulted.labels)
    result["fault_spec"] = {
        "kind": kind.value,
        "magnitude": magnitude,
        "target_columns": list(columns),
        "affected_fraction": config.fault_fraction,
        "seed": config.fault_seed,
    }
    del result["roc_points"]
    return result


def run_crossval(config: PipelineConfig, k: int, repeats: int) -> dict:
    """Stratified k-fold cross-validation repeated with shifted seeds."""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()

    data = _stage("load", resolve_dataset, config)
    per_fold = []
    for repeat in range(repeats):
        seed = config.seed + repeat
        folds = _stage("split", ds.stratified_kfold, data, k, seed)
        for fold_index, (fold_train, fold_test) in enumerate(folds):
            train_part, val_part = _stage(
                "split", ds.carve_validation, fold_train, config.val_fraction, seed
            )
            if config.paper_faithful:
                _, scaler = _stage("normalize", ds.min_max_normalize, data)
                pca = _stage(
                    "pca", pc.fit_pca, scaler.transform(data.features), config.pca_threshold
                )
            else:
                normalized_train, scaler = _stage("normalize", ds.min_max_normalize, train_part)
                pca = _stage("pca", pc.fit_pca, normalized_train.features, config.pca_threshold)

            def project(part):
                projected = pc.transform(pca, scaler.transform(part.features))
                names = tuple(f"pc{i}" for i in range(pca.retained))
                return ds.LabeledDataset(projected, part.labels, names, part.source)

            model, _ = _train_model(
                config, (project(train_part), project(val_part), None), scaler, pca, seed
            )
            test_proj = project(fold_test)
            evaluation = _stage(
                "evaluate", evaluate_split, model, test_proj.features, test_proj.labels
            )
            per_fold.append(
                {
                    "repeat": repeat,
                    "fold": fold_index,
                    "seed": seed,
                    "confusion": evaluation["confusion"],
                    "metrics": evaluation["metrics"],
                    "auc": evaluation["auc"],
                }
            )

    stats = {}
    for name in ("accuracy", "precision", "recall", "f1"):
        values = np.array([fold["metrics"][name] for fold in per_fold])
        mean, std, ci_low, ci_high = mx.summary_stats(values, 0.95)
        stats[name] = {
            "mean": mean,
            "std": std,
            "ci_low": ci_low,
            "ci_high": ci_high,
            "rendered": mx.format_percent_mean_std(mean, std),
        }
    auc_values = np.array([fold["auc"] for fold in per_fold])
    mean, std, ci_low, ci_high = mx.summary_stats(auc_values, 0.95)
    stats["auc"] = {"mean": mean, "std": std, "ci_low": ci_low, "ci_high": ci_high,
                    "rendered": mx.format_percent_mean_std(mean, std)}

    total_confusion = {
        key: int(sum(fold["confusion"][key] for fold in per_fold))
        for key in ("tp", "tn", "fp", "fn")
    }
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "crossval_report",
        "config": cfg,
        "k": k,
        "repeats": repeats,
        "dataset": {"source": data.source, "n_samples": data.n_samples},
        "confusion": total_confusion,
        "metrics": {name: stats[name]["mean"] for name in ("accuracy", "precision", "recall", "f1")},
        "auc": stats["auc"]["mean"],
        "roc_points": [],
        "per_fold": per_fold,
        "stats": stats,
        "t_tests": [],
    }

    def write_artifacts():
        dump_json(report, out / "crossval_report.json")
        write_csv(
            out / "crossval_folds.csv",
            cfg,
            ["repeat", "fold", "seed", "accuracy", "precision", "recall", "f1", "auc"],
            [
                (
                    fold["repeat"],
                    fold["fold"],
                    fold["seed"],
                    fold["metrics"]["accuracy"],
                    fold["metrics"]["precision"],
                    fold["metrics"]["recall"],
                    fold["metrics"]["f1"],
                    fold["auc"],
                )
                for fold in per_fold
            ],
        )
        write_csv(
            out / "crossval_summary.csv",
            cfg,
            ["metric", "mean", "std", "ci_low", "ci_high", "rendered"],
            [
                (name, s["mean"], s["std"], s["ci_low"], s["ci_high"], '"' + s["rendered"] + '"')
                for name, s in stats.items()
            ],
        )

    _stage("write", write_artifacts)
    return report


def run_compare(config: PipelineConfig, optimizers: list[str], runs: int = 10) -> dict:
    """Train with each optimizer over a shared seed list; align the curves."""
    if len(optimizers) < 2:
        raise ConfigError("need at least two optimizers to compare")
    for name in optimizers:
        if name not in ("goa", "pso"):
            raise ConfigError(f"unknown optimizer {name!r}")
    if runs < 1:
        raise ConfigError(f"runs must be >= 1, got {runs}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.to_dict()

    data = _stage("load", resolve_dataset, config)
    seeds = [config.seed + i for i in range(runs)]
    results = {name: [] for name in optimizers}
    curves = {name: [] for name in optimizers}
    for seed in seeds:
        raw_parts, projected, scaler, pca = _prepare(config, data, seed)
        test_proj = projected[2]
        for name in optimizers:
            run_config = replace(config, optimizer=name)
            model, _ = _train_model(run_config, projected, scaler, pca, seed)
            evaluation = evaluate_split(model, test_proj.features, test_proj.labels)
            curve = model.run.convergence
            results[name].append(
                {
                    "seed": seed,
                    "accuracy": evaluation["metrics"]["accuracy"],
                    "auc": evaluation["auc"],
                    "final_cost": float(curve[-1]),
                    "plateau_iteration": plateau_iteration(curve),
                }
            )
            curves[name].append(curve)

    summary = {}
    for name in optimizers:
        accuracy = np.array([r["accuracy"] for r in results[name]])
        plateaus = np.array([r["plateau_iteration"] for r in results[name]])
        summary[name] = {
            "mean_accuracy": float(accuracy.mean()),
            "best_accuracy": float(accuracy.max()),
            "mean_plateau_iteration": float(plateaus.mean()),
        }

    t_tests = []
    if runs >= 2:
        for i, a_name in enumerate(optimizers):
            for b_name in optimizers[i + 1 :]:
                a = np.array([r["accuracy"] for r in results[a_name]])
                b = np.array([r["accuracy"] for r in results[b_name]])
                try:
                    t, p = mx.paired_t_test(a, b)
                    entry = {"a": a_name, "b": b_name, "t": t, "p": p}
                except WsnFaultError as exc:
                    entry = {"a": a_name, "b": b_name, "error": str(exc)}
                t_tests.append(entry)

    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "compare_report",
        "config": cfg,
        "optimizers": list(optimizers),
        "seeds": seeds,
        "per_run": results,
        "summary": summary,
        "t_tests": t_tests,
    }

    def write_artifacts():
        dump_json(report, out / "compare_report.json")
        for name in optimizers:
            stacked = np.column_stack(curves[name])
            write_csv(
                out / f"convergence_{name}.csv",
                cfg,
                ["iteration"] + [f"seed_{s}" for s in seeds],
                [
                    (i, *[float(v) for v in stacked[i]])
                    for i in range(stacked.shape[0])
                ],
            )
        write_csv(
            out / "compare_summary.csv",
            cfg,
            ["optimizer", "mean_accuracy", "best_accuracy", "mean_plateau_iteration"],
            [
                (
                    name,
                    summary[name]["mean_accuracy"],
                    summary[name]["best_accuracy"],
                    summary[name]["mean_plateau_iteration"],
                )
                for name in optimizers
            ],
        )

    _stage("write", write_artifacts)
    return report
