"""Training: bind the network to a swarm optimizer through validation accuracy.

The optimizer minimizes one minus the accuracy on the validation set, so a
cost of zero means a perfect validation split. No gradients anywhere.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LabeledDataset, MinMaxScaler
from .errors import DimensionMismatch, InvalidCount
from .network import (
    CLASS_ORDER,
    NetworkSpec,
    ParameterVector,
    _forward_batch,
    param_count,
    predict,
)
from .pca import PcaModel
from .swarm import (
    GoaConfig,
    Objective,
    OptimizerRun,
    PsoConfig,
    goa_optimize,
    pso_optimize,
)

DEFAULT_WEIGHT_BOUND = 5.0  # sigmoid saturates beyond |x| ~ 5


class OptimizerKind(enum.Enum):
    GOA = "goa"
    PSO = "pso"


@dataclass(frozen=True)
class TrainingTask:
    """Everything needed for one training run.

    ``train_set`` and ``val_set`` live in the post-projection feature space;
    the optimizer cost is computed on ``val_set`` alone. ``pca`` and
    ``scaler`` are carried through so the trained model is self-describing.
    """

    spec: NetworkSpec
    train_set: LabeledDataset
    val_set: LabeledDataset
    optimizer: OptimizerKind
    optimizer_config: GoaConfig | PsoConfig
    seed: int
    pca: PcaModel | None = None
    scaler: MinMaxScaler | None = None

    def __post_init__(self):
        object.__setattr__(self, "optimizer", OptimizerKind(self.optimizer))
        if self.val_set.n_samples == 0:
            raise InvalidCount("validation set must be non-empty")
        if self.val_set.n_features != self.spec.input_size:
            raise DimensionMismatch(
                f"validation features ({self.val_set.n_features}) != "
                f"network input size ({self.spec.input_size})"
            )
        if self.optimizer_config.arity != param_count(self.spec):
            raise DimensionMismatch(
                f"optimizer bounds cover {self.optimizer_config.arity} dimensions, "
                f"network has {param_count(self.spec)} parameters"
            )


@dataclass(frozen=True)
class TrainedModel:
    """Optimized parameters plus the preprocessing needed for inference."""

    spec: NetworkSpec
    params: ParameterVector
    pca: PcaModel | None
    scaler: MinMaxScaler | None
    run: OptimizerRun
    seed: int

    def predict(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predict labels/scores for rows already in network input space."""
        return predict(self.spec, self.params, X)

    def predict_raw(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predict from raw sensor rows: scaler, then projection, then network."""
        if self.scaler is not None:
            X = self.scaler.transform(X)
        if self.pca is not None:
            from .pca import transform as pca_transform

            X = pca_transform(self.pca, X)
        return predict(self.spec, self.params, X)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "trained_model",
            "layer_sizes": list(self.spec.layer_sizes),
            "params": self.params.values.tolist(),
            "class_order": list(CLASS_ORDER),
            "pca": self.pca.to_dict() if self.pca is not None else None,
            "scaler": self.scaler.to_dict() if self.scaler is not None else None,
            "run": self.run.to_dict(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        run = d["run"]
        return cls(
            spec=NetworkSpec(tuple(d["layer_sizes"])),
            params=ParameterVector(np.asarray(d["params"], dtype=float)),
            pca=PcaModel.from_dict(d["pca"]) if d.get("pca") else None,
            scaler=MinMaxScaler.from_dict(d["scaler"]) if d.get("scaler") else None,
            run=OptimizerRun(
                best_position=np.asarray(run["best_position"], dtype=float),
                best_cost=float(run["best_cost"]),
                convergence=np.asarray(run["convergence"], dtype=float),
                evaluations=int(run["evaluations"]),
            ),
            seed=int(d["seed"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def fitness(params, spec: NetworkSpec, val_set: LabeledDataset) -> float:
    """One minus validation accuracy; 0 is perfect, 1 is fully wrong."""
    values = params.values if isinstance(params, ParameterVector) else np.asarray(params, dtype=float)
    if values.shape[0] != param_count(spec):
        raise DimensionMismatch(
            f"expected {param_count(spec)} parameters, got {values.shape[0]}"
        )
    if val_set.n_features != spec.input_size:
        raise DimensionMismatch(
            f"validation features ({val_set.n_features}) != input size ({spec.input_size})"
        )
    probs = _forward_batch(spec, values, val_set.features)
    predicted = np.where(probs[:, 1] >= probs[:, 0], 1, -1)
    accuracy = float(np.mean(predicted == val_set.labels))
    return 1.0 - accuracy


def default_bounds(spec: NetworkSpec, half_width: float = DEFAULT_WEIGHT_BOUND):
    """Symmetric weight-space box [-half_width, half_width]^n."""
    n = param_count(spec)
    return -half_width * np.ones(n), half_width * np.ones(n)


def make_objective(spec: NetworkSpec, val_set: LabeledDataset) -> Objective:
    """Validation-accuracy cost packaged for the swarm optimizers."""
    features = val_set.features
    labels = val_set.labels

    def evaluate(values: np.ndarray) -> float:
        probs = _forward_batch(spec, values, features)
        predicted = np.where(probs[:, 1] >= probs[:, 0], 1, -1)
        return 1.0 - float(np.mean(predicted == labels))

    return Objective(arity=param_count(spec), evaluate=evaluate)


def train(task: TrainingTask) -> TrainedModel:
    """Optimize the network parameters against the validation cost."""
    objective = make_objective(task.spec, task.val_set)
    if task.optimizer is OptimizerKind.GOA:
        run = goa_optimize(objective, task.optimizer_config)
    else:
        run = pso_optimize(objective, task.optimizer_config)
    return TrainedModel(
        spec=task.spec,
        params=ParameterVector(run.best_position),
        pca=task.pca,
        scaler=task.scaler,
        run=run,
        seed=task.seed,
    )
