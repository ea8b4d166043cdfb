"""Labeled sensor datasets: loading, synthesis, normalization, splitting, faults.

Labels are always +1 (normal) or -1 (faulty). All operations are pure
functions of their inputs and an explicit seed, so results are reproducible
and safe to share across threads.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ColumnOutOfRange,
    ConstantColumn,
    InvalidCount,
    MalformedRow,
    MissingFile,
    TooFewSamples,
    TooFewSamplesPerClass,
    UnknownLabelValue,
)

logger = logging.getLogger(__name__)

# Accepted spellings of the two class labels in input files.
DEFAULT_LABEL_ALIASES = {
    "1": 1, "+1": 1, "1.0": 1, "normal": 1,
    "-1": -1, "-1.0": -1, "faulty": -1, "fault": -1,
}

# Canonical 12-feature schema: four sensor channels at three time states.
WSN_CHANNELS = ("T1", "T2", "H1", "H2")
WSN_TIME_STATES = ("t0", "t1", "t2")
WSN_FEATURE_NAMES = tuple(
    f"{ch}_{ts}" for ts in WSN_TIME_STATES for ch in WSN_CHANNELS
)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with +/-1 labels, column names and provenance."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    source: str

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if features.ndim != 2:
            raise InvalidCount(f"features must be 2-D, got shape {features.shape}")
        if features.shape[0] != labels.shape[0]:
            raise InvalidCount(
                f"{features.shape[0]} feature rows vs {labels.shape[0]} labels"
            )
        if len(self.feature_names) != features.shape[1]:
            raise InvalidCount(
                f"{len(self.feature_names)} names for {features.shape[1]} columns"
            )
        if labels.size and not np.isin(labels, (-1, 1)).all():
            bad = sorted(set(labels.tolist()) - {-1, 1})
            raise UnknownLabelValue(f"labels must be +1/-1, found {bad}")
        if features.size and not np.isfinite(features).all():
            raise MalformedRow("non-finite feature values")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray, source_suffix: str = "") -> "LabeledDataset":
        """Row subset preserving order of ``indices``."""
        return LabeledDataset(
            self.features[indices],
            self.labels[indices],
            self.feature_names,
            self.source + source_suffix,
        )

    def with_source(self, source: str) -> "LabeledDataset":
        return LabeledDataset(self.features, self.labels, self.feature_names, source)


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column extrema captured by :func:`min_max_normalize`."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=float)
        maxs = np.asarray(self.maxs, dtype=float)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise InvalidCount("mins and maxs must be 1-D vectors of equal length")
        if np.any(mins > maxs):
            raise ConstantColumn("mins must not exceed maxs")

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Map each column through (x - min) / (max - min)."""
        X = np.asarray(X, dtype=float)
        return (X - self.mins) / (self.maxs - self.mins)

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X * (self.maxs - self.mins) + self.mins

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        return cls(np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float))


class FaultKind(enum.Enum):
    OFFSET = "offset"
    GAIN = "gain"
    STUCK_AT = "stuck_at"
    OUT_OF_RANGE = "out_of_range"


# Magnitudes used when a caller does not specify one, chosen on unit-scaled
# data: additive for OFFSET, multiplicative for GAIN, excess above 1.0 for
# OUT_OF_RANGE. STUCK_AT takes no magnitude.
DEFAULT_FAULT_MAGNITUDES = {
    FaultKind.OFFSET: 0.4,
    FaultKind.GAIN: 1.6,
    FaultKind.STUCK_AT: 0.0,
    FaultKind.OUT_OF_RANGE: 0.25,
}
DEFAULT_AFFECTED_FRACTION = 0.05


@dataclass(frozen=True)
class FaultSpec:
    """One injected fault: what kind, how strong, where, how widespread."""

    kind: FaultKind
    magnitude: float
    target_columns: tuple[int, ...]
    affected_fraction: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "kind", FaultKind(self.kind))
        object.__setattr__(self, "target_columns", tuple(int(c) for c in self.target_columns))
        if not 0.0 < self.affected_fraction <= 1.0:
            raise InvalidCount(
                f"affected_fraction must be in (0, 1], got {self.affected_fraction}"
            )
        if self.kind is FaultKind.GAIN and self.magnitude <= 0:
            raise InvalidCount("gain magnitude must be > 0")
        if not self.target_columns:
            raise ColumnOutOfRange("at least one target column required")


def load_dataset(
    path: str | Path,
    label_column: str = "label",
    label_aliases: dict[str, int] | None = None,
    on_bad_rows: str = "drop",
) -> LabeledDataset:
    """Load a delimited text file with a header row into a LabeledDataset.

    Comma- and tab-delimited files are accepted. Rows whose feature cells are
    missing or non-numeric are dropped and the count logged (``on_bad_rows=
    "error"`` raises :class:`MalformedRow` instead, naming the row). A row
    with the wrong number of fields is always a :class:`MalformedRow`; a
    label value outside ``label_aliases`` is always an
    :class:`UnknownLabelValue`.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    aliases = DEFAULT_LABEL_ALIASES if label_aliases is None else label_aliases

    with path.open(newline="") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        delimiter = "\t" if sample.split("\n", 1)[0].count("\t") else ","
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise UnknownLabelValue(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
        feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)

        rows: list[list[float]] = []
        labels: list[int] = []
        dropped = 0
        for row_idx, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise MalformedRow(
                    f"{path}: row {row_idx} has {len(row)} fields, expected {len(header)}"
                )
            raw_label = row[label_idx].strip()
            key = raw_label.lower()
            if key not in aliases:
                raise UnknownLabelValue(f"{path}: row {row_idx} label {raw_label!r}")
            try:
                values = [
                    float(cell) for i, cell in enumerate(row) if i != label_idx
                ]
            except ValueError:
                if on_bad_rows == "error":
                    raise MalformedRow(
                        f"{path}: row {row_idx} has a non-numeric feature value"
                    ) from None
                dropped += 1
                continue
            if not all(math.isfinite(v) for v in values):
                if on_bad_rows == "error":
                    raise MalformedRow(f"{path}: row {row_idx} has a non-finite value")
                dropped += 1
                continue
            rows.append(values)
            labels.append(aliases[key])

    if dropped:
        logger.warning("%s: dropped %d rows with missing/non-numeric values", path, dropped)
    features = np.asarray(rows, dtype=float).reshape(len(rows), len(feature_names))
    return LabeledDataset(features, np.asarray(labels, dtype=int), feature_names, str(path))


def save_dataset(data: LabeledDataset, path: str | Path, label_column: str = "label") -> None:
    """Write a dataset as comma-delimited text readable by :func:`load_dataset`."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(data.feature_names) + [label_column])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def synthesize_dataset(
    n_samples: int, n_features: int, class_separation: float, seed: int
) -> LabeledDataset:
    """Balanced two-class Gaussian blobs, deterministic for a fixed seed.

    Class centers sit ``class_separation`` apart along the diagonal
    direction; unit isotropic noise. Labels are +1 and -1 in equal counts
    (within one sample when ``n_samples`` is odd).
    """
    if n_samples < 2:
        raise InvalidCount(f"n_samples must be >= 2, got {n_samples}")
    if n_features < 1:
        raise InvalidCount(f"n_features must be >= 1, got {n_features}")
    rng = np.random.default_rng(seed)
    n_pos = n_samples // 2 + (n_samples % 2)
    n_neg = n_samples - n_pos
    direction = np.full(n_features, 1.0 / math.sqrt(n_features))
    offset = 0.5 * class_separation * direction
    X = np.empty((n_samples, n_features))
    X[:n_pos] = rng.normal(size=(n_pos, n_features)) + offset
    X[n_pos:] = rng.normal(size=(n_neg, n_features)) - offset
    y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    perm = rng.permutation(n_samples)
    names = tuple(f"f{j}" for j in range(n_features))
    return LabeledDataset(X[perm], y[perm], names, f"synthetic:blob:{seed}")


def synthesize_wsn_dataset(
    n_samples: int = 4688,
    seed: int = 0,
    faulty_fraction: float = 0.5,
) -> LabeledDataset:
    """Synthetic stand-in for the multi-hop temperature/humidity corpus.

    Twelve features: channels T1, T2, H1, H2 sampled at three consecutive
    time states. Time states within a channel are near-identical (slow
    sensors, fast sampling), so the covariance is dominated by four channel
    factors. Faulty rows carry one of the classic sensor faults (offset,
    gain, stuck-at, out-of-range) on a random channel, or a warm-vapor
    anomaly that raises temperature and humidity together. Fully
    deterministic for a fixed seed.
    """
    if n_samples < 2:
        raise InvalidCount(f"n_samples must be >= 2, got {n_samples}")
    if not 0.0 < faulty_fraction < 1.0:
        raise InvalidCount(f"faulty_fraction must be in (0, 1), got {faulty_fraction}")
    rng = np.random.default_rng(seed)

    channel_mean = np.array([24.0, 26.5, 44.0, 39.0])
    channel_sd = np.array([1.3, 1.5, 3.5, 3.0])
    drift_gain = np.array([0.45, 0.45, 0.55, 0.55])  # shared environment
    innovation_sd = 0.04 * channel_sd  # tiny step between time states

    # Channel level per row: shared drift plus independent channel noise.
    drift = rng.normal(size=(n_samples, 1))
    level = (
        channel_mean
        + drift_gain * channel_sd * drift
        + channel_sd * rng.normal(size=(n_samples, 4))
    )

    n_faulty = int(round(faulty_fraction * n_samples))
    n_faulty = min(max(n_faulty, 1), n_samples - 1)
    faulty_rows = rng.choice(n_samples, size=n_faulty, replace=False)
    labels = np.ones(n_samples, dtype=int)
    labels[faulty_rows] = -1

    # Corruption applies coherently to all three time states of one channel,
    # so the four-factor covariance structure survives. Displacements are
    # predominantly upward (heat and vapor raise readings; dying sensors
    # rail high far more often than low here), which keeps the classes
    # separable mostly along a few directions like the real corpus.
    # modes 0-3: offset/gain/stuck/out-of-range on one channel; 4: vapor
    mode = rng.choice(5, size=n_faulty, p=(0.08, 0.08, 0.08, 0.08, 0.68))
    channel = rng.integers(0, 4, size=n_faulty)
    u = rng.uniform(size=n_faulty)
    sign = np.where(rng.uniform(size=n_faulty) < 0.96, 1.0, -1.0)
    for i, row in enumerate(faulty_rows):
        ch = channel[i]
        if mode[i] == 0:  # offset
            level[row, ch] += sign[i] * (8.0 + 3.0 * u[i]) * channel_sd[ch]
        elif mode[i] == 1:  # gain
            gain_span = (8.0 + 3.0 * u[i]) * channel_sd[ch] / channel_mean[ch]
            level[row, ch] *= 1.0 + sign[i] * gain_span
        elif mode[i] == 2:  # stuck at a rail value
            rail = channel_mean[ch] + sign[i] * (8.0 + 2.0 * u[i]) * channel_sd[ch]
            level[row, ch] = rail
        elif mode[i] == 3:  # out of range
            level[row, ch] = channel_mean[ch] + sign[i] * (11.0 + 4.0 * u[i]) * channel_sd[ch]
        else:  # warm vapor: temperature and humidity rise together
            lift = 6.0 + 2.5 * u[i]
            level[row] += lift * channel_sd * np.array([1.0, 0.9, 1.1, 1.0])

    steps = innovation_sd[:, None] * rng.normal(size=(n_samples, 4, 2))
    # Stuck sensors emit a constant reading: zero out their time-state steps.
    stuck_rows = faulty_rows[mode == 2]
    stuck_channels = channel[mode == 2]
    steps[stuck_rows, stuck_channels, :] = 0.0

    t0 = level
    t1 = t0 + steps[:, :, 0]
    t2 = t1 + steps[:, :, 1]
    X = np.concatenate([t0, t1, t2], axis=1)
    return LabeledDataset(X, labels, WSN_FEATURE_NAMES, f"synthetic:wsn:{seed}")


def min_max_normalize(data: LabeledDataset) -> tuple[LabeledDataset, MinMaxScaler]:
    """Rescale every column to [0, 1] via (x - min) / (max - min).

    The returned scaler stores the per-column extrema so held-out data can
    be mapped through the same transform. Constant columns are rejected.
    """
    X = data.features
    if X.shape[0] == 0:
        raise TooFewSamples("cannot normalize an empty dataset")
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    constant = np.flatnonzero(maxs <= mins)
    if constant.size:
        names = ", ".join(data.feature_names[j] for j in constant)
        raise ConstantColumn(f"constant column(s): {names}")
    scaler = MinMaxScaler(mins, maxs)
    normalized = LabeledDataset(
        scaler.transform(X), data.labels, data.feature_names, data.source
    )
    return normalized, scaler


def _per_class_indices(labels: np.ndarray) -> dict[int, np.ndarray]:
    return {int(c): np.flatnonzero(labels == c) for c in np.unique(labels)}


def stratified_split(
    data: LabeledDataset,
    train_fraction: float,
    val_fraction_of_train: float,
    seed: int,
) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    """Split into (train, val, test) preserving class proportions.

    ``train_fraction`` of each class goes to the train side, from which
    ``val_fraction_of_train`` is carved into the validation set; the rest is
    the test set. Deterministic for a fixed seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidCount(f"train_fraction must be in (0, 1), got {train_fraction}")
    if not 0.0 < val_fraction_of_train < 1.0:
        raise InvalidCount(
            f"val_fraction_of_train must be in (0, 1), got {val_fraction_of_train}"
        )
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for cls, idx in sorted(_per_class_indices(data.labels).items()):
        if idx.size < 2:
            raise TooFewSamples(f"class {cls} has {idx.size} sample(s), need >= 2")
        shuffled = idx[rng.permutation(idx.size)]
        n_side = int(round(train_fraction * idx.size))
        n_side = min(max(n_side, 1), idx.size - 1)
        n_val = int(round(val_fraction_of_train * n_side))
        n_val = min(max(n_val, 1), n_side - 1) if n_side >= 2 else 0
        side = shuffled[:n_side]
        val_idx.append(side[:n_val])
        train_idx.append(side[n_val:])
        test_idx.append(shuffled[n_side:])

    def part(chunks: list[np.ndarray], tag: str) -> LabeledDataset:
        indices = np.sort(np.concatenate(chunks))
        return data.subset(indices, source_suffix=f"#{tag}")

    return part(train_idx, "train"), part(val_idx, "val"), part(test_idx, "test")


def carve_validation(
    data: LabeledDataset, val_fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split off a stratified validation subset; returns (train, val)."""
    if not 0.0 < val_fraction < 1.0:
        raise InvalidCount(f"val_fraction must be in (0, 1), got {val_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for cls, idx in sorted(_per_class_indices(data.labels).items()):
        if idx.size < 2:
            raise TooFewSamples(f"class {cls} has {idx.size} sample(s), need >= 2")
        shuffled = idx[rng.permutation(idx.size)]
        n_val = int(round(val_fraction * idx.size))
        n_val = min(max(n_val, 1), idx.size - 1)
        val_idx.append(shuffled[:n_val])
        train_idx.append(shuffled[n_val:])
    train = data.subset(np.sort(np.concatenate(train_idx)), source_suffix="#train")
    val = data.subset(np.sort(np.concatenate(val_idx)), source_suffix="#val")
    return train, val


def stratified_kfold(
    data: LabeledDataset, k: int, seed: int
) -> list[tuple[LabeledDataset, LabeledDataset]]:
    """k stratified (train, test) fold pairs; each sample tested exactly once.

    Per-class counts across test folds differ by at most one.
    """
    if k < 2:
        raise InvalidCount(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_members: list[list[np.ndarray]] = [[] for _ in range(k)]
    for cls, idx in sorted(_per_class_indices(data.labels).items()):
        if idx.size < k:
            raise TooFewSamplesPerClass(
                f"class {cls} has {idx.size} samples, need >= k={k}"
            )
        shuffled = idx[rng.permutation(idx.size)]
        for fold in range(k):
            fold_members[fold].append(shuffled[fold::k])

    folds = []
    all_indices = np.arange(data.n_samples)
    for fold in range(k):
        test_indices = np.sort(np.concatenate(fold_members[fold]))
        mask = np.ones(data.n_samples, dtype=bool)
        mask[test_indices] = False
        train = data.subset(all_indices[mask], source_suffix=f"#fold{fold}-train")
        test = data.subset(test_indices, source_suffix=f"#fold{fold}-test")
        folds.append((train, test))
    return folds


def inject_fault(data: LabeledDataset, spec: FaultSpec) -> LabeledDataset:
    """Corrupt a seeded-random fraction of rows and relabel them faulty.

    Offset adds ``magnitude``; gain multiplies by it; stuck-at freezes each
    target column at its value in the first (lowest-index) affected row;
    out-of-range writes ``1 + magnitude``, outside the unit-normalized span.
    Exactly ``ceil(affected_fraction * n)`` rows change, only in the target
    columns, and their labels become -1.
    """
    n = data.n_samples
    if n == 0:
        raise TooFewSamples("cannot inject faults into an empty dataset")
    for col in spec.target_columns:
        if not 0 <= col < data.n_features:
            raise ColumnOutOfRange(
                f"column {col} out of range for {data.n_features} features"
            )
    rng = np.random.default_rng(spec.seed)
    n_affected = math.ceil(spec.affected_fraction * n)
    affected = np.sort(rng.choice(n, size=n_affected, replace=False))

    X = data.features.copy()
    cols = list(spec.target_columns)
    block = X[np.ix_(affected, cols)]
    if spec.kind is FaultKind.OFFSET:
        block = block + spec.magnitude
    elif spec.kind is FaultKind.GAIN:
        block = block * spec.magnitude
    elif spec.kind is FaultKind.STUCK_AT:
        block = np.broadcast_to(X[affected[0], cols], block.shape).copy()
    elif spec.kind is FaultKind.OUT_OF_RANGE:
        block = np.full_like(block, 1.0 + spec.magnitude)
    X[np.ix_(affected, cols)] = block

    labels = data.labels.copy()
    labels[affected] = -1
    return LabeledDataset(
        X, labels, data.feature_names, data.source + f"#fault:{spec.kind.value}"
    )
