"""Fixed-architecture feedforward classifier driven by a flat parameter vector.

Hidden layers use the logistic sigmoid, the output layer softmax over the
two classes. Class index 0 is faulty (-1), index 1 is normal (+1). There is
no gradient machinery here: parameters come from a black-box optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidCount

DEFAULT_LAYER_SIZES = (4, 8, 7, 6, 5, 4, 3, 2)
CLASS_ORDER = ("faulty", "normal")  # index 0 -> label -1, index 1 -> label +1


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes, input first, output last."""

    layer_sizes: tuple[int, ...] = DEFAULT_LAYER_SIZES

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise InvalidCount("a network needs at least input and output layers")
        if any(s < 1 for s in sizes):
            raise InvalidCount(f"layer sizes must be >= 1, got {sizes}")
        if sizes[-1] != 2:
            raise InvalidCount(f"output layer must have 2 neurons, got {sizes[-1]}")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]


def param_count(spec: NetworkSpec) -> int:
    """Total number of weights and biases."""
    sizes = spec.layer_sizes
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


@dataclass(frozen=True)
class ParameterVector:
    """All weights and biases in one flat vector.

    Layout, per layer in order: the (fan_out x fan_in) weight matrix
    row-major, then the fan_out biases.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", values)
        if not np.isfinite(values).all():
            raise DimensionMismatch("parameter vector contains non-finite entries")

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ClassProbabilities:
    """Softmax output for one sample; entries sum to 1."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))


def sigmoid(x):
    """Logistic function 1 / (1 + e^-x).

    Evaluated as (1 + tanh(x/2)) / 2, which is the same function without
    the overflow of the naive form at large negative x.
    """
    if np.isscalar(x) or np.ndim(x) == 0:
        return 0.5 * (1.0 + math.tanh(0.5 * float(x)))
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(z) -> ClassProbabilities:
    """Exponentiate-and-normalize with max subtraction for stability."""
    z = np.asarray(z, dtype=float)
    shifted = z - z.max()
    e = np.exp(shifted)
    return ClassProbabilities(e / e.sum())


def unflatten(spec: NetworkSpec, params: ParameterVector) -> list[tuple[np.ndarray, np.ndarray]]:
    """Decode the flat vector into per-layer (weights, biases) pairs."""
    values = params.values
    if values.shape[0] != param_count(spec):
        raise DimensionMismatch(
            f"expected {param_count(spec)} parameters, got {values.shape[0]}"
        )
    layers = []
    offset = 0
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        W = values[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in)
        offset += fan_in * fan_out
        b = values[offset : offset + fan_out]
        offset += fan_out
        layers.append((W, b))
    return layers


def flatten(layers: list[tuple[np.ndarray, np.ndarray]]) -> ParameterVector:
    """Encode per-layer (weights, biases) pairs back into the flat layout."""
    chunks = []
    for W, b in layers:
        chunks.append(np.asarray(W, dtype=float).ravel())
        chunks.append(np.asarray(b, dtype=float).ravel())
    return ParameterVector(np.concatenate(chunks))


def _forward_batch(spec: NetworkSpec, values: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Class probabilities for every row of X; returns an (n, 2) array.

    Hot path for optimizer fitness evaluation, so it works on the raw
    parameter array and skips per-call validation.
    """
    sizes = spec.layer_sizes
    a = X
    offset = 0
    last = len(sizes) - 2
    for li, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        W = values[offset : offset + fan_in * fan_out].reshape(fan_out, fan_in)
        offset += fan_in * fan_out
        b = values[offset : offset + fan_out]
        offset += fan_out
        z = a @ W.T + b
        if li < last:
            a = sigmoid(z)
        else:
            z -= z.max(axis=1, keepdims=True)
            e = np.exp(z)
            a = e / e.sum(axis=1, keepdims=True)
    return a


def forward(spec: NetworkSpec, params: ParameterVector, x: np.ndarray) -> ClassProbabilities:
    """Run one input vector through the network."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_size,):
        raise DimensionMismatch(
            f"input must have shape ({spec.input_size},), got {x.shape}"
        )
    if params.values.shape[0] != param_count(spec):
        raise DimensionMismatch(
            f"expected {param_count(spec)} parameters, got {params.values.shape[0]}"
        )
    probs = _forward_batch(spec, params.values, x[None, :])[0]
    return ClassProbabilities(probs)


def predict(
    spec: NetworkSpec, params: ParameterVector, X: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Labels (+1 normal / -1 faulty) and P(normal) scores for each row.

    Ties at exactly equal probabilities resolve to +1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != spec.input_size:
        raise DimensionMismatch(
            f"expected (n, {spec.input_size}) inputs, got {X.shape}"
        )
    if params.values.shape[0] != param_count(spec):
        raise DimensionMismatch(
            f"expected {param_count(spec)} parameters, got {params.values.shape[0]}"
        )
    probs = _forward_batch(spec, params.values, X)
    scores = probs[:, 1]  # P(normal)
    labels = np.where(scores >= probs[:, 0], 1, -1)
    return labels, scores
