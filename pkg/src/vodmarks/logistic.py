"""Deterministic logistic regression used by both classifiers in the pipeline.

Training is plain full-batch gradient descent with zero initialization and a
fixed iteration count. No randomness, no early stopping, no regularization:
the same inputs always produce bit-for-bit identical weights, which the
replay-determinism guarantees elsewhere in the system rely on.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_LEARNING_RATE = 0.5
DEFAULT_ITERATIONS = 2000


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # Clipping keeps exp() in range; sigmoid is exactly 0.0/1.0 in float64
    # well inside +/-500, so results are unchanged.
    z = np.clip(np.asarray(z, dtype=float), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class LogisticModel:
    """Weights and bias of a trained binary logistic model."""

    weights: tuple[float, ...]
    bias: float

    def decision(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=float))
        return x @ np.asarray(self.weights) + self.bias

    def predict_proba(self, features) -> np.ndarray:
        """Probability of the positive class, one value per input row."""
        return sigmoid(self.decision(features))

    def predict_one(self, features) -> float:
        return float(self.predict_proba(features)[0])


def train_logistic(
    features,
    labels,
    *,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    iterations: int = DEFAULT_ITERATIONS,
) -> LogisticModel:
    """Fit a logistic model by full-batch gradient descent on mean log loss.

    Raises ValueError when the labels contain a single class; a one-class
    "model" would drive the bias to infinity and predict nothing useful.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"features must be a 2-d matrix, got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise ValueError(f"got {x.shape[0]} feature rows but {y.shape} labels")
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty sample")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("labels must be binary (0/1)")
    if y.min() == y.max():
        raise ValueError("training data contains a single class; need both labels")

    n, d = x.shape
    w = np.zeros(d, dtype=float)
    b = 0.0
    for _ in range(iterations):
        residual = sigmoid(x @ w + b) - y
        w -= learning_rate * (x.T @ residual) / n
        b -= learning_rate * float(residual.mean())
    return LogisticModel(weights=tuple(float(v) for v in w), bias=float(b))
