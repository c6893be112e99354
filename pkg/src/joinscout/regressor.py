"""Feedforward regression network predicting join quality from distance vectors.

One hidden layer of rectified linear units, a scalar output head, mean
squared error with an L2 penalty on the weight matrices, and mini-batch
adaptive-moment (Adam) updates.  The implementation is plain numpy so the
analytic gradients can be audited against finite differences; training is
bit-reproducible for a fixed seed.  Models persist to a portable JSON
format with the feature-layout version embedded.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Union

import numpy as np
from scipy.stats import spearmanr
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y

from .comparison import LAYOUT_VERSION
from .exceptions import LayoutMismatchError, ModelFormatError, TrainingDivergenceError

MODEL_FORMAT = "jsmodel"
MODEL_FORMAT_VERSION = 1
MODEL_SUFFIX = ".jsmodel.json"

_WEIGHT_KEYS = ("w1", "b1", "w2", "b2")


def init_weights(n_inputs: int, hidden_units: int, rng: np.random.Generator) -> dict:
    """He-scaled random weight matrices and zero biases."""
    return {
        "w1": rng.normal(0.0, math.sqrt(2.0 / n_inputs), size=(n_inputs, hidden_units)),
        "b1": np.zeros(hidden_units),
        "w2": rng.normal(0.0, math.sqrt(2.0 / hidden_units), size=(hidden_units, 1)),
        "b2": np.zeros(1),
    }


def forward(weights: dict, X: np.ndarray) -> np.ndarray:
    """Raw network output (no clamping), one value per input row."""
    hidden = np.maximum(X @ weights["w1"] + weights["b1"], 0.0)
    return (hidden @ weights["w2"]).ravel() + weights["b2"][0]


def loss_and_gradients(weights: dict, X: np.ndarray, y: np.ndarray,
                       alpha: float) -> tuple[float, dict]:
    """Penalized mean squared error and its analytic gradients.

    The loss is ``mean((f(x) - y)^2) + alpha/2 * (|w1|^2 + |w2|^2)``;
    biases are not penalized.
    """
    n = X.shape[0]
    pre_hidden = X @ weights["w1"] + weights["b1"]
    hidden = np.maximum(pre_hidden, 0.0)
    outputs = (hidden @ weights["w2"]).ravel() + weights["b2"][0]
    residual = outputs - y
    loss = float(residual @ residual) / n + 0.5 * alpha * (
        float(np.sum(weights["w1"] ** 2)) + float(np.sum(weights["w2"] ** 2))
    )
    d_out = 2.0 * residual / n
    grad_w2 = hidden.T @ d_out[:, None] + alpha * weights["w2"]
    grad_b2 = np.array([d_out.sum()])
    d_hidden = np.outer(d_out, weights["w2"].ravel()) * (pre_hidden > 0.0)
    grad_w1 = X.T @ d_hidden + alpha * weights["w1"]
    grad_b1 = d_hidden.sum(axis=0)
    return loss, {"w1": grad_w1, "b1": grad_b1, "w2": grad_w2, "b2": grad_b2}


class JoinQualityRegressor(RegressorMixin, BaseEstimator):
    """Scalar join-quality regressor over fixed-layout distance vectors.

    Follows the usual estimator conventions: hyperparameters in
    ``__init__``, learned state in trailing-underscore attributes set by
    :meth:`fit`, predictions clamped to [0, 1].
    """

    def __init__(self, hidden_units: int = 100, alpha: float = 1e-4,
                 learning_rate: float = 1e-3, batch_size: int = 32,
                 epochs: int = 200, random_state: int = 0,
                 layout_version: str = LAYOUT_VERSION):
        self.hidden_units = hidden_units
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.random_state = random_state
        self.layout_version = layout_version

    def fit(self, X, y) -> "JoinQualityRegressor":
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        if self.hidden_units < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden_units, epochs and batch_size must be positive")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise ValueError("labels must lie in [0, 1]")
        rng = np.random.default_rng(self.random_state)
        weights = init_weights(X.shape[1], self.hidden_units, rng)
        moment1 = {k: np.zeros_like(v) for k, v in weights.items()}
        moment2 = {k: np.zeros_like(v) for k, v in weights.items()}
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0
        loss_curve = []
        n = X.shape[0]
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                _, grads = loss_and_gradients(weights, X[batch], y[batch], self.alpha)
                step += 1
                scale = (math.sqrt(1.0 - beta2 ** step) / (1.0 - beta1 ** step)
                         * self.learning_rate)
                for key in _WEIGHT_KEYS:
                    moment1[key] = beta1 * moment1[key] + (1.0 - beta1) * grads[key]
                    moment2[key] = beta2 * moment2[key] + (1.0 - beta2) * grads[key] ** 2
                    weights[key] -= scale * moment1[key] / (np.sqrt(moment2[key]) + eps)
            residual = forward(weights, X) - y
            epoch_mse = float(residual @ residual) / n
            if not math.isfinite(epoch_mse):
                raise TrainingDivergenceError(
                    f"non-finite training loss after epoch {epoch + 1}; "
                    "lower the learning rate"
                )
            loss_curve.append(epoch_mse)
        self.n_features_in_ = X.shape[1]
        self.weights_ = weights
        self.loss_curve_ = tuple(loss_curve)
        self.final_train_mse_ = loss_curve[-1]
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError("model must be trained or loaded before predicting")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise LayoutMismatchError(
                f"model expects {self.n_features_in_} features "
                f"(layout {self.layout_version}), got {X.shape[1]}"
            )
        return np.clip(forward(self.weights_, X), 0.0, 1.0)


def evaluate_regression(model: JoinQualityRegressor, X, y) -> dict:
    """MSE, MAE, R2 and Spearman rank correlation on a held-out set."""
    X = check_array(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise ValueError("r2 is undefined for fewer than 2 examples")
    predictions = model.predict(X)
    residual = predictions - y
    ss_res = float(residual @ residual)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r2 is undefined for constant labels")
    return {
        "mse": ss_res / y.size,
        "mae": float(np.abs(residual).mean()),
        "r2": 1.0 - ss_res / ss_tot,
        "spearman": float(spearmanr(y, predictions).statistic),
    }


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: JoinQualityRegressor, path: Union[str, Path]) -> None:
    if not hasattr(model, "weights_"):
        raise NotFittedError("cannot save an unfitted model")
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "layout_version": model.layout_version,
        "architecture": {
            "n_inputs": model.n_features_in_,
            "hidden_units": model.hidden_units,
            "activation": "relu",
            "n_outputs": 1,
        },
        "alpha": model.alpha,
        "weights": {key: model.weights_[key].tolist() for key in _WEIGHT_KEYS},
        "training": {
            "random_state": model.random_state,
            "epochs": model.epochs,
            "learning_rate": model.learning_rate,
            "batch_size": model.batch_size,
            "loss_curve": list(model.loss_curve_),
            "final_train_mse": model.final_train_mse_,
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_model(path: Union[str, Path]) -> JoinQualityRegressor:
    """Rebuild a saved model; predictions match the saved one bit for bit."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    try:
        if payload["format"] != MODEL_FORMAT:
            raise ModelFormatError(f"{path}: unknown format {payload['format']!r}")
        if payload["format_version"] != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported format version {payload['format_version']!r}"
            )
        architecture = payload["architecture"]
        training = payload["training"]
        model = JoinQualityRegressor(
            hidden_units=int(architecture["hidden_units"]),
            alpha=float(payload["alpha"]),
            learning_rate=float(training["learning_rate"]),
            batch_size=int(training["batch_size"]),
            epochs=int(training["epochs"]),
            random_state=training["random_state"],
            layout_version=payload["layout_version"],
        )
        weights = {
            key: np.asarray(payload["weights"][key], dtype=float)
            for key in _WEIGHT_KEYS
        }
        n_inputs = int(architecture["n_inputs"])
        hidden = int(architecture["hidden_units"])
        shapes = {
            "w1": (n_inputs, hidden), "b1": (hidden,), "w2": (hidden, 1), "b2": (1,),
        }
        for key, shape in shapes.items():
            if weights[key].shape != shape:
                raise ModelFormatError(
                    f"{path}: weight {key} has shape {weights[key].shape}, "
                    f"expected {shape}"
                )
            if not np.all(np.isfinite(weights[key])):
                raise ModelFormatError(f"{path}: weight {key} has non-finite entries")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model file ({exc})") from exc
    model.n_features_in_ = n_inputs
    model.weights_ = weights
    model.loss_curve_ = tuple(float(x) for x in training["loss_curve"])
    model.final_train_mse_ = float(training["final_train_mse"])
    return model


# ---------------------------------------------------------------------------
# training corpus files
# ---------------------------------------------------------------------------

def save_training_corpus(X, y, path: Union[str, Path]) -> None:
    """One JSON record per line: the distance vector and its label."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y must have matching lengths")
    with open(path, "w", encoding="utf-8") as handle:
        for vector, label in zip(X, y):
            handle.write(json.dumps({"vector": vector.tolist(),
                                     "label": float(label)}) + "\n")


def load_training_corpus(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray]:
    vectors = []
    labels = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                vectors.append([float(x) for x in record["vector"]])
                labels.append(float(record["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad record on line {line_number}: {exc}") from exc
    if not vectors:
        raise ValueError(f"{path}: empty training corpus")
    widths = {len(v) for v in vectors}
    if len(widths) > 1:
        raise ValueError(f"{path}: inconsistent vector arity {sorted(widths)}")
    return np.asarray(vectors, dtype=float), np.asarray(labels, dtype=float)
