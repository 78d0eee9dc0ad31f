"""From-scratch feedforward binary classifier.

Every layer, including the output, applies the logistic sigmoid.  Training
minimizes class-weighted binary cross-entropy with per-parameter Adagrad
steps (learning rate 0.05, epsilon 1e-8) over shuffled mini-batches.
Features are standardized with training-set mean/std kept inside the model,
because raw inputs span several orders of magnitude and would saturate the
sigmoids.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

LEARNING_RATE = 0.05
EPSILON = 1e-8
PROB_CLIP = 1e-12


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column mean and std of a training matrix; constant columns get std 1
    so they standardize to exactly zero."""
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return mean, std


def standardize_apply(X: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - mean) / std


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths: n_inputs -> hidden... -> 1.  At most two hidden layers;
    zero hidden layers gives plain logistic regression (used in tests)."""

    n_inputs: int
    hidden: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.n_inputs < 1:
            raise ValueError("n_inputs must be >= 1")
        if len(self.hidden) > 2:
            raise ValueError("at most 2 hidden layers supported")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")

    @property
    def dims(self) -> list[int]:
        return [self.n_inputs, *self.hidden, 1]


@dataclass
class Mlp:
    architecture: MlpArchitecture
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Closure probability per row, applying stored standardization."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.input_mean is not None:
            X = standardize_apply(X, self.input_mean, self.input_std)
        return forward(self, X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)

    def to_json_dict(self) -> dict:
        return {
            "format": "shellcast-mlp-v1",
            "n_inputs": self.architecture.n_inputs,
            "hidden": list(self.architecture.hidden),
            "seed": self.seed,
            "input_mean": None if self.input_mean is None else self.input_mean.tolist(),
            "input_std": None if self.input_std is None else self.input_std.tolist(),
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Mlp":
        if obj.get("format") != "shellcast-mlp-v1":
            raise ValueError(f"unsupported model format {obj.get('format')!r}")
        arch = MlpArchitecture(n_inputs=obj["n_inputs"], hidden=tuple(obj["hidden"]))
        dims = arch.dims
        weights = [
            np.array(flat, dtype=np.float64).reshape(dims[i], dims[i + 1])
            for i, flat in enumerate(obj["weights"])
        ]
        biases = [np.array(b, dtype=np.float64) for b in obj["biases"]]
        mean = obj.get("input_mean")
        std = obj.get("input_std")
        return cls(
            architecture=arch, weights=weights, biases=biases, seed=obj["seed"],
            input_mean=None if mean is None else np.array(mean, dtype=np.float64),
            input_std=None if std is None else np.array(std, dtype=np.float64),
        )


def init(architecture: MlpArchitecture, seed: int) -> Mlp:
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    dims = architecture.dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return Mlp(architecture=architecture, weights=weights, biases=biases, seed=seed)


def _forward_activations(mlp: Mlp, X: np.ndarray) -> list[np.ndarray]:
    acts = [X]
    for W, b in zip(mlp.weights, mlp.biases):
        acts.append(sigmoid(acts[-1] @ W + b))
    return acts


def forward(mlp: Mlp, x: np.ndarray) -> np.ndarray | float:
    """Raw network output in (0, 1); no standardization applied."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != mlp.architecture.n_inputs:
        raise ValueError(f"expected {mlp.architecture.n_inputs} inputs, got {X.shape[1]}")
    out = _forward_activations(mlp, X)[-1][:, 0]
    return float(out[0]) if single else out


def class_weights(labels: np.ndarray) -> tuple[float, float]:
    """Balanced weights (w_pos, w_neg) = n / (2 * n_class)."""
    y = np.asarray(labels)
    n = y.shape[0]
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("balanced class weights need both classes present")
    return n / (2.0 * n_pos), n / (2.0 * n_neg)


def _sample_weights(y: np.ndarray, weights: tuple[float, float]) -> np.ndarray:
    w_pos, w_neg = weights
    return np.where(y == 1, w_pos, w_neg)


def loss(mlp: Mlp, X: np.ndarray, y: np.ndarray, weights: tuple[float, float]) -> float:
    """Mean class-weighted binary cross-entropy over the batch."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("loss needs a non-empty batch")
    p = np.clip(forward(mlp, X), PROB_CLIP, 1.0 - PROB_CLIP)
    sw = _sample_weights(y, weights)
    per_sample = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(np.mean(sw * per_sample))


def gradient(mlp: Mlp, X: np.ndarray, y: np.ndarray, weights: tuple[float, float]):
    """Exact gradient of loss() w.r.t. every weight matrix and bias.

    Returns (grad_weights, grad_biases) with the model's shapes.  Uses the
    sigmoid cross-entropy identity at the output: dL/dz = w * (p - y) / B.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    batch = X.shape[0]
    acts = _forward_activations(mlp, X)
    p = acts[-1][:, 0]
    sw = _sample_weights(y, weights)
    delta = (sw * (p - y) / batch)[:, None]
    grad_w = [np.zeros_like(W) for W in mlp.weights]
    grad_b = [np.zeros_like(b) for b in mlp.biases]
    for layer in range(len(mlp.weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            a = acts[layer]
            delta = (delta @ mlp.weights[layer].T) * a * (1.0 - a)
    return grad_w, grad_b


@dataclass
class AdagradState:
    """Per-parameter accumulated squared gradients."""

    g_weights: list[np.ndarray]
    g_biases: list[np.ndarray]
    learning_rate: float = LEARNING_RATE
    epsilon: float = EPSILON

    @classmethod
    def for_model(cls, mlp: Mlp, learning_rate: float = LEARNING_RATE,
                  epsilon: float = EPSILON) -> "AdagradState":
        return cls(
            g_weights=[np.zeros_like(w) for w in mlp.weights],
            g_biases=[np.zeros_like(b) for b in mlp.biases],
            learning_rate=learning_rate,
            epsilon=epsilon,
        )


def adagrad_step(value: np.ndarray, grad: np.ndarray, accum: np.ndarray,
                 lr: float, eps: float) -> None:
    """In place: accum += grad^2; value -= lr * grad / (sqrt(accum) + eps)."""
    accum += grad * grad
    value -= lr * grad / (np.sqrt(accum) + eps)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    shuffle_seed: int = 0
    learning_rate: float = LEARNING_RATE

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


def train(mlp: Mlp, X: np.ndarray, y: np.ndarray, config: TrainConfig) -> Mlp:
    """Fit in place with balanced class weights; returns the same model.

    Standardization statistics come from this training set only and are
    stored in the model for inference.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise TrainingError("empty training set")
    mean, std = standardize_fit(X)
    mlp.input_mean, mlp.input_std = mean, std
    Xs = standardize_apply(X, mean, std)
    weights = class_weights(y)
    state = AdagradState.for_model(mlp, learning_rate=config.learning_rate)
    n = Xs.shape[0]
    for epoch in range(config.epochs):
        rng = np.random.default_rng((config.shuffle_seed, epoch))
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            gw, gb = gradient(mlp, Xs[idx], y[idx], weights)
            for layer in range(len(mlp.weights)):
                adagrad_step(mlp.weights[layer], gw[layer], state.g_weights[layer],
                             state.learning_rate, state.epsilon)
                adagrad_step(mlp.biases[layer], gb[layer], state.g_biases[layer],
                             state.learning_rate, state.epsilon)
        if not all(np.all(np.isfinite(w)) for w in mlp.weights):
            raise TrainingError(f"non-finite parameters after epoch {epoch}")
    final_loss = loss(mlp, Xs, y, weights)
    if not np.isfinite(final_loss):
        raise TrainingError(f"non-finite training loss {final_loss!r}")
    return mlp
