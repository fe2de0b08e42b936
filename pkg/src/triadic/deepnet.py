"""Feed-forward ReLU network with a single sigmoid output (friend probability).

Hidden widths default to 128, 64, 32 and 8.  Trained by minibatch SGD on the
binary cross-entropy, computed from logits for numerical stability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .dataset import Standardizer, as_arrays
from .errors import TrainingError
from .serialize import load_params, save_params

HIDDEN = (128, 64, 32, 8)


@dataclass
class DeepConfig:
    hidden: tuple[int, ...] = HIDDEN
    lr0: float = 0.01
    lr_decay: float = 0.999
    minibatch: int = 64
    epochs: int = 50
    standardize: bool = True
    seed: int = 0


@dataclass
class DeepNetModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    scaler: Standardizer
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]


def init_deep(input_dim: int, hidden=HIDDEN, rng: np.random.Generator | int = 0,
              scaler: Standardizer | None = None) -> DeepNetModel:
    """He-uniform weights for the ReLU layers, Glorot-uniform for the output, zero biases."""
    rng = np.random.default_rng(rng)
    sizes = [input_dim, *hidden, 1]
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = k == len(sizes) - 2
        bound = math.sqrt(6 / (fan_in + fan_out)) if last else math.sqrt(6 / fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DeepNetModel(weights, biases, scaler or Standardizer.identity(input_dim))


def _forward(model: DeepNetModel, X: np.ndarray):
    acts = [model.scaler.transform(X)]
    pre = []
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ W.T + b
        pre.append(z)
        if k < len(model.weights) - 1:
            acts.append(np.maximum(z, 0.0))
    return acts, pre


def _check(model: DeepNetModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.layer_sizes[0]:
        raise ValueError(f"expected {model.layer_sizes[0]} features, got {X.shape[1]}")
    return X


def deep_logits(model: DeepNetModel, X) -> np.ndarray:
    return _forward(model, _check(model, X))[1][-1][:, 0]


def deep_forward(model: DeepNetModel, X) -> np.ndarray:
    """Friend probability for each row, kept strictly inside (0, 1)."""
    p = expit(deep_logits(model, X))
    return np.clip(p, np.finfo(float).tiny, 1 - np.finfo(float).epsneg)


def predict_deep(model: DeepNetModel, X) -> np.ndarray:
    """Friend iff the sigmoid output exceeds 0.5 (an exact tie is enemy)."""
    return (deep_logits(model, X) > 0).astype(int)


def deep_loss(model: DeepNetModel, X, y) -> float:
    """Summed binary cross-entropy, ``softplus(-z)`` for friends and ``softplus(z)`` for enemies."""
    z = deep_logits(model, X)
    y = np.asarray(y, dtype=float)
    return float((np.logaddexp(0, -z) * y + np.logaddexp(0, z) * (1 - y)).sum())


def deep_gradient(model: DeepNetModel, X, y) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of :func:`deep_loss` for every weight matrix and bias vector."""
    X = _check(model, X)
    y = np.asarray(y, dtype=float)
    acts, pre = _forward(model, X)
    delta = (expit(pre[-1][:, 0]) - y)[:, None]
    n_layers = len(model.weights)
    dW, db = [None] * n_layers, [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        dW[k] = delta.T @ acts[k]
        db[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k]) * (pre[k - 1] > 0)
    return dW, db


def train_deep(samples, config: DeepConfig | None = None) -> DeepNetModel:
    """Minibatch SGD; ``samples`` is a sample list or an ``(X, y)`` pair.

    The learning rate decays by ``lr_decay`` after every minibatch.
    """
    config = config or DeepConfig()
    if isinstance(samples, tuple):
        X, y = np.atleast_2d(np.asarray(samples[0], float)), np.asarray(samples[1], int)
    else:
        X, y = as_arrays(samples)
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")
    rng = np.random.default_rng(config.seed)
    scaler = Standardizer.fit(X) if config.standardize else Standardizer.identity(X.shape[1])
    model = init_deep(X.shape[1], config.hidden, rng, scaler)
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(X))
        for lo in range(0, len(X), config.minibatch):
            batch = order[lo:lo + config.minibatch]
            dW, db = deep_gradient(model, X[batch], y[batch])
            lr = config.lr0 * config.lr_decay ** step / len(batch)
            for k in range(len(model.weights)):
                model.weights[k] -= lr * dW[k]
                model.biases[k] -= lr * db[k]
            step += 1
        model.loss_history.append(deep_loss(model, X, y) / len(X))
    return model


def save_deep(model: DeepNetModel, path: str | Path) -> Path:
    """Parameter file with a ``layers`` manifest listing every layer size."""
    blocks = {"scaler_mean": model.scaler.mean, "scaler_std": model.scaler.std}
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        blocks[f"W{k + 1}"] = W
        blocks[f"b{k + 1}"] = b
    meta = {"kind": "deepnet", "layers": model.layer_sizes,
            "hidden_activation": "relu", "output_activation": "sigmoid"}
    return save_params(path, meta, blocks)


def load_deep(path: str | Path) -> DeepNetModel:
    meta, blocks = load_params(path)
    if meta.get("kind") != "deepnet":
        raise ValueError(f"{path}: not a deepnet parameter file")
    n = len(meta["layers"]) - 1
    return DeepNetModel(
        [blocks[f"W{k + 1}"] for k in range(n)],
        [blocks[f"b{k + 1}"].ravel() for k in range(n)],
        Standardizer(blocks["scaler_mean"].ravel(), blocks["scaler_std"].ravel()),
    )
