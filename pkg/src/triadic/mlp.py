"""One-hidden-layer softmax classifier for friend/enemy relations.

Class index 0 is enemy and 1 is friend, so probability pairs read
``(p_enemy, p_friend)``.  Training is plain SGD with an exponentially decaying
learning rate and class-balanced minibatches; an optional "dynamical" loss
reweights the two classes with antiphase sinusoids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .dataset import ENEMY, FRIEND, PredictorSet, RelationSample, Standardizer, as_arrays
from .errors import ConfigurationError, TrainingError
from .graph import PROSOCIALITY_LEVELS
from .serialize import load_params, save_params

LOG_CLAMP = 1e-12
PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class TrainConfig:
    lr0: float = 0.1
    lr_decay: float = 0.99
    minibatch: int = 20
    steps: int = 200
    hidden: int = 100
    dynamical: bool = False
    oscillation_amplitude: float = 10.0
    oscillation_period: float = 5.0
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("lr0", "lr_decay", "minibatch", "steps", "hidden", "oscillation_period"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.oscillation_amplitude < 0:
            raise ConfigurationError("oscillation_amplitude must be non-negative")
        if self.minibatch % 2:
            raise ConfigurationError("minibatch must be even to hold equal class halves")

    @classmethod
    def for_isolated(cls, **overrides) -> "TrainConfig":
        """Settings used for relations without two-paths: 1000 steps, dynamical loss."""
        return cls(**{"steps": 1000, "dynamical": True, **overrides})


@dataclass
class MlpModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    scaler: Standardizer
    predictors: str | None = None
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}


def init_model(input_dim: int, hidden: int = 100, rng: np.random.Generator | int = 0,
               scaler: Standardizer | None = None) -> MlpModel:
    """Uniform init in +-1/sqrt(fan_in) for weights and biases."""
    rng = np.random.default_rng(rng)
    a1, a2 = 1 / math.sqrt(input_dim), 1 / math.sqrt(hidden)
    return MlpModel(
        W1=rng.uniform(-a1, a1, (hidden, input_dim)),
        b1=rng.uniform(-a1, a1, hidden),
        W2=rng.uniform(-a2, a2, (2, hidden)),
        b2=rng.uniform(-a2, a2, 2),
        scaler=scaler or Standardizer.identity(input_dim),
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(model: MlpModel, X: np.ndarray):
    Z = model.scaler.transform(X)
    A = Z @ model.W1.T + model.b1
    H = np.maximum(A, 0.0)
    F = H @ model.W2.T + model.b2
    return Z, A, H, F


def _as_batch(model: MlpModel, features) -> tuple[np.ndarray, bool]:
    X = np.asarray(features, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.input_dim:
        raise ValueError(f"expected {model.input_dim} features, got {X.shape[1]}")
    return X, single


def forward_probs(model: MlpModel, features) -> np.ndarray:
    """Class probabilities ``(p_enemy, p_friend)`` for one vector or a batch."""
    X, single = _as_batch(model, features)
    probs = softmax(_forward(model, X)[3])
    return probs[0] if single else probs


def predict(model: MlpModel, features) -> np.ndarray:
    """Argmax class; an exact 0.5 tie goes to enemy."""
    probs = np.atleast_2d(forward_probs(model, features))
    return (probs[:, FRIEND] > probs[:, ENEMY]).astype(int)


def cross_entropy(probs, labels, class_weights=None) -> float:
    """Summed (optionally class-weighted) negative log-likelihood.

    True-class probabilities are clamped at 1e-12 before the log.
    """
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    labels = np.asarray(labels, dtype=int).ravel()
    q = np.maximum(probs[np.arange(len(labels)), labels], LOG_CLAMP)
    weights = np.ones(len(labels)) if class_weights is None else np.asarray(class_weights, float)[labels]
    return float(-(weights * np.log(q)).sum())


def loss(model: MlpModel, X, y, class_weights=None) -> float:
    return cross_entropy(forward_probs(model, np.atleast_2d(X)), y, class_weights)


def gradient(model: MlpModel, X, y, class_weights=None) -> dict[str, np.ndarray]:
    """Gradient of :func:`loss` (the summed form) with respect to W1, b1, W2, b2."""
    X, _ = _as_batch(model, X)
    y = np.asarray(y, dtype=int).ravel()
    if len(y) == 0:
        raise ValueError("empty batch")
    Z, A, H, F = _forward(model, X)
    dF = softmax(F)
    dF[np.arange(len(y)), y] -= 1.0
    if class_weights is not None:
        dF *= np.asarray(class_weights, dtype=float)[y][:, None]
    dH = dF @ model.W2
    dA = dH * (A > 0)
    return {"W1": dA.T @ Z, "b1": dA.sum(axis=0), "W2": dF.T @ H, "b2": dF.sum(axis=0)}


def learning_rate(config: TrainConfig, step: int) -> float:
    return config.lr0 * config.lr_decay ** step


def dynamical_weights(step: int, amplitude: float = 10.0, period: float = 5.0) -> tuple[float, float]:
    """Per-class loss weights ``(w_enemy, w_friend)`` at ``step``.

    ``w_c = 1 + A * (1 + s_c * sin(2 pi t / T)) / 2`` with ``s_enemy = +1`` and
    ``s_friend = -1``: both stay in ``[1, 1 + A]`` and always sum to ``2 + A``.
    """
    if step < 0:
        raise ValueError("step must be non-negative")
    s = math.sin(2 * math.pi * step / period)
    return 1 + amplitude * (1 + s) / 2, 1 + amplitude * (1 - s) / 2


def balanced_batches(labels, minibatch: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """Endless stream of index batches with ``minibatch // 2`` samples per class.

    The larger class is drawn without replacement, reshuffling after each
    pass; the smaller class is drawn with replacement.
    """
    labels = np.asarray(labels, dtype=int)
    idx = {c: np.flatnonzero(labels == c) for c in (ENEMY, FRIEND)}
    if min(len(v) for v in idx.values()) == 0:
        raise TrainingError("both classes are required for balanced minibatches")
    half = minibatch // 2
    major = ENEMY if len(idx[ENEMY]) > len(idx[FRIEND]) else FRIEND
    minor = 1 - major
    order, pos = rng.permutation(idx[major]), 0
    while True:
        if pos + half > len(order):
            order, pos = np.concatenate([order[pos:], rng.permutation(idx[major])]), 0
        take_major = order[pos:pos + half]
        pos += half
        take_minor = idx[minor][rng.integers(0, len(idx[minor]), half)]
        parts = {major: take_major, minor: take_minor}
        yield np.concatenate([parts[ENEMY], parts[FRIEND]])


def _data(samples) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(samples, tuple):
        X, y = samples
        return np.atleast_2d(np.asarray(X, dtype=float)), np.asarray(y, dtype=int)
    return as_arrays(samples)


def train(samples: Sequence[RelationSample] | tuple, config: TrainConfig | None = None,
          predictors: str | None = None) -> MlpModel:
    """Fit a model with SGD; ``samples`` is a sample list or an ``(X, y)`` pair."""
    config = config or TrainConfig()
    X, y = _data(samples)
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")
    rng = np.random.default_rng(config.seed)
    scaler = Standardizer.fit(X) if config.standardize else Standardizer.identity(X.shape[1])
    model = init_model(X.shape[1], config.hidden, rng, scaler)
    model.predictors = predictors
    batches = balanced_batches(y, config.minibatch, rng)
    for step in range(config.steps):
        batch = next(batches)
        weights = None
        if config.dynamical:
            # divide by the mean class weight so only the tilt oscillates, not the step size
            w = dynamical_weights(step, config.oscillation_amplitude, config.oscillation_period)
            weights = np.asarray(w) / (1 + config.oscillation_amplitude / 2)
        grads = gradient(model, X[batch], y[batch], weights)
        model.loss_history.append(loss(model, X[batch], y[batch], weights) / len(batch))
        scale = learning_rate(config, step) / len(batch)
        for name in PARAM_NAMES:
            getattr(model, name)[...] -= scale * grads[name]
    return model


# -- probability curves -------------------------------------------------------

def _require(model: MlpModel, predictors: PredictorSet) -> None:
    if model.predictors is not None and PredictorSet(model.predictors) is not predictors:
        raise ConfigurationError(
            f"model was trained on {model.predictors}, expected {predictors.value}"
        )
    expected = 1 if predictors is PredictorSet.influence_only else 2
    if model.input_dim != expected:
        raise ConfigurationError(f"model takes {model.input_dim} inputs, expected {expected}")


def probability_curve(model: MlpModel, influence_range=(-10.0, 30.0), n_points: int = 81) -> np.ndarray:
    """Rows of ``(I, p_friend, p_enemy)`` over an evenly spaced influence sweep."""
    _require(model, PredictorSet.influence_only)
    grid = np.linspace(influence_range[0], influence_range[1], n_points)
    probs = forward_probs(model, grid[:, None])
    return np.column_stack([grid, probs[:, FRIEND], probs[:, ENEMY]])


def probability_surface(model: MlpModel, prosociality_grid=PROSOCIALITY_LEVELS) -> np.ndarray:
    """Matrix of ``p_friend`` with rows indexed by nominator and columns by nominee."""
    _require(model, PredictorSet.prosociality_only)
    grid = np.asarray(prosociality_grid, dtype=float)
    src, dst = np.meshgrid(grid, grid, indexing="ij")
    probs = forward_probs(model, np.column_stack([src.ravel(), dst.ravel()]))
    return probs[:, FRIEND].reshape(len(grid), len(grid))


def _mean_sem(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = stack.mean(axis=0)
    if len(stack) < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / math.sqrt(len(stack))


def ensemble_curve(models: Sequence[MlpModel], influence_range=(-10.0, 30.0), n_points: int = 81) -> np.ndarray:
    """Rows ``(I, mean p_friend, sem p_friend, mean p_enemy, sem p_enemy)``."""
    curves = np.stack([probability_curve(m, influence_range, n_points) for m in models])
    f_mean, f_sem = _mean_sem(curves[:, :, 1])
    e_mean, e_sem = _mean_sem(curves[:, :, 2])
    return np.column_stack([curves[0, :, 0], f_mean, f_sem, e_mean, e_sem])


def ensemble_surface(models: Sequence[MlpModel], prosociality_grid=PROSOCIALITY_LEVELS):
    """Mean and standard error of ``p_friend`` surfaces over an ensemble."""
    return _mean_sem(np.stack([probability_surface(m, prosociality_grid) for m in models]))


def crossing_point(curve: np.ndarray) -> float:
    """Influence at which ``p_friend`` first crosses 0.5 (linear interpolation)."""
    x, p = curve[:, 0], curve[:, 1]
    above = p >= 0.5
    hits = np.flatnonzero(above[1:] != above[:-1])
    if len(hits) == 0:
        return math.nan
    k = hits[0]
    return float(x[k] + (0.5 - p[k]) * (x[k + 1] - x[k]) / (p[k + 1] - p[k]))


# -- persistence ----------------------------------------------------------------

def save_model(model: MlpModel, path: str | Path) -> Path:
    meta = {"kind": "mlp", "predictors": model.predictors,
            "input_dim": model.input_dim, "hidden": model.W1.shape[0]}
    blocks = {"scaler_mean": model.scaler.mean, "scaler_std": model.scaler.std, **model.params()}
    return save_params(path, meta, blocks)


def load_model(path: str | Path) -> MlpModel:
    meta, blocks = load_params(path)
    if meta.get("kind") != "mlp":
        raise ValueError(f"{path}: not an mlp parameter file")
    return MlpModel(
        W1=blocks["W1"], b1=blocks["b1"].ravel(), W2=blocks["W2"], b2=blocks["b2"].ravel(),
        scaler=Standardizer(blocks["scaler_mean"].ravel(), blocks["scaler_std"].ravel()),
        predictors=meta.get("predictors"),
    )
