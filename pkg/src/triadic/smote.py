"""SMOTE oversampling: synthetic minority points on segments to near neighbours."""
from __future__ import annotations

import numpy as np


def nearest_neighbours(X: np.ndarray, k: int, block: int = 2048) -> np.ndarray:
    """Indices of the ``k`` nearest other rows of ``X`` (Euclidean), nearest first."""
    X = np.asarray(X, dtype=float)
    sq = (X * X).sum(axis=1)
    out = np.empty((len(X), k), dtype=np.int64)
    for lo in range(0, len(X), block):
        rows = np.arange(lo, min(lo + block, len(X)))
        d2 = sq[rows, None] + sq[None, :] - 2 * X[rows] @ X.T
        d2[np.arange(len(rows)), rows] = np.inf
        out[rows] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def smote(minority, k_neighbors: int = 5, target_count: int | None = None, seed: int = 0) -> np.ndarray:
    """Synthetic minority samples bringing the class up to ``target_count``.

    Each synthetic point is ``x + u * (x_nn - x)`` with ``x`` a random minority
    point, ``x_nn`` one of its ``k_neighbors`` nearest minority neighbours and
    ``u ~ U[0, 1)``.  Returns ``max(0, target_count - len(minority))`` rows.
    """
    X = np.atleast_2d(np.asarray(minority, dtype=float))
    m = len(X)
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be at least 1")
    if m < k_neighbors + 1:
        raise ValueError(f"need at least {k_neighbors + 1} minority points, got {m}")
    n_new = max(0, (m if target_count is None else target_count) - m)
    if n_new == 0:
        return np.empty((0, X.shape[1]))
    rng = np.random.default_rng(seed)
    nn = nearest_neighbours(X, k_neighbors)
    base = rng.integers(0, m, n_new)
    partner = nn[base, rng.integers(0, k_neighbors, n_new)]
    u = rng.random(n_new)[:, None]
    return X[base] + u * (X[partner] - X[base])


def oversample(X, y, k_neighbors: int = 5, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Balance a binary training set by SMOTE on the smaller class.

    ``k_neighbors`` shrinks to ``minority_size - 1`` for very small classes.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) != 2:
        raise ValueError("oversampling needs exactly two classes")
    minor = classes[np.argmin(counts)]
    if counts.min() == counts.max():
        return X.copy(), y.copy()
    X_min = X[y == minor]
    k = min(k_neighbors, len(X_min) - 1)
    if k < 1:
        raise ValueError("minority class needs at least two samples for SMOTE")
    synth = smote(X_min, k, counts.max(), seed)
    return np.vstack([X, synth]), np.concatenate([y, np.full(len(synth), minor)])
