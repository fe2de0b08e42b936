"""Random forest of depth-limited Gini trees with majority voting."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import ENEMY, FRIEND, as_arrays
from .errors import EmptyInputError, TrainingError


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 7
    max_features: int | str = "sqrt"
    bootstrap: bool = True
    min_samples_split: int = 2
    seed: int = 0

    def n_features(self, dim: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(dim)))
        if self.max_features in (None, "all"):
            return dim
        return max(1, min(dim, int(self.max_features)))


@dataclass
class DecisionTree:
    """Flat node arrays; a leaf has ``feature == -1``.  Rows go left when ``x <= threshold``."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    label: list[int] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)

    def _add(self, label: int, depth: int) -> int:
        for arr, v in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                       (self.right, -1), (self.label, label), (self.depth, depth)):
            arr.append(v)
        return len(self.feature) - 1

    @property
    def max_depth(self) -> int:
        return max(self.depth)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        feature = np.array(self.feature)
        threshold = np.array(self.threshold)
        left, right = np.array(self.left), np.array(self.right)
        active = feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            f = feature[node[rows]]
            go_left = X[rows, f] <= threshold[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
            active = feature[node] >= 0
        return np.array(self.label)[node]

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in ("feature", "threshold", "left", "right", "label", "depth")}


def gini(y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    p = np.mean(y)
    return 1.0 - p * p - (1 - p) * (1 - p)


def _majority(y: np.ndarray) -> int:
    friends = int(y.sum())
    return FRIEND if friends > len(y) - friends else ENEMY


def best_split(X: np.ndarray, y: np.ndarray, features) -> tuple[float, int, float] | None:
    """Lowest weighted Gini impurity over thresholds of the candidate features."""
    n = len(y)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        valid = np.flatnonzero(xs[:-1] < xs[1:])
        if len(valid) == 0:
            continue
        n_left = valid + 1
        left_pos = np.cumsum(ys)[valid]
        n_right = n - n_left
        right_pos = ys.sum() - left_pos
        pl, pr = left_pos / n_left, right_pos / n_right
        cost = (n_left * 2 * pl * (1 - pl) + n_right * 2 * pr * (1 - pr)) / n
        k = int(np.argmin(cost))
        if best is None or cost[k] < best[0]:
            best = (float(cost[k]), int(f), float((xs[valid[k]] + xs[valid[k] + 1]) / 2))
    return best


def grow_tree(X: np.ndarray, y: np.ndarray, config: ForestConfig, rng: np.random.Generator) -> DecisionTree:
    tree = DecisionTree()
    n_feat = config.n_features(X.shape[1])
    root = tree._add(_majority(y), 0)
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        ys = y[idx]
        depth = tree.depth[node]
        if depth >= config.max_depth or len(idx) < config.min_samples_split or ys.min() == ys.max():
            continue
        features = rng.choice(X.shape[1], n_feat, replace=False)
        split = best_split(X[idx], ys, features)
        if split is None or split[0] >= gini(ys):
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        tree.feature[node], tree.threshold[node] = f, thr
        tree.left[node] = tree._add(_majority(y[li]), depth + 1)
        tree.right[node] = tree._add(_majority(y[ri]), depth + 1)
        stack += [(tree.right[node], ri), (tree.left[node], li)]
    return tree


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    config: ForestConfig

    def to_json(self, path: str | Path) -> Path:
        """JSON document: ``config`` plus one flat node table per tree."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"kind": "forest", "config": vars(self.config), "trees": [t.to_dict() for t in self.trees]}
        path.write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
        return path

    @classmethod
    def from_json(cls, path: str | Path) -> "ForestModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([DecisionTree(**t) for t in doc["trees"]], ForestConfig(**doc["config"]))


def train_forest(samples, config: ForestConfig | None = None) -> ForestModel:
    config = config or ForestConfig()
    if isinstance(samples, tuple):
        X, y = np.atleast_2d(np.asarray(samples[0], float)), np.asarray(samples[1], int)
    else:
        if not samples:
            raise EmptyInputError("no samples")
        X, y = as_arrays(samples)
    if len(y) == 0:
        raise EmptyInputError("no samples")
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")
    trees = []
    for child in np.random.SeedSequence(config.seed).spawn(config.n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, len(y), len(y)) if config.bootstrap else np.arange(len(y))
        trees.append(grow_tree(X[idx], y[idx], config, rng))
    return ForestModel(trees, config)


def predict_forest(model: ForestModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Majority-vote class and the fraction of trees voting for it; ties go to enemy."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    votes = np.zeros(len(X))
    for tree in model.trees:
        votes += tree.predict(X)
    friend_share = votes / len(model.trees)
    labels = (friend_share > 0.5).astype(int)
    return labels, np.where(labels == FRIEND, friend_share, 1 - friend_share)
