"""Labelled relationship samples, predictor sets and train/test splits."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, EmptyInputError, NotFoundError
from .graph import SignedDigraph, two_path_stats
from .io import write_rows

FRIEND = 1
ENEMY = 0

GENDER_VALUES = {"male": 0.0, "female": 1.0, "nonbinary": 0.5}


class PredictorSet(str, enum.Enum):
    influence_and_traits = "influence_and_traits"
    influence_only = "influence_only"
    traits_only = "traits_only"
    prosociality_only = "prosociality_only"
    embedding_pair = "embedding_pair"


FEATURE_NAMES = {
    PredictorSet.influence_and_traits: (
        "influence", "src_gender", "src_crt", "src_prosociality",
        "dst_gender", "dst_crt", "dst_prosociality",
    ),
    PredictorSet.influence_only: ("influence",),
    PredictorSet.traits_only: (
        "src_gender", "src_crt", "src_prosociality", "dst_gender", "dst_crt", "dst_prosociality",
    ),
    PredictorSet.prosociality_only: ("src_prosociality", "dst_prosociality"),
}


@dataclass(frozen=True)
class ClassScheme:
    """Which raw weights count as friend or enemy; anything else is excluded."""

    friend_weights: frozenset = frozenset({2})
    enemy_weights: frozenset = frozenset({-1, -2})

    def __post_init__(self):
        object.__setattr__(self, "friend_weights", frozenset(self.friend_weights))
        object.__setattr__(self, "enemy_weights", frozenset(self.enemy_weights))
        if not self.friend_weights or not self.enemy_weights:
            raise ConfigurationError("friend and enemy weight sets must be non-empty")
        if not self.friend_weights <= {1, 2} or not self.enemy_weights <= {-1, -2}:
            raise ConfigurationError("friend weights must be positive and enemy weights negative")


DEFAULT_SCHEME = ClassScheme()
BROAD_SCHEME = ClassScheme(frozenset({1, 2}), frozenset({-1, -2}))
SCHEMES = {"default": DEFAULT_SCHEME, "broad": BROAD_SCHEME}


def label_relation(weight: int, scheme: ClassScheme = DEFAULT_SCHEME) -> int | None:
    """FRIEND, ENEMY, or None when the weight is excluded by the scheme."""
    if weight in scheme.friend_weights:
        return FRIEND
    if weight in scheme.enemy_weights:
        return ENEMY
    return None


@dataclass(frozen=True, eq=False)
class RelationSample:
    src: Hashable
    dst: Hashable
    features: np.ndarray
    label: int
    school_id: Hashable = None
    course: int | None = None
    two_path_count: int = 0


def _traits(g: SignedDigraph, node: Hashable) -> tuple[float, float, float]:
    a = g.attributes(node)
    return GENDER_VALUES[a.gender], float(a.crt), float(a.prosociality)


def build_samples(
    g: SignedDigraph,
    scheme: ClassScheme = DEFAULT_SCHEME,
    predictors: PredictorSet | str = PredictorSet.influence_and_traits,
    embeddings=None,
    merge: str = "hadamard",
    labels: Mapping[tuple[Hashable, Hashable], int] | None = None,
) -> list[RelationSample]:
    """One sample per declared edge that the scheme does not exclude.

    Triadic influence is always computed on the full signed graph.  When
    ``labels`` is given it overrides the scheme: exactly the edges it lists are
    used, with the given labels.
    """
    predictors = PredictorSet(predictors)
    if (predictors is PredictorSet.embedding_pair) != (embeddings is not None):
        raise ConfigurationError("embeddings must be given exactly when predictors is embedding_pair")
    influence, paths = two_path_stats(g)
    if embeddings is not None:
        from .embedding import embed_edge

    samples = []
    for i, j, w in g.edges():
        if labels is not None:
            if (i, j) not in labels:
                continue
            label = int(labels[i, j])
        else:
            label = label_relation(w, scheme)
            if label is None:
                continue
        if predictors is PredictorSet.embedding_pair:
            try:
                feats = embed_edge(embeddings, i, j, merge)
            except KeyError as exc:
                raise ConfigurationError(f"missing embedding for edge ({i}, {j}): {exc}") from None
        elif predictors is PredictorSet.influence_only:
            feats = np.array([influence[i, j]], dtype=float)
        else:
            ti, tj = _traits(g, i), _traits(g, j)
            if predictors is PredictorSet.influence_and_traits:
                feats = np.array([influence[i, j], *ti, *tj], dtype=float)
            elif predictors is PredictorSet.traits_only:
                feats = np.array([*ti, *tj], dtype=float)
            else:
                feats = np.array([ti[2], tj[2]], dtype=float)
        try:
            a = g.attributes(i)
            school, course = a.school_id, a.course
        except KeyError:
            school, course = None, None
        samples.append(RelationSample(i, j, feats, label, school, course, paths[i, j]))
    return samples


def as_arrays(samples: Sequence[RelationSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        raise EmptyInputError("no samples")
    X = np.vstack([s.features for s in samples]).astype(float)
    y = np.array([s.label for s in samples], dtype=int)
    return X, y


@dataclass
class Standardizer:
    """Per-feature z-scoring fitted on training data only."""

    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    std: np.ndarray = field(default_factory=lambda: np.ones(0))

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        std = X.std(axis=0)
        std[std == 0] = 1.0
        return cls(X.mean(axis=0), std)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(np.zeros(dim), np.ones(dim))

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


# -- splits ---------------------------------------------------------------

Split = tuple[list[RelationSample], list[RelationSample]]


def split_by_two_paths(samples: Sequence[RelationSample]) -> Split:
    """(connected, isolated): relations with and without a directed two-path."""
    connected = [s for s in samples if s.two_path_count > 0]
    isolated = [s for s in samples if s.two_path_count == 0]
    return connected, isolated


def random_split(samples: Sequence[RelationSample], test_fraction: float = 0.2, seed: int = 0) -> Split:
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(samples)
    if n < 2:
        raise EmptyInputError("need at least two samples to split")
    n_test = int(math.floor(test_fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = set(perm[:n_test].tolist())
    train = [s for k, s in enumerate(samples) if k not in test_idx]
    test = [s for k, s in enumerate(samples) if k in test_idx]
    return train, test


def holdout_course_split(samples: Sequence[RelationSample], school_id: Hashable, course: int) -> Split:
    """Test on every relation nominated from one (school, course); train on the rest."""
    test = [s for s in samples if s.school_id == school_id and s.course == course]
    if not test:
        raise NotFoundError(f"no samples for school {school_id!r}, course {course!r}")
    train = [s for s in samples if not (s.school_id == school_id and s.course == course)]
    return train, test


def course_keys(samples: Sequence[RelationSample]) -> list[tuple[Hashable, int]]:
    return sorted({(s.school_id, s.course) for s in samples}, key=lambda k: (str(k[0]), k[1]))


def kfold_split(samples: Sequence[RelationSample], k: int = 10, seed: int = 0) -> list[Split]:
    n = len(samples)
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples {n}")
    perm = np.random.default_rng(seed).permutation(n)
    folds = []
    for part in np.array_split(perm, k):
        in_test = np.zeros(n, dtype=bool)
        in_test[part] = True
        folds.append(
            ([s for s, t in zip(samples, in_test) if not t], [s for s, t in zip(samples, in_test) if t])
        )
    return folds


def write_samples_csv(path: str | Path, samples: Sequence[RelationSample]) -> Path:
    dim = len(samples[0].features) if samples else 0
    header = ["src", "dst", "label", "two_path_count", *(f"f{k}" for k in range(dim))]
    rows = (
        [s.src, s.dst, s.label, s.two_path_count, *(float(x) for x in s.features)] for s in samples
    )
    return write_rows(path, header, rows)
