"""Balanced accuracy, per-run reports, cross-validation and histograms."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .dataset import ENEMY, FRIEND, RelationSample, kfold_split
from .errors import DegenerateClassError, EmptyInputError
from .io import write_rows

Predictor = Callable[[Sequence[RelationSample]], np.ndarray]


def _counts(predictions, labels) -> tuple[int, int, int, int]:
    pred = np.asarray(predictions, dtype=int).ravel()
    lab = np.asarray(labels, dtype=int).ravel()
    if pred.shape != lab.shape:
        raise ValueError(f"{len(pred)} predictions for {len(lab)} labels")
    friend, enemy = lab == FRIEND, lab == ENEMY
    return (int(friend.sum()), int((pred[friend] == FRIEND).sum()),
            int(enemy.sum()), int((pred[enemy] == ENEMY).sum()))


def balanced_accuracy(predictions, labels) -> float:
    """Mean of the friend and enemy recalls.

    Raises :class:`DegenerateClassError` (carrying the recall of the class that
    is present) when one class is missing from ``labels``.
    """
    nf, cf, ne, ce = _counts(predictions, labels)
    if nf == 0 and ne == 0:
        raise EmptyInputError("no labels")
    if nf == 0:
        raise DegenerateClassError(ENEMY, ce / ne)
    if ne == 0:
        raise DegenerateClassError(FRIEND, cf / nf)
    return 0.5 * (cf / nf + ce / ne)


@dataclass
class EvalReport:
    n_friend_total: int
    n_friend_correct: int
    n_enemy_total: int
    n_enemy_correct: int
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_predictions(cls, predictions, labels, **metadata) -> "EvalReport":
        return cls(*_counts(predictions, labels), metadata=metadata)

    @property
    def degenerate(self) -> bool:
        return self.n_friend_total == 0 or self.n_enemy_total == 0

    @property
    def friend_recall(self) -> float:
        return self.n_friend_correct / self.n_friend_total if self.n_friend_total else math.nan

    @property
    def enemy_recall(self) -> float:
        return self.n_enemy_correct / self.n_enemy_total if self.n_enemy_total else math.nan

    @property
    def bacc(self) -> float:
        """Balanced accuracy, or NaN for a single-class test set."""
        if self.degenerate:
            return math.nan
        return 0.5 * (self.friend_recall + self.enemy_recall)


def summarize(reports: Sequence[EvalReport]) -> dict[str, float]:
    """Mean and standard error of the mean over non-degenerate reports."""
    values = np.array([r.bacc for r in reports if not r.degenerate])
    n = len(values)
    return {
        "mean": float(values.mean()) if n else math.nan,
        "sem": float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0,
        "n": n,
        "n_degenerate": len(reports) - n,
    }


def cross_validate(
    samples: Sequence[RelationSample],
    k: int,
    train_fn: Callable[[Sequence[RelationSample], int], Predictor],
    seed: int = 0,
    **metadata,
) -> list[EvalReport]:
    """One report per fold; ``train_fn(train, seed)`` returns a predictor over samples."""
    reports = []
    for fold, (train, test) in enumerate(kfold_split(samples, k, seed)):
        predict = train_fn(train, seed + fold)
        preds = predict(test)
        reports.append(EvalReport.from_predictions(
            preds, [s.label for s in test], fold=fold, seed=seed + fold, **metadata))
    return reports


def bacc_histogram(reports, n_bins: int = 20, value_range=None) -> tuple[np.ndarray, np.ndarray]:
    """Density histogram (unit area) of balanced accuracies.

    Accepts reports or raw values; degenerate reports are skipped.
    """
    values = np.array([r.bacc if isinstance(r, EvalReport) else float(r) for r in reports], dtype=float)
    values = values[~np.isnan(values)]
    if len(values) == 0:
        raise EmptyInputError("no balanced accuracies to histogram")
    density, edges = np.histogram(values, bins=n_bins, range=value_range, density=True)
    return edges, density


def write_reports_csv(path: str | Path, reports: Sequence[EvalReport]) -> Path:
    keys = sorted({k for r in reports for k in r.metadata})
    header = [*keys, "n_friend_total", "n_friend_correct", "n_enemy_total", "n_enemy_correct", "bacc"]
    rows = (
        [*(r.metadata.get(k, "") for k in keys), r.n_friend_total, r.n_friend_correct,
         r.n_enemy_total, r.n_enemy_correct, r.bacc]
        for r in reports
    )
    return write_rows(path, header, rows)


def write_histogram_csv(path: str | Path, edges: np.ndarray, density: np.ndarray) -> Path:
    rows = ([float(lo), float(hi), float(h)] for lo, hi, h in zip(edges[:-1], edges[1:], density))
    return write_rows(path, ["bin_lo", "bin_hi", "density"], rows)
