"""Experiment drivers shared by the CLI and the scripts.

Local prediction trains the one-hidden-layer network on relations with a
directed two-path (random 80/20 split per seed) and, separately, on isolated
relations (10-fold cross-validation with the dynamical loss).  Global
prediction trains the deep net or the forest on node2vec edge features under
two treatments: a random 20% test split, or one held-out (school, course).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .dataset import (
    DEFAULT_SCHEME, ClassScheme, PredictorSet, RelationSample, as_arrays, build_samples,
    course_keys, holdout_course_split, random_split, split_by_two_paths,
)
from .deepnet import DeepConfig, predict_deep, train_deep
from .embedding import EmbeddingTable
from .errors import ConfigurationError
from .evaluation import EvalReport, cross_validate
from .forest import ForestConfig, predict_forest, train_forest
from .graph import SignedDigraph
from .mlp import MlpModel, TrainConfig, predict, train
from .smote import oversample

CONNECTED_SETS = (
    PredictorSet.influence_and_traits,
    PredictorSet.influence_only,
    PredictorSet.traits_only,
    PredictorSet.prosociality_only,
)
ISOLATED_SETS = (PredictorSet.traits_only, PredictorSet.prosociality_only)


def _features(samples: Sequence[RelationSample]) -> np.ndarray:
    return np.vstack([s.features for s in samples])


def _labels(samples: Sequence[RelationSample]) -> list[int]:
    return [s.label for s in samples]


def connected_runs(samples: Sequence[RelationSample], predictors: PredictorSet | str,
                   seeds: Sequence[int], config: TrainConfig | None = None,
                   test_fraction: float = 0.2) -> tuple[list[EvalReport], list[MlpModel]]:
    """One model per seed, each on its own random split; returns reports and models."""
    predictors = PredictorSet(predictors)
    config = config or TrainConfig()
    reports, models = [], []
    for seed in seeds:
        train_set, test_set = random_split(samples, test_fraction, seed)
        model = train(train_set, replace(config, seed=seed), predictors.value)
        preds = predict(model, _features(test_set))
        reports.append(EvalReport.from_predictions(
            preds, _labels(test_set), predictors=predictors.value, relations="connected", seed=seed))
        models.append(model)
    return reports, models


def isolated_runs(samples: Sequence[RelationSample], predictors: PredictorSet | str,
                  k: int = 10, seed: int = 0, config: TrainConfig | None = None) -> list[EvalReport]:
    """k-fold cross-validation with the dynamical loss and the longer schedule."""
    predictors = PredictorSet(predictors)
    config = config or TrainConfig.for_isolated()

    def fit(train_set, fold_seed):
        model = train(train_set, replace(config, seed=fold_seed), predictors.value)
        return lambda test: predict(model, _features(test))

    return cross_validate(samples, k, fit, seed, predictors=predictors.value, relations="isolated")


@dataclass
class LocalResults:
    connected: dict[str, list[EvalReport]] = field(default_factory=dict)
    isolated: dict[str, list[EvalReport]] = field(default_factory=dict)
    models: dict[str, list[MlpModel]] = field(default_factory=dict, repr=False)

    def all_reports(self) -> list[EvalReport]:
        return [r for group in (self.connected, self.isolated) for reps in group.values() for r in reps]


def local_prediction(g: SignedDigraph, seeds: Sequence[int] = range(10),
                     scheme: ClassScheme = DEFAULT_SCHEME,
                     connected_sets: Sequence[PredictorSet | str] = CONNECTED_SETS,
                     isolated_sets: Sequence[PredictorSet | str] = ISOLATED_SETS,
                     config: TrainConfig | None = None, isolated_config: TrainConfig | None = None,
                     k: int = 10) -> LocalResults:
    """All local-predictor bars: connected sets per seed, isolated sets by cross-validation."""
    results = LocalResults()
    seeds = list(seeds)
    for ps in connected_sets:
        ps = PredictorSet(ps)
        connected, _ = split_by_two_paths(build_samples(g, scheme, ps))
        reports, models = connected_runs(connected, ps, seeds, config)
        results.connected[ps.value] = reports
        results.models[ps.value] = models
    for ps in isolated_sets:
        ps = PredictorSet(ps)
        _, isolated = split_by_two_paths(build_samples(g, scheme, ps))
        if len(isolated) < k:
            continue
        results.isolated[ps.value] = isolated_runs(isolated, ps, k, seeds[0], isolated_config)
    return results


def curve_models(g: SignedDigraph, predictors: PredictorSet | str, seeds: Sequence[int] = range(10),
                 scheme: ClassScheme = DEFAULT_SCHEME, config: TrainConfig | None = None,
                 connected_only: bool = True) -> list[MlpModel]:
    """Ensemble trained on all (connected) relations, used for probability curves and surfaces."""
    predictors = PredictorSet(predictors)
    samples = build_samples(g, scheme, predictors)
    if connected_only:
        samples, _ = split_by_two_paths(samples)
    config = config or TrainConfig()
    return [train(samples, replace(config, seed=s), predictors.value) for s in seeds]


# -- global prediction ------------------------------------------------------------

Classifier = Callable[[np.ndarray, np.ndarray, int], Callable[[np.ndarray], np.ndarray]]


def deep_classifier(config: DeepConfig | None = None) -> Classifier:
    config = config or DeepConfig()

    def fit(X, y, seed):
        model = train_deep((X, y), replace(config, seed=seed))
        return lambda Z: predict_deep(model, Z)

    return fit


def forest_classifier(config: ForestConfig | None = None, depths: list | None = None) -> Classifier:
    """Forest factory; ``depths`` (if given) collects the measured depth of every tree."""
    config = config or ForestConfig()

    def fit(X, y, seed):
        model = train_forest((X, y), replace(config, seed=seed))
        if depths is not None:
            depths.extend(t.max_depth for t in model.trees)
        return lambda Z: predict_forest(model, Z)[0]

    return fit


CLASSIFIERS = {"deep": deep_classifier, "forest": forest_classifier}


def _global_run(train_set, test_set, fit: Classifier, seed: int, smote_k: int, **metadata) -> EvalReport:
    X, y = as_arrays(train_set)
    X, y = oversample(X, y, smote_k, seed)
    predict_fn = fit(X, y, seed)
    return EvalReport.from_predictions(predict_fn(_features(test_set)), _labels(test_set), seed=seed, **metadata)


def treatment_one(samples: Sequence[RelationSample], fit: Classifier, seeds: Sequence[int],
                  test_fraction: float = 0.2, smote_k: int = 5, **metadata) -> list[EvalReport]:
    """Random test split per seed; SMOTE balances the training part only."""
    return [
        _global_run(*random_split(samples, test_fraction, seed), fit, seed, smote_k, treatment="I", **metadata)
        for seed in seeds
    ]


def treatment_two(samples: Sequence[RelationSample], fit: Classifier, seeds: Sequence[int] | None = None,
                  courses: Sequence[tuple] | None = None, smote_k: int = 5, **metadata) -> list[EvalReport]:
    """Hold out one (school, course) per run.

    By default every course is held out once with seed 0.  With ``seeds``,
    run ``r`` holds out ``courses[r % len(courses)]`` with seed ``seeds[r]``.
    """
    courses = list(courses) if courses is not None else course_keys(samples)
    if not courses:
        raise ConfigurationError("no courses to hold out")
    if seeds is None:
        plan = [(c, 0) for c in courses]
    else:
        plan = [(courses[r % len(courses)], s) for r, s in enumerate(seeds)]
    reports = []
    for (school, course), seed in plan:
        train_set, test_set = holdout_course_split(samples, school, course)
        reports.append(_global_run(train_set, test_set, fit, seed, smote_k, treatment="II",
                                   school_id=school, course=course, **metadata))
    return reports


def embedding_samples(g: SignedDigraph, table: EmbeddingTable, scheme: ClassScheme = DEFAULT_SCHEME,
                      merge: str = "hadamard") -> list[RelationSample]:
    return build_samples(g, scheme, PredictorSet.embedding_pair, embeddings=table, merge=merge)


def mean_bacc(reports: Sequence[EvalReport]) -> float:
    values = [r.bacc for r in reports if not r.degenerate]
    return float(np.mean(values)) if values else math.nan
