"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the terminal summary.
"""
import json
import time

import networkx as nx
import numpy as np
import pytest

from conftest import FIG1_EDGES, brute_force_paths, random_signed_graph, record
from triadic.cli import MANIFEST, main
from triadic.dataset import (
    BROAD_SCHEME, RelationSample, build_samples, holdout_course_split, kfold_split, random_split,
)
from triadic.deepnet import deep_gradient, deep_loss, init_deep
from triadic.embedding import UndirectedView, WalkConfig, biased_walks, embed_graph, locality_summary, walk_locality
from triadic.evaluation import balanced_accuracy, cross_validate
from triadic.experiments import (
    connected_runs, curve_models, deep_classifier, embedding_samples, forest_classifier, local_prediction,
    mean_bacc, treatment_one, treatment_two,
)
from triadic.deepnet import DeepConfig
from triadic.forest import ForestConfig
from triadic.graph import PROSOCIALITY_LEVELS, SignedDigraph, influence_matrix, triadic_influence, two_path_count
from triadic.mlp import (
    TrainConfig, crossing_point, dynamical_weights, ensemble_curve, ensemble_surface, gradient, init_model, loss,
    predict, train,
)
from triadic.smote import nearest_neighbours, oversample, smote
from triadic.synth import BlockConfig, SynthConfig, block_corpus, generate_network, nucleate, planted_threshold_network


def test_criterion_01_influence_oracle():
    start = time.perf_counter()
    mismatches = 0
    rng = np.random.default_rng(2024)
    for trial in range(100):
        g = random_signed_graph(int(rng.integers(2, 21)), 0.3, trial)
        oracle = brute_force_paths(g)
        matrix = influence_matrix(g)
        mismatches += sum(matrix[i, j] != oracle[i, j][0] for i, j, _ in g.edges())
        mismatches += sum(triadic_influence(g, i, j) != v[0] or two_path_count(g, i, j) != v[1]
                          for (i, j), v in oracle.items())
    elapsed = time.perf_counter() - start
    fig1 = SignedDigraph(FIG1_EDGES + [(0, 1, 2)], nodes=range(7))
    i01 = triadic_influence(fig1, 0, 1)
    ok = mismatches == 0 and elapsed < 5 and i01 == 2
    record(1, ok, f"mismatches={mismatches} runtime={elapsed:.2f}s fig1 I_01={i01}")
    assert ok


def test_criterion_02_balanced_accuracy_limits():
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(500):
        n = int(rng.integers(2, 200))
        labels = rng.integers(0, 2, n)
        labels[:2] = (0, 1)
        rng.shuffle(labels)
        bad += balanced_accuracy(np.zeros(n, int), labels) != 0.5
        bad += balanced_accuracy(np.ones(n, int), labels) != 0.5
        bad += balanced_accuracy(labels, labels) != 1.0
    record(2, bad == 0, f"500 label multisets, violations={bad}")
    assert bad == 0


def _relative_error(analytic, numeric):
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return diff / scale


def _finite_difference(params, objective, eps=1e-5):
    out = []
    for P in params:
        G = np.zeros_like(P)
        for idx in np.ndindex(P.shape):
            old = P[idx]
            P[idx] = old + eps
            up = objective()
            P[idx] = old - eps
            down = objective()
            P[idx] = old
            G[idx] = (up - down) / (2 * eps)
        out.append(G)
    return out


def test_criterion_03_gradients():
    rng = np.random.default_rng(3)
    worst_mlp = worst_deep = 0.0
    for _ in range(20):
        dim, hidden, batch = int(rng.integers(1, 8)), int(rng.integers(2, 20)), int(rng.integers(1, 21))
        model = init_model(dim, hidden, rng)
        X, y = rng.normal(size=(batch, dim)), rng.integers(0, 2, batch)
        weights = None if rng.random() < 0.5 else tuple(rng.uniform(1, 11, 2))
        grads = gradient(model, X, y, weights)
        names = list(model.params())
        numeric = _finite_difference([model.params()[k] for k in names], lambda: loss(model, X, y, weights))
        worst_mlp = max(worst_mlp, *(_relative_error(grads[k], n) for k, n in zip(names, numeric)))

        widths = tuple(int(w) for w in rng.integers(2, 12, int(rng.integers(1, 5))))
        deep = init_deep(dim, widths, rng)
        for b in deep.biases:
            b[...] = rng.normal(scale=0.1, size=b.shape)
        dW, db = deep_gradient(deep, X, y)
        numeric = _finite_difference(deep.weights + deep.biases, lambda: deep_loss(deep, X, y))
        worst_deep = max(worst_deep, *(_relative_error(a, n) for a, n in zip(dW + db, numeric)))
    ok = worst_mlp < 1e-4 and worst_deep < 1e-4
    record(3, ok, f"20 configurations each, max relative error mlp={worst_mlp:.1e} deep={worst_deep:.1e}")
    assert ok


def test_criterion_04_planted_threshold_recovery():
    start = time.perf_counter()
    net = planted_threshold_network(theta=5, eta=0.05, seed=0)
    samples = build_samples(net.graph, predictors="influence_only", labels=net.labels)
    reports, models = connected_runs(samples, "influence_only", range(10), TrainConfig())
    curve = ensemble_curve(models)
    bacc, cross = mean_bacc(reports), crossing_point(curve)
    worst_drop = float(-np.min(np.diff(curve[:, 1])))
    elapsed = time.perf_counter() - start
    ok = bacc >= 0.90 and abs(cross - 5) <= 2 and worst_drop <= 0.02 and elapsed < 60
    record(4, ok, f"bAcc={bacc:.3f} crossing={cross:.2f} max drop={max(worst_drop, 0):.1e} runtime={elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_05_local_predictor_ordering():
    g = generate_network(SynthConfig())
    res = local_prediction(g, seeds=range(10), isolated_sets=())
    b = {name: mean_bacc(reports) for name, reports in res.connected.items()}
    gain = b["influence_only"] - b["traits_only"]
    extra = b["influence_and_traits"] - b["influence_only"]
    ok = gain >= 0.10 and extra <= 0.03 and b["prosociality_only"] > 0.52
    record(5, ok, "influence_only-traits_only={:.3f} influence_and_traits-influence_only={:.3f} "
                  "prosociality_only={:.3f}".format(gain, extra, b["prosociality_only"]))
    assert ok


def test_criterion_06_prosociality_surface():
    g = nucleate(SynthConfig())
    models = curve_models(g, "prosociality_only", range(10), BROAD_SCHEME, connected_only=False)
    mean, _ = ensemble_surface(models)
    p_enemy_00, p_friend_11 = 1 - mean[0, 0], mean[-1, -1]
    ok = abs(p_enemy_00 - 0.70) <= 0.07 and abs(p_friend_11 - 0.65) <= 0.07
    record(6, ok, f"P(enemy|0,0)={p_enemy_00:.3f} P(friend|1,1)={p_friend_11:.3f}")
    assert ok


def test_criterion_07_walk_locality():
    g = nx.connected_watts_strogatz_graph(200, 10, 0.1, seed=0)
    view = UndirectedView.from_pairs(range(200), g.edges())
    stats = {}
    for q in (4.0, 0.25):
        walks = biased_walks(view, WalkConfig(p=1, q=q, walks_per_node=50, seed=0))
        assert len(walks) == 10_000
        stats[q] = locality_summary(walk_locality(walks, view))
    near, far = stats[4.0], stats[0.25]
    ordered = near["mean"] + 3 * near["sem"] < far["mean"] - 3 * far["sem"]
    anchored = near["mean"] < 2
    record(7, ordered and anchored,
           f"q=4 mean={near['mean']:.3f}+-{near['sem']:.3f} q=0.25 mean={far['mean']:.3f}+-{far['sem']:.3f} "
           f"ordered={ordered} below 2 hops={anchored}")
    assert ordered
    assert anchored


def test_criterion_08_smote():
    rng = np.random.default_rng(8)
    worst, unbalanced = 0.0, 0
    for trial in range(50):
        m, k, dim = int(rng.integers(6, 40)), int(rng.integers(1, 6)), int(rng.integers(1, 6))
        X = rng.normal(size=(m, dim))
        new = smote(X, k, target_count=3 * m, seed=trial)
        nn = nearest_neighbours(X, k)
        for p in new:
            best = np.inf
            for i in range(m):
                for j in nn[i]:
                    d = X[j] - X[i]
                    u = float(np.clip(np.dot(p - X[i], d) / max(np.dot(d, d), 1e-300), 0, 1))
                    best = min(best, np.linalg.norm(X[i] + u * d - p))
            worst = max(worst, best)
        y = np.r_[np.zeros(3 * m, int), np.ones(m, int)]
        Xo, yo = oversample(np.vstack([rng.normal(size=(3 * m, dim)), X]), y, k, trial)
        unbalanced += (yo == 0).sum() != (yo == 1).sum()
    ok = worst < 1e-9 and unbalanced == 0
    record(8, ok, f"max segment residual={worst:.1e} unbalanced outputs={unbalanced}")
    assert ok


def _is_partition(parts, samples):
    ids = [id(s) for part in parts for s in part]
    return len(ids) == len(set(ids)) and set(ids) == {id(s) for s in samples}


def test_criterion_09_split_contracts():
    rng = np.random.default_rng(9)
    failures = 0
    for trial in range(1000):
        n = int(rng.integers(2, 300))
        courses = [(f"s{a}", c) for a in range(int(rng.integers(1, 4))) for c in (1, 2, 3)]
        picks = rng.integers(0, len(courses), n)
        samples = [RelationSample(k, k + 1, np.zeros(1), int(rng.integers(2)), *courses[picks[k]]) for k in range(n)]
        train, test = random_split(samples, float(rng.uniform(0.05, 0.95)), trial)
        failures += not _is_partition([train, test], samples)
        school, course = courses[picks[0]]
        train, test = holdout_course_split(samples, school, course)
        failures += not _is_partition([train, test], samples)
        failures += any((s.school_id, s.course) != (school, course) for s in test)
        k = int(rng.integers(2, min(n, 12) + 1))
        folds = kfold_split(samples, k, trial)
        failures += not _is_partition([t for _, t in folds], samples)
        failures += any(not _is_partition([tr, te], samples) for tr, te in folds)
        sizes = [len(t) for _, t in folds]
        failures += max(sizes) - min(sizes) > 1
    record(9, failures == 0, f"1000 randomized trials, failures={failures}")
    assert failures == 0


@pytest.mark.slow
def test_criterion_10_treatment_gap():
    g, _ = block_corpus(BlockConfig())
    table, _ = embed_graph(g, WalkConfig(walks_per_node=10, epochs=1, batch_size=1024, seed=0))
    samples = embedding_samples(g, table)
    seeds = list(range(20))
    depths: list[int] = []
    gaps = {}
    for name, fit in (("forest", forest_classifier(ForestConfig(n_trees=25), depths)),
                      ("deep", deep_classifier(DeepConfig(epochs=20)))):
        one, two = treatment_one(samples, fit, seeds), treatment_two(samples, fit, seeds)
        gaps[name] = (mean_bacc(one), mean_bacc(two))
    ok = all(a - b >= 0.05 for a, b in gaps.values()) and max(depths) <= 7
    record(10, ok, " ".join(f"{k}: I={a:.3f} II={b:.3f}" for k, (a, b) in gaps.items())
           + f" max tree depth={max(depths)}")
    assert ok


def _isolated_fixture(n=6000, seed=0):
    """Prosociality-only isolated relations with a 5% enemy minority."""
    rng = np.random.default_rng(seed)
    P = rng.choice(PROSOCIALITY_LEVELS, size=(n, 2))
    p_enemy = 1 / (1 + np.exp(-(-3.2 + 1.5 * (1 - P.sum(axis=1)))))
    y = (rng.random(n) >= p_enemy).astype(int)
    return [RelationSample(k, k + 1, P[k], int(y[k])) for k in range(n)]


def test_criterion_11_dynamical_loss():
    periodic = all(np.allclose(dynamical_weights(t), dynamical_weights(t + 5)) for t in range(50))
    bounded = all(1 <= w <= 11 for t in range(50) for w in dynamical_weights(t))
    antiphase = all(np.isclose(sum(dynamical_weights(t)), 12) for t in range(50))
    samples = _isolated_fixture()
    minority = 1 - np.mean([s.label for s in samples])
    recall = {}
    for dynamical in (False, True):
        def fit(train_set, seed, dynamical=dynamical):
            model = train(train_set, TrainConfig(steps=1000, dynamical=dynamical, seed=seed))
            return lambda test: predict(model, np.vstack([s.features for s in test]))
        reports = cross_validate(samples, 10, fit)
        recall[dynamical] = sum(r.n_enemy_correct for r in reports) / sum(r.n_enemy_total for r in reports)
    ok = periodic and bounded and antiphase and 0.04 <= minority <= 0.06 and recall[True] >= recall[False]
    record(11, ok, f"periodic={periodic} bounded={bounded} antiphase={antiphase} minority={minority:.3f} "
                   f"recall dynamical={recall[True]:.3f} plain={recall[False]:.3f}")
    assert ok


def test_criterion_12_cli_determinism(tmp_path):
    sim = tmp_path / "sim"
    runs = [["simulate", "--kind", "blocks", "--schools", "2", "--courses", "2", "--students", "20"]]
    graph = ["--nodes", str(sim / "nodes.csv"), "--edges", str(sim / "edges.csv")]
    walk = ["--walks-per-node", "4", "--walk-length", "6", "--dimension", "8", "--epochs", "1"]
    runs += [
        ["stats", *graph], ["influence", *graph],
        ["train-local", *graph, "--scheme", "broad", "--seeds", "2", "--steps", "20", "--folds", "2",
         "--isolated-steps", "20"],
        ["curves", *graph, "--scheme", "broad", "--seeds", "2", "--steps", "20"],
        ["embed", *graph, *walk],
        ["train-global", *graph, "--treatment", "II", "--model", "forest", "--trees", "3", *walk],
        ["train-global", *graph, "--treatment", "I", "--model", "deep", "--runs", "2", "--deep-epochs", "2", *walk],
    ]
    identical = []
    for k, argv in enumerate(runs):
        out = sim if k == 0 else tmp_path / f"run{k}"
        assert main([*argv, "--output-dir", str(out)]) == 0, argv[0]
        again = tmp_path / f"again{k}"
        rc = main(["rerun", str(out / MANIFEST), "--output-dir", str(again)])
        artifacts = json.loads((out / MANIFEST).read_text())["artifacts"]
        same = rc == 0 and all((out / a).read_bytes() == (again / a).read_bytes() for a in artifacts)
        identical.append(same)
    ok = all(identical)
    record(12, ok, f"{sum(identical)}/{len(identical)} subcommand runs reproduced byte-identically")
    assert ok
