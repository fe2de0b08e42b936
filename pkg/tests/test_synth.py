import math

import numpy as np
import pytest

from triadic.dataset import ENEMY, FRIEND
from triadic.evaluation import balanced_accuracy
from triadic.graph import (
    mean_nominations_by_prosociality, relation_type_distribution, two_path_histogram,
)
from triadic.synth import (
    BlockConfig, NetworkBuilder, SynthConfig, block_corpus, evolve_step, generate_network,
    growth_friend_probability, nucleate, nucleation_friend_probability, planted_threshold_network,
    sample_students,
)


def _course(node, g):
    a = g.attributes(node)
    return a.school_id, a.course


def _friend_share(g):
    weights = np.array([w for _, _, w in g.edges()])
    return (weights > 0).mean(), len(weights)


def test_nucleation_logistic_anchors():
    config = SynthConfig()
    assert math.isclose(nucleation_friend_probability(0, 0, config), 0.30)
    assert math.isclose(nucleation_friend_probability(1, 1, config), 0.65)


@pytest.mark.parametrize("level, anchor", [(0.0, 0.30), (1.0, 0.65)])
def test_nucleated_friend_share_matches_anchor(level, anchor):
    probs = (1.0, 0, 0, 0) if level == 0 else (0, 0, 0, 1.0)
    g = nucleate(SynthConfig(n_schools=20, prosociality_probs=probs, seed=1))
    share, n = _friend_share(g)
    assert n >= 10_000
    assert abs(share - anchor) < 0.05


def test_nucleation_limit_all_enemies():
    g = nucleate(SynthConfig(n_schools=1, alpha=0.0, beta=-1e6))
    assert g.n_edges > 0 and _friend_share(g)[0] == 0


def test_growth_logistic_midpoint_and_tail():
    config = SynthConfig(mu=5.0)
    assert growth_friend_probability(5.0, config) == 0.5
    assert growth_friend_probability(200.0, config) > 1 - 1e-12


def test_edges_stay_inside_courses():
    for g in (nucleate(SynthConfig(n_schools=2)), generate_network(SynthConfig(n_schools=2))):
        assert all(_course(i, g) == _course(j, g) for i, j, _ in g.edges())


def test_generation_deterministic():
    config = SynthConfig(n_schools=2, students_per_course=20, target_out_degree=6, seed=7)
    assert list(generate_network(config).edges()) == list(generate_network(config).edges())


def test_mean_out_degree_reaches_target():
    g = generate_network(SynthConfig(n_schools=2, seed=2))
    assert abs(g.n_edges / g.n_nodes - 18) < 0.5


def test_evolve_step_adds_one_intra_course_edge():
    config = SynthConfig(n_schools=1, courses_per_school=1, students_per_course=10)
    rng = np.random.default_rng(0)
    builder = NetworkBuilder(sample_students(config, 0, rng))
    members = list(builder.attributes)
    evolve_step(builder, config, rng, members)
    assert builder.n_edges == 1


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(noise=1.5)
    with pytest.raises(ValueError):
        SynthConfig(target_out_degree=0)
    with pytest.raises(ValueError):
        SynthConfig(mu=math.inf)


@pytest.fixture(scope="module")
def calibrated():
    return generate_network(SynthConfig(n_schools=20, seed=0))


def test_isolated_fraction(calibrated):
    assert 0.01 <= two_path_histogram(calibrated)[0] <= 0.05


def test_relation_type_ordering(calibrated):
    d = relation_type_distribution(calibrated)
    assert d[1] > d[2] > d[-1] > d[-2]


def test_nomination_trends(calibrated):
    friends = [v[0] for _, v in sorted(mean_nominations_by_prosociality(calibrated, "friend", "out").items())]
    enemies = [v[0] for _, v in sorted(mean_nominations_by_prosociality(calibrated, "enemy", "out").items())]
    assert all(a < b for a, b in zip(friends, friends[1:]))
    assert all(a > b for a, b in zip(enemies, enemies[1:]))


def test_planted_noise_free_threshold_is_perfect():
    net = planted_threshold_network(theta=5, eta=0.0, seed=3)
    keys = list(net.labels)
    rule = [FRIEND if net.influence[e] > 5 else ENEMY for e in keys]
    assert balanced_accuracy(rule, [net.labels[e] for e in keys]) == 1.0
    assert net.labels == net.clean_labels


def test_planted_flip_noise_bound():
    # flip noise caps accuracy of the clean rule at 1 - eta; per-class recall
    # depends on the clean class prior pi: (1 - eta) pi / ((1 - eta) pi + eta (1 - pi))
    eta, acc, gap = 0.05, [], []
    for seed in range(5):
        net = planted_threshold_network(n=150, theta=5, eta=eta, seed=seed)
        clean = np.array(list(net.clean_labels.values()))
        noisy = np.array([net.labels[e] for e in net.clean_labels])
        acc.append((clean == noisy).mean())
        pi = clean.mean()
        r_f = (1 - eta) * pi / ((1 - eta) * pi + eta * (1 - pi))
        r_e = (1 - eta) * (1 - pi) / ((1 - eta) * (1 - pi) + eta * pi)
        gap.append(balanced_accuracy(clean, noisy) - 0.5 * (r_f + r_e))
    assert abs(np.mean(acc) - 0.95) < 0.005
    assert abs(np.mean(gap)) < 0.01


def test_planted_argument_checks():
    with pytest.raises(ValueError):
        planted_threshold_network(n=5)
    with pytest.raises(ValueError):
        planted_threshold_network(eta=0.5)


def test_block_corpus_structure():
    g, blocks = block_corpus(BlockConfig(n_schools=2, students_per_course=30, seed=1))
    assert g.n_nodes == 60 and set(blocks.values()) == {0, 1, 2}
    inside = sum(blocks[i] == blocks[j] for i, j, _ in g.edges())
    assert inside > 0.6 * g.n_edges
    assert all(_course(i, g) == _course(j, g) for i, j, _ in g.edges())
