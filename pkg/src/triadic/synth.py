"""Synthetic school networks and validation fixtures.

The calibrated generator grows each course in two phases.  Nucleation adds a
sparse set of relations whose sign depends only on the prosociality of both
students.  Growth then repeatedly picks an ordered pair inside a course and
signs it from the triadic influence currently between them, until the target
mean out-degree is reached.  A growth pair with no directed two-path yet is
signed by the trait rule instead, so isolated relations keep appearing.

The influence midpoint ``mu`` applies to the influence at creation time, which
is smaller than the final influence of the same edge.  The default of -3 yields
friend-majority courses whose learned crossing, measured on the finished
network, sits near +3 to +4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np
from scipy.special import expit

from .dataset import ENEMY, FRIEND
from .graph import GENDERS, PROSOCIALITY_LEVELS, SignedDigraph, StudentAttributes, influence_matrix

# nucleation logistic fitted to P(friend | 0, 0) = 0.30 and P(friend | 1, 1) = 0.65
BETA = math.log(0.30 / 0.70)
ALPHA = (math.log(0.65 / 0.35) - BETA) / 2


def logistic(x):
    return expit(np.asarray(x, dtype=float))


@dataclass
class SynthConfig:
    n_schools: int = 13
    courses_per_school: int = 3
    students_per_course: int = 87
    target_out_degree: float = 18.0
    prosociality_probs: tuple[float, ...] = (0.10, 0.20, 0.40, 0.30)
    gender_probs: tuple[float, ...] = (0.50, 0.495, 0.005)
    crt_probs: tuple[float, ...] = (0.35, 0.30, 0.20, 0.15)
    nucleation_fraction: float = 0.15
    alpha: float = ALPHA
    beta: float = BETA
    mu: float = -3.0
    scale: float = 2.0
    closure_prob: float = 0.7
    activity_shape: float = 0.0
    plus_one_share: float = 0.55
    minus_one_share: float = 0.60
    noise: float = 0.0
    resign: bool = False
    isolated_trait_rule: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("prosociality_probs", "gender_probs", "crt_probs"):
            probs = getattr(self, name)
            if any(p < 0 for p in probs) or abs(sum(probs) - 1) > 1e-9:
                raise ValueError(f"{name} must be a probability vector")
        for name in ("nucleation_fraction", "closure_prob", "plus_one_share", "minus_one_share", "noise"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.target_out_degree <= 0:
            raise ValueError("target_out_degree must be positive")
        if not (math.isfinite(self.mu) and math.isfinite(self.scale)) or self.scale <= 0:
            raise ValueError("mu must be finite and scale positive")
        if self.activity_shape < 0:
            raise ValueError("activity_shape must be non-negative (0 disables heterogeneity)")
        if self.students_per_course < 2:
            raise ValueError("a course needs at least two students")


def nucleation_friend_probability(p_i, p_j, config: SynthConfig):
    return logistic(config.alpha * (np.asarray(p_i) + np.asarray(p_j)) + config.beta)


def growth_friend_probability(influence, config: SynthConfig):
    return logistic((np.asarray(influence, dtype=float) - config.mu) / config.scale)


class NetworkBuilder:
    """Mutable signed digraph used while a network is being generated."""

    def __init__(self, attributes: dict[Hashable, StudentAttributes], activity: dict | None = None):
        self.attributes = dict(attributes)
        self.activity = activity or {n: 1.0 for n in attributes}
        self.out: dict[Hashable, dict[Hashable, int]] = {n: {} for n in attributes}
        self.inn: dict[Hashable, dict[Hashable, int]] = {n: {} for n in attributes}
        self.courses: dict[tuple, list] = {}
        for n, a in attributes.items():
            self.courses.setdefault((a.school_id, a.course), []).append(n)
        self._cdf = {}
        self.n_edges = 0

    def pick_nominator(self, members: list, rng: np.random.Generator) -> Hashable:
        """Course member drawn proportionally to nomination activity."""
        key = id(members)
        if key not in self._cdf:
            w = np.cumsum([self.activity[m] for m in members])
            self._cdf[key] = w / w[-1]
        return members[min(int(np.searchsorted(self._cdf[key], rng.random(), side="right")), len(members) - 1)]

    def set_edge(self, i: Hashable, j: Hashable, w: int) -> None:
        if j not in self.out[i]:
            self.n_edges += 1
        self.out[i][j] = w
        self.inn[j][i] = w

    def influence(self, i: Hashable, j: Hashable) -> tuple[int, int]:
        """Current ``(I_ij, number of directed two-paths i -> k -> j)``."""
        out_i, in_j = self.out[i], self.inn[j]
        if len(out_i) > len(in_j):
            out_i, in_j = in_j, out_i
        total = count = 0
        for k, w in out_i.items():
            if k in in_j:
                total += w * in_j[k]
                count += 1
        return total, count

    def freeze(self) -> SignedDigraph:
        edges = [(i, j, w) for i in self.out for j, w in self.out[i].items()]
        return SignedDigraph(edges, attributes=self.attributes)


def _signed_weight(friend: bool, config: SynthConfig, rng: np.random.Generator) -> int:
    if config.noise and rng.random() < config.noise:
        friend = not friend
    if friend:
        return 1 if rng.random() < config.plus_one_share else 2
    return -1 if rng.random() < config.minus_one_share else -2


def sample_students(config: SynthConfig, school: int, rng: np.random.Generator) -> dict[str, StudentAttributes]:
    students = {}
    for course in range(1, config.courses_per_school + 1):
        for k in range(config.students_per_course):
            sid = f"s{school}c{course}n{k}"
            students[sid] = StudentAttributes(
                student_id=sid,
                school_id=f"school{school}",
                course=course,
                class_group="AB"[k % 2],
                gender=GENDERS[rng.choice(3, p=config.gender_probs)],
                crt=int(rng.choice(4, p=config.crt_probs)),
                prosociality=PROSOCIALITY_LEVELS[rng.choice(4, p=config.prosociality_probs)],
            )
    return students


def _random_pair(members: list, builder: NetworkBuilder, rng: np.random.Generator, allow_existing: bool):
    while True:
        i = builder.pick_nominator(members, rng)
        j = members[rng.integers(len(members))]
        if j != i and (allow_existing or j not in builder.out[i]):
            return i, j


def sample_activity(students, config: SynthConfig, rng: np.random.Generator) -> dict:
    if config.activity_shape == 0:
        return {n: 1.0 for n in students}
    k = config.activity_shape
    return {n: float(x) for n, x in zip(students, rng.gamma(k, 1 / k, len(students)))}


def nucleate_into(builder: NetworkBuilder, config: SynthConfig, rng: np.random.Generator) -> None:
    """Add the trait-driven initial relations to every course of ``builder``."""
    for members in builder.courses.values():
        n_edges = int(round(config.nucleation_fraction * config.target_out_degree * len(members)))
        n_edges = min(n_edges, len(members) * (len(members) - 1))
        for _ in range(n_edges):
            i, j = _random_pair(members, builder, rng, allow_existing=False)
            p = nucleation_friend_probability(
                builder.attributes[i].prosociality, builder.attributes[j].prosociality, config)
            builder.set_edge(i, j, _signed_weight(rng.random() < p, config, rng))


def nucleate(config: SynthConfig | None = None) -> SignedDigraph:
    """Students plus nucleation relations only, for every school."""
    config = config or SynthConfig()
    attrs: dict = {}
    builders = []
    for school, child in enumerate(np.random.SeedSequence(config.seed).spawn(config.n_schools)):
        rng = np.random.default_rng(child)
        students = sample_students(config, school, rng)
        b = NetworkBuilder(students, sample_activity(students, config, rng))
        nucleate_into(b, config, rng)
        builders.append(b)
        attrs.update(b.attributes)
    edges = [(i, j, w) for b in builders for i in b.out for j, w in b.out[i].items()]
    return SignedDigraph(edges, attributes=attrs)


def _growth_pair(members: list, builder: NetworkBuilder, config: SynthConfig, rng: np.random.Generator):
    if rng.random() < config.closure_prob:
        # friend-of-a-friend proposal along a positive directed two-path
        for _ in range(8):
            i = builder.pick_nominator(members, rng)
            ks = [k for k, w in builder.out[i].items() if w > 0]
            if not ks:
                continue
            k = ks[rng.integers(len(ks))]
            js = [j for j, w in builder.out[k].items()
                  if w > 0 and j != i and (config.resign or j not in builder.out[i])]
            if js:
                return i, js[rng.integers(len(js))]
    return _random_pair(members, builder, rng, allow_existing=config.resign)


def evolve_step(builder: NetworkBuilder, config: SynthConfig, rng: np.random.Generator,
                members: list | None = None) -> tuple[Hashable, Hashable, int]:
    """Add (or, with ``config.resign``, re-sign) one relation inside a course.

    The sign is friend with probability ``logistic((I - mu) / scale)`` where
    ``I`` is the triadic influence on the current network.  Pairs without a
    directed two-path use the nucleation rule when ``isolated_trait_rule`` is set.
    """
    if members is None:
        keys = list(builder.courses)
        members = builder.courses[keys[rng.integers(len(keys))]]
    i, j = _growth_pair(members, builder, config, rng)
    influence, paths = builder.influence(i, j)
    if paths == 0 and config.isolated_trait_rule:
        p = nucleation_friend_probability(
            builder.attributes[i].prosociality, builder.attributes[j].prosociality, config)
    else:
        p = growth_friend_probability(influence, config)
    w = _signed_weight(rng.random() < p, config, rng)
    builder.set_edge(i, j, w)
    return i, j, w


def grow_school(config: SynthConfig, school: int, rng: np.random.Generator) -> NetworkBuilder:
    students = sample_students(config, school, rng)
    builder = NetworkBuilder(students, sample_activity(students, config, rng))
    nucleate_into(builder, config, rng)
    for members in builder.courses.values():
        target = int(round(config.target_out_degree * len(members)))
        target = min(target, len(members) * (len(members) - 1))
        before = builder.n_edges
        count = sum(len(builder.out[m]) for m in members)
        for _ in range(50 * target):
            if count >= target:
                break
            evolve_step(builder, config, rng, members)
            count += builder.n_edges - before
            before = builder.n_edges
    return builder


def generate_network(config: SynthConfig | None = None) -> SignedDigraph:
    """Full calibrated corpus: nucleation then triadic growth in every course."""
    config = config or SynthConfig()
    attrs: dict = {}
    edges = []
    for school, child in enumerate(np.random.SeedSequence(config.seed).spawn(config.n_schools)):
        b = grow_school(config, school, np.random.default_rng(child))
        attrs.update(b.attributes)
        edges += [(i, j, w) for i in b.out for j, w in b.out[i].items()]
    return SignedDigraph(edges, attributes=attrs)


# -- validation fixtures ---------------------------------------------------------

@dataclass
class PlantedNetwork:
    graph: SignedDigraph
    labels: dict = field(repr=False)
    clean_labels: dict = field(repr=False)
    influence: dict = field(repr=False)


def planted_threshold_network(n: int = 60, theta: float = 5.0, eta: float = 0.05, seed: int = 0,
                              density: float = 0.3,
                              weight_probs: tuple[float, ...] = (0.08, 0.12, 0.40, 0.40)) -> PlantedNetwork:
    """Random signed digraph whose edge labels are a noisy threshold of influence.

    ``clean_labels[e]`` is friend iff the influence on ``e`` exceeds ``theta``;
    ``labels`` flips each clean label independently with probability ``eta``.
    Edge weights (drawn from ``weight_probs`` over -2, -1, +1, +2) only serve to
    define the influence.
    """
    if n < 10:
        raise ValueError("n must be at least 10")
    if not 0 <= eta < 0.5:
        raise ValueError("eta must lie in [0, 0.5)")
    rng = np.random.default_rng(seed)
    cfg = SynthConfig(n_schools=1, courses_per_school=1, students_per_course=n)
    attrs = sample_students(cfg, 0, rng)
    ids = list(attrs)
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    weights = np.array([-2, -1, 1, 2])[rng.choice(4, size=(n, n), p=weight_probs)]
    edges = [(ids[a], ids[b], int(weights[a, b])) for a, b in zip(*np.nonzero(mask))]
    g = SignedDigraph(edges, attributes=attrs)
    infl = influence_matrix(g)
    clean = {e: FRIEND if v > theta else ENEMY for e, v in infl.items()}
    flips = rng.random(len(clean)) < eta
    noisy = {e: (1 - lab if f else lab) for (e, lab), f in zip(clean.items(), flips)}
    return PlantedNetwork(g, noisy, clean, infl)


@dataclass
class BlockConfig:
    n_schools: int = 6
    courses_per_school: int = 1
    students_per_course: int = 40
    n_blocks: int = 3
    p_in: float = 0.45
    p_out: float = 0.05
    sign_purity: float = 0.9
    seed: int = 0


def block_corpus(config: BlockConfig | None = None) -> tuple[SignedDigraph, dict]:
    """Courses with planted blocks and a course-specific disliked block.

    Relations are dense inside blocks and sparse across them.  In every course
    one block, chosen at random, is disliked: relations pointing into it are
    enemies with probability ``sign_purity``, all others are friends with that
    probability.  Which block is disliked cannot be inferred from structure, so
    the sign pattern only transfers between relations of the same course.
    Returns the graph and a ``node -> block`` map.
    """
    config = config or BlockConfig()
    rng = np.random.default_rng(config.seed)
    cfg = SynthConfig(n_schools=1, courses_per_school=config.courses_per_school,
                      students_per_course=config.students_per_course)
    attrs: dict = {}
    blocks: dict = {}
    edges = []
    for school in range(config.n_schools):
        students = sample_students(cfg, school, rng)
        attrs.update(students)
        by_course: dict[int, list] = {}
        for sid, a in students.items():
            by_course.setdefault(a.course, []).append(sid)
        for members in by_course.values():
            block = {m: k % config.n_blocks for k, m in enumerate(rng.permutation(members).tolist())}
            blocks.update(block)
            disliked = int(rng.integers(config.n_blocks))
            for i in members:
                for j in members:
                    if i == j:
                        continue
                    p = config.p_in if block[i] == block[j] else config.p_out
                    if rng.random() >= p:
                        continue
                    friend = (block[j] != disliked) == (rng.random() < config.sign_purity)
                    w = (1 if rng.random() < 0.55 else 2) if friend else (-1 if rng.random() < 0.6 else -2)
                    edges.append((i, j, w))
    return SignedDigraph(edges, attributes=attrs), blocks
