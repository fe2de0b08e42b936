"""Signed, weighted, directed relationship networks.

Edges carry a weight in {-2, -1, +1, +2}; a missing edge means weight 0.
Every node may carry a :class:`StudentAttributes` record.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Hashable, Iterable, Iterator, Mapping

from .errors import EmptyInputError, ParseError, ValidationError

WEIGHTS = (-2, -1, 1, 2)
GENDERS = ("male", "female", "nonbinary")
GENDER_CODES = {"M": "male", "F": "female", "NB": "nonbinary"}
PROSOCIALITY_LEVELS = (0.0, 1 / 3, 2 / 3, 1.0)

NODE_COLUMNS = ("student_id", "school_id", "course", "class_group", "gender", "crt", "q1", "q2", "q3")
EDGE_COLUMNS = ("src", "dst", "weight")


def prosociality_score(q1: int, q2: int, q3: int) -> Fraction:
    """Prosociality index from the three selfishness answers (1 = selfish)."""
    for q in (q1, q2, q3):
        if q not in (0, 1):
            raise ValueError(f"answers must be 0 or 1, got {q!r}")
    return 1 - Fraction(q1 + q2 + q3, 3)


def prosociality_level(p: float) -> float:
    """Snap ``p`` to the canonical float of its level (0, 1/3, 2/3 or 1)."""
    return PROSOCIALITY_LEVELS[round(p * 3)]


@dataclass(frozen=True)
class StudentAttributes:
    student_id: Hashable
    school_id: Hashable
    course: int
    class_group: Hashable
    gender: str
    crt: int
    prosociality: float

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise ValidationError(f"student {self.student_id}: unknown gender {self.gender!r}")
        if self.crt not in (0, 1, 2, 3):
            raise ValidationError(f"student {self.student_id}: crt must be 0..3, got {self.crt!r}")
        if not any(abs(self.prosociality - lv) < 1e-9 for lv in PROSOCIALITY_LEVELS):
            raise ValidationError(
                f"student {self.student_id}: prosociality {self.prosociality!r} is not a level"
            )


class SignedDigraph:
    """Immutable signed digraph with out- and in-neighbour indexes.

    ``edges`` is either a mapping ``(src, dst) -> weight`` or an iterable of
    ``(src, dst, weight)`` triples.  Nodes are the union of ``nodes``, the
    keys of ``attributes`` and (only when neither is given) edge endpoints.
    """

    def __init__(
        self,
        edges: Mapping[tuple[Hashable, Hashable], int] | Iterable[tuple[Hashable, Hashable, int]] = (),
        attributes: Mapping[Hashable, StudentAttributes] | None = None,
        nodes: Iterable[Hashable] | None = None,
    ):
        self._attrs: dict[Hashable, StudentAttributes] = dict(attributes or {})
        order: dict[Hashable, None] = {}
        if nodes is not None:
            order.update((n, None) for n in nodes)
        order.update((n, None) for n in self._attrs)
        explicit = nodes is not None or attributes is not None
        triples = edges.items() if isinstance(edges, Mapping) else edges

        out: dict[Hashable, dict[Hashable, int]] = {}
        inn: dict[Hashable, dict[Hashable, int]] = {}
        n_edges = 0
        for item in triples:
            if isinstance(edges, Mapping):
                (i, j), w = item
            else:
                i, j, w = item
            if w not in WEIGHTS:
                raise ValidationError(f"edge ({i}, {j}): weight {w!r} not in {WEIGHTS}")
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            for end in (i, j):
                if end not in order:
                    if explicit:
                        raise ValidationError(f"edge ({i}, {j}) references unknown node {end}")
                    order[end] = None
            row = out.setdefault(i, {})
            if j in row:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            row[j] = int(w)
            inn.setdefault(j, {})[i] = int(w)
            n_edges += 1

        self._nodes = tuple(order)
        self._index = {n: k for k, n in enumerate(self._nodes)}
        self._out = {n: out.get(n, {}) for n in self._nodes}
        self._in = {n: inn.get(n, {}) for n in self._nodes}
        self._n_edges = n_edges

    def __repr__(self) -> str:
        return f"SignedDigraph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"

    def __contains__(self, node: Hashable) -> bool:
        return node in self._index

    @property
    def nodes(self) -> tuple[Hashable, ...]:
        return self._nodes

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    @property
    def n_edges(self) -> int:
        return self._n_edges

    def index(self, node: Hashable) -> int:
        return self._index[node]

    def attributes(self, node: Hashable) -> StudentAttributes:
        try:
            return self._attrs[node]
        except KeyError:
            if node not in self._index:
                raise
            raise KeyError(f"node {node!r} has no attributes") from None

    def has_attributes(self) -> bool:
        return len(self._attrs) == len(self._nodes)

    def out_edges(self, node: Hashable) -> Mapping[Hashable, int]:
        return self._out[node]

    def in_edges(self, node: Hashable) -> Mapping[Hashable, int]:
        return self._in[node]

    def weight(self, i: Hashable, j: Hashable) -> int:
        return self._out[i].get(j, 0)

    def has_edge(self, i: Hashable, j: Hashable) -> bool:
        return j in self._out.get(i, ())

    def edges(self) -> Iterator[tuple[Hashable, Hashable, int]]:
        for i in self._nodes:
            for j, w in self._out[i].items():
                yield i, j, w

    def subgraph(self, nodes: Iterable[Hashable]) -> "SignedDigraph":
        wanted = set(nodes)
        keep = [n for n in self._nodes if n in wanted]
        kept = set(keep)
        edges = [(i, j, w) for i, j, w in self.edges() if i in kept and j in kept]
        attrs = {n: self._attrs[n] for n in keep if n in self._attrs}
        return SignedDigraph(edges, attributes=attrs or None, nodes=keep)


def _check_pair(g: SignedDigraph, i: Hashable, j: Hashable) -> None:
    for node in (i, j):
        if node not in g:
            raise KeyError(f"unknown node {node!r}")
    if i == j:
        raise ValueError("i and j must differ")


def triadic_influence(g: SignedDigraph, i: Hashable, j: Hashable) -> int:
    """Sum of ``w_ik * w_kj`` over the directed two-paths ``i -> k -> j``."""
    _check_pair(g, i, j)
    out_i, in_j = g.out_edges(i), g.in_edges(j)
    if len(out_i) > len(in_j):
        return sum(w * out_i[k] for k, w in in_j.items() if k in out_i)
    return sum(w * in_j[k] for k, w in out_i.items() if k in in_j)


def two_path_count(g: SignedDigraph, i: Hashable, j: Hashable) -> int:
    _check_pair(g, i, j)
    out_i, in_j = g.out_edges(i), g.in_edges(j)
    small, large = (out_i, in_j) if len(out_i) <= len(in_j) else (in_j, out_i)
    return sum(1 for k in small if k in large)


def two_path_stats(g: SignedDigraph) -> tuple[dict, dict]:
    """Influence and two-path count for every declared edge.

    Walks each intermediate node ``k`` once, pairing its in-neighbours with its
    out-neighbours, so the cost is ``sum_k indeg(k) * outdeg(k)``.
    """
    influence = {(i, j): 0 for i, j, _ in g.edges()}
    paths = dict.fromkeys(influence, 0)
    for k in g.nodes:
        outs = g.out_edges(k)
        if not outs:
            continue
        for i, w_ik in g.in_edges(k).items():
            declared = g.out_edges(i)
            for j, w_kj in outs.items():
                if j in declared:
                    influence[i, j] += w_ik * w_kj
                    paths[i, j] += 1
    return influence, paths


def influence_matrix(g: SignedDigraph) -> dict[tuple[Hashable, Hashable], int]:
    return two_path_stats(g)[0]


def two_path_matrix(g: SignedDigraph) -> dict[tuple[Hashable, Hashable], int]:
    return two_path_stats(g)[1]


# -- descriptive statistics ------------------------------------------------

def _fractions(counts: Counter) -> dict:
    total = sum(counts.values())
    return {k: counts[k] / total for k in sorted(counts)}


def relation_type_distribution(g: SignedDigraph) -> dict[int, float]:
    if g.n_edges == 0:
        raise EmptyInputError("graph has no edges")
    return _fractions(Counter(w for _, _, w in g.edges()))


def two_path_histogram(g: SignedDigraph) -> dict[int, float]:
    if g.n_edges == 0:
        raise EmptyInputError("graph has no edges")
    return _fractions(Counter(two_path_matrix(g).values()))


def prosociality_distribution(g: SignedDigraph) -> dict[float, float]:
    if g.n_nodes == 0:
        raise EmptyInputError("graph has no nodes")
    return _fractions(Counter(prosociality_level(g.attributes(n).prosociality) for n in g.nodes))


def mean_nominations_by_prosociality(
    g: SignedDigraph, sign: str = "friend", direction: str = "out"
) -> dict[float, tuple[float, float]]:
    """Mean (and standard error) of friend/enemy nominations per prosociality level.

    ``sign`` is ``"friend"`` (weights +1, +2) or ``"enemy"`` (-1, -2);
    ``direction`` is ``"out"`` (nominations made) or ``"in"`` (received).
    """
    if sign not in ("friend", "enemy"):
        raise ValueError(f"sign must be 'friend' or 'enemy', got {sign!r}")
    if direction not in ("out", "in"):
        raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
    if g.n_nodes == 0:
        raise EmptyInputError("graph has no nodes")
    want = 1 if sign == "friend" else -1
    neighbours = g.out_edges if direction == "out" else g.in_edges
    by_level: dict[float, list[int]] = {}
    for n in g.nodes:
        level = prosociality_level(g.attributes(n).prosociality)
        count = sum(1 for w in neighbours(n).values() if (w > 0) == (want > 0))
        by_level.setdefault(level, []).append(count)
    result = {}
    for level in sorted(by_level):
        xs = by_level[level]
        mean = sum(xs) / len(xs)
        if len(xs) > 1:
            var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
            sem = math.sqrt(var / len(xs))
        else:
            sem = math.nan
        result[level] = (mean, sem)
    return result


# -- loading -----------------------------------------------------------------

@dataclass
class LoadReport:
    dropped_nodes: list = field(default_factory=list)
    dropped_edges: int = 0


def _parse_int(value: Any, row: int, column: str) -> int:
    try:
        return int(str(value).strip())
    except ValueError:
        raise ParseError(row, f"column {column!r}: expected an integer, got {value!r}") from None


def _missing(value: Any) -> bool:
    return value is None or str(value).strip() == ""


def _get(record: Any, column: str, row: int) -> Any:
    try:
        return record[column]
    except (KeyError, TypeError):
        raise ParseError(row, f"missing column {column!r}") from None


def load_network_report(
    node_records: Iterable[Mapping[str, Any]],
    edge_records: Iterable[Mapping[str, Any]],
    first_row: int = 1,
) -> tuple[SignedDigraph, LoadReport]:
    """Build a graph from node and edge records and report what was dropped.

    Records are mappings keyed by the CSV column names.  Nodes with any empty
    attribute are dropped together with every edge touching them.  Row
    numbers in errors count from ``first_row``.
    """
    report = LoadReport()
    attrs: dict[str, StudentAttributes] = {}
    seen: set[str] = set()
    for row, rec in enumerate(node_records, start=first_row):
        sid = _get(rec, "student_id", row)
        if _missing(sid):
            raise ParseError(row, "empty student_id")
        sid = str(sid).strip()
        if sid in seen:
            raise ValidationError(f"row {row}: duplicate student_id {sid!r}")
        seen.add(sid)
        values = {c: _get(rec, c, row) for c in NODE_COLUMNS}
        if any(_missing(v) for v in values.values()):
            report.dropped_nodes.append(sid)
            continue
        gender = str(values["gender"]).strip()
        if gender not in GENDER_CODES:
            raise ParseError(row, f"gender must be one of {sorted(GENDER_CODES)}, got {gender!r}")
        qs = [_parse_int(values[c], row, c) for c in ("q1", "q2", "q3")]
        if any(q not in (0, 1) for q in qs):
            raise ValidationError(f"row {row}: answers q1..q3 must be 0 or 1, got {qs}")
        try:
            attrs[sid] = StudentAttributes(
                student_id=sid,
                school_id=str(values["school_id"]).strip(),
                course=_parse_int(values["course"], row, "course"),
                class_group=str(values["class_group"]).strip(),
                gender=GENDER_CODES[gender],
                crt=_parse_int(values["crt"], row, "crt"),
                prosociality=float(prosociality_score(*qs)),
            )
        except ValidationError as exc:
            raise ValidationError(f"row {row}: {exc}") from None

    dropped = set(report.dropped_nodes)
    edges = []
    pairs: set[tuple[str, str]] = set()
    for row, rec in enumerate(edge_records, start=first_row):
        src, dst, w = (_get(rec, c, row) for c in EDGE_COLUMNS)
        if _missing(src) or _missing(dst) or _missing(w):
            raise ParseError(row, "empty field in edge record")
        src, dst = str(src).strip(), str(dst).strip()
        weight = _parse_int(w, row, "weight")
        if weight not in WEIGHTS:
            raise ValidationError(f"row {row}: weight {weight} not in {WEIGHTS}")
        if (src, dst) in pairs:
            raise ValidationError(f"row {row}: duplicate edge ({src}, {dst})")
        pairs.add((src, dst))
        if src == dst:
            raise ValidationError(f"row {row}: self-loop on {src}")
        if src in dropped or dst in dropped:
            report.dropped_edges += 1
            continue
        for end in (src, dst):
            if end not in attrs:
                raise ValidationError(f"row {row}: unknown node {end!r}")
        edges.append((src, dst, weight))
    return SignedDigraph(edges, attributes=attrs), report


def load_network(
    node_records: Iterable[Mapping[str, Any]], edge_records: Iterable[Mapping[str, Any]]
) -> SignedDigraph:
    return load_network_report(node_records, edge_records)[0]
