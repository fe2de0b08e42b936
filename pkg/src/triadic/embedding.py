"""Structural node embeddings from second-order biased random walks.

The walks run on the undirected, unweighted view of a signed digraph.  A
walker that arrived at ``cur`` from ``prev`` moves to neighbour ``x`` with
unnormalised weight ``1/p`` if ``x == prev``, ``1`` if ``x`` is also a
neighbour of ``prev`` and ``1/q`` otherwise.  Walk sequences are embedded with
skip-gram and negative sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .graph import SignedDigraph
from .io import read_rows, write_rows

MERGES = ("hadamard", "average", "abs_diff", "squared_diff", "concat")


@dataclass
class WalkConfig:
    p: float = 1.0
    q: float = 4.0
    walks_per_node: int = 420
    walk_length: int = 30
    dimension: int = 128
    window: int = 10
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        for name in ("walks_per_node", "walk_length", "dimension", "window", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.negatives < 0:
            raise ValueError("negatives must be non-negative")


@dataclass(frozen=True, eq=False)
class UndirectedView:
    """CSR adjacency of the symmetrised graph, with sorted neighbour lists."""

    nodes: tuple
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_graph(cls, g: SignedDigraph) -> "UndirectedView":
        pairs = {(g.index(i), g.index(j)) for i, j, _ in g.edges()}
        return cls.from_pairs(g.nodes, pairs)

    @classmethod
    def from_pairs(cls, nodes: Sequence[Hashable], pairs) -> "UndirectedView":
        n = len(nodes)
        sym = {(a, b) for a, b in pairs if a != b} | {(b, a) for a, b in pairs if a != b}
        arr = np.array(sorted(sym), dtype=np.int64).reshape(-1, 2)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, arr[:, 0] + 1, 1)
        return cls(tuple(nodes), np.cumsum(indptr), arr[:, 1].copy())

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbours(self, k: int) -> np.ndarray:
        return self.indices[self.indptr[k]:self.indptr[k + 1]]

    @cached_property
    def _edge_keys(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.n_nodes, dtype=np.int64), self.degree)
        return rows * self.n_nodes + self.indices

    def has_edges(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorised adjacency test for index pairs ``(a[k], b[k])``."""
        keys = self._edge_keys
        probe = np.asarray(a, dtype=np.int64) * self.n_nodes + np.asarray(b, dtype=np.int64)
        if len(keys) == 0:
            return np.zeros(probe.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(keys, probe), len(keys) - 1)
        return keys[pos] == probe

    def csr(self) -> csr_matrix:
        data = np.ones(len(self.indices))
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n_nodes, self.n_nodes))


def _view(g) -> UndirectedView:
    return g if isinstance(g, UndirectedView) else UndirectedView.from_graph(g)


def transition_probabilities(view: UndirectedView, prev: int | None, cur: int, p: float, q: float) -> dict[int, float]:
    """Exact next-step distribution for a walker at ``cur`` that came from ``prev``."""
    nbrs = view.neighbours(cur)
    if len(nbrs) == 0:
        return {cur: 1.0}
    if prev is None:
        return {int(x): 1 / len(nbrs) for x in nbrs}
    prev_nbrs = set(view.neighbours(prev).tolist())
    raw = {int(x): 1 / p if x == prev else (1.0 if x in prev_nbrs else 1 / q) for x in nbrs}
    total = sum(raw.values())
    return {x: w / total for x, w in raw.items()}


def biased_walks(g, config: WalkConfig | None = None, chunk: int = 200_000) -> np.ndarray:
    """Second-order random walks as an ``(n_walks, walk_length + 1)`` index array.

    Row ``r * n + k`` is the ``r``-th walk from node ``k`` (indices into
    ``view.nodes``).  Each of the ``walk_length`` moves is one transition draw;
    a walker on a node without neighbours stays put.  Moves are sampled exactly
    by rejection against the largest of ``1/p, 1, 1/q``.
    """
    config = config or WalkConfig()
    view = _view(g)
    n, L = view.n_nodes, config.walk_length
    rng = np.random.default_rng(config.seed)
    starts = np.tile(np.arange(n, dtype=np.int64), config.walks_per_node)
    walks = np.empty((len(starts), L + 1), dtype=np.int64)
    deg = view.degree
    inv_p, inv_q = 1 / config.p, 1 / config.q
    ceiling = max(inv_p, 1.0, inv_q)
    for lo in range(0, len(starts), chunk):
        W = walks[lo:lo + chunk]
        W[:, 0] = starts[lo:lo + chunk]
        for t in range(L):
            cur = W[:, t]
            nxt = cur.copy()
            moving = np.flatnonzero(deg[cur] > 0)
            if t == 0:
                c = cur[moving]
                pick = view.indptr[c] + (rng.random(len(moving)) * deg[c]).astype(np.int64)
                nxt[moving] = view.indices[pick]
            else:
                prev = W[:, t - 1]
                pending = moving
                while len(pending):
                    c, b = cur[pending], prev[pending]
                    pick = view.indptr[c] + (rng.random(len(pending)) * deg[c]).astype(np.int64)
                    x = view.indices[pick]
                    weight = np.where(x == b, inv_p, np.where(view.has_edges(x, b), 1.0, inv_q))
                    accept = rng.random(len(pending)) * ceiling < weight
                    nxt[pending[accept]] = x[accept]
                    pending = pending[~accept]
            W[:, t + 1] = nxt
    return walks


def walk_locality(walks: np.ndarray, g) -> np.ndarray:
    """Per-walk maximum shortest-path distance between the origin and any visited node."""
    view = _view(g)
    walks = np.asarray(walks, dtype=np.int64)
    origins, inverse = np.unique(walks[:, 0], return_inverse=True)
    dist = shortest_path(view.csr(), unweighted=True, indices=origins)
    reach = dist[inverse[:, None], walks]
    return reach.max(axis=1).astype(int)


def locality_summary(distances: np.ndarray) -> dict:
    d = np.asarray(distances)
    values, counts = np.unique(d, return_counts=True)
    return {
        "mean": float(d.mean()),
        "std": float(d.std()),
        "sem": float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0,
        "distribution": {int(v): c / len(d) for v, c in zip(values, counts)},
    }


# -- skip-gram -----------------------------------------------------------------

@dataclass
class EmbeddingTable:
    nodes: tuple
    vectors: np.ndarray

    def __post_init__(self):
        self._index = {n: k for k, n in enumerate(self.nodes)}

    def __getitem__(self, node: Hashable) -> np.ndarray:
        return self.vectors[self._index[node]]

    def __contains__(self, node: Hashable) -> bool:
        return node in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def to_csv(self, path: str | Path) -> Path:
        header = ["node_id", *(f"e{k}" for k in range(self.dimension))]
        return write_rows(path, header, ([n, *map(float, v)] for n, v in zip(self.nodes, self.vectors)))

    @classmethod
    def from_csv(cls, path: str | Path) -> "EmbeddingTable":
        rows = read_rows(path, ["node_id"])
        cols = [c for c in rows[0] if c != "node_id"] if rows else []
        return cls(tuple(r["node_id"] for r in rows),
                   np.array([[float(r[c]) for c in cols] for r in rows], dtype=float))

    def to_npz(self, path: str | Path) -> Path:
        """Binary form: ``ids`` (unicode array) and ``vectors`` (float64, n x d)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez(fh, ids=np.array([str(n) for n in self.nodes]), vectors=self.vectors)
        return path

    @classmethod
    def from_npz(cls, path: str | Path) -> "EmbeddingTable":
        with np.load(path) as data:
            return cls(tuple(str(x) for x in data["ids"]), data["vectors"].copy())


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1 + np.tanh(0.5 * x))


def _context_pairs(walks: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers, contexts = [], []
    for off in range(1, min(window, walks.shape[1] - 1) + 1):
        a, b = walks[:, :-off].ravel(), walks[:, off:].ravel()
        centers += [a, b]
        contexts += [b, a]
    if not centers:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def _row_update(M: np.ndarray, rows: np.ndarray, grads: np.ndarray, lr: float) -> None:
    # average the gradients of repeated rows so hub nodes do not take huge steps
    order = np.argsort(rows, kind="stable")
    r = rows[order]
    starts = np.flatnonzero(np.r_[True, r[1:] != r[:-1]])
    acc = np.add.reduceat(grads[order], starts, axis=0)
    counts = np.diff(np.r_[starts, len(r)])
    M[r[starts]] -= lr * acc / counts[:, None]


def train_skipgram(walks: np.ndarray, config: WalkConfig | None = None,
                   nodes: Sequence[Hashable] | None = None, walk_chunk: int = 2000) -> EmbeddingTable:
    """Skip-gram with negative sampling over walk co-occurrences.

    ``walks`` holds node indices; ``nodes`` names them (defaults to the
    indices themselves).  Noise samples follow the unigram distribution raised
    to 3/4.  The learning rate decays linearly over all processed pairs.
    """
    config = config or WalkConfig()
    walks = np.asarray(walks, dtype=np.int64)
    if walks.size == 0:
        raise ValueError("no walks to train on")
    n = int(walks.max()) + 1 if nodes is None else len(nodes)
    nodes = tuple(range(n)) if nodes is None else tuple(nodes)
    d, K = config.dimension, config.negatives
    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((n, d)) - 0.5) / d
    w_out = np.zeros((n, d))
    noise = np.bincount(walks.ravel(), minlength=n) ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    span = min(config.window, walks.shape[1] - 1)
    pairs_per_walk = 2 * sum(walks.shape[1] - off for off in range(1, span + 1))
    total = max(1, pairs_per_walk * len(walks) * config.epochs)
    done = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(walks))
        for lo in range(0, len(walks), walk_chunk):
            centers, contexts = _context_pairs(walks[order[lo:lo + walk_chunk]], config.window)
            perm = rng.permutation(len(centers))
            centers, contexts = centers[perm], contexts[perm]
            for b in range(0, len(centers), config.batch_size):
                c, o = centers[b:b + config.batch_size], contexts[b:b + config.batch_size]
                frac = done / total
                lr = max(config.min_learning_rate, config.learning_rate * (1 - frac))
                done += len(c)
                v, u = w_in[c], w_out[o]
                g_pos = _sigmoid((v * u).sum(axis=1)) - 1.0
                grad_v = g_pos[:, None] * u
                grad_u = g_pos[:, None] * v
                out_rows, out_grads = [o], [grad_u]
                if K:
                    neg = np.searchsorted(noise_cdf, rng.random((len(c), K)), side="right")
                    neg = np.minimum(neg, n - 1)
                    un = w_out[neg]
                    g_neg = _sigmoid(np.einsum("bd,bkd->bk", v, un))
                    grad_v += np.einsum("bk,bkd->bd", g_neg, un)
                    out_rows.append(neg.ravel())
                    out_grads.append((g_neg[:, :, None] * v[:, None, :]).reshape(-1, d))
                _row_update(w_in, c, grad_v, lr)
                _row_update(w_out, np.concatenate(out_rows), np.concatenate(out_grads), lr)
    return EmbeddingTable(nodes, w_in)


def embed_graph(g: SignedDigraph, config: WalkConfig | None = None) -> tuple[EmbeddingTable, np.ndarray]:
    """Walks plus skip-gram on the undirected view of ``g``; returns (table, walks)."""
    config = config or WalkConfig()
    view = UndirectedView.from_graph(g)
    walks = biased_walks(view, config)
    return train_skipgram(walks, config, view.nodes), walks


def embed_edge(table: EmbeddingTable, i: Hashable, j: Hashable, merge: str = "hadamard") -> np.ndarray:
    """Combine the two endpoint embeddings into one edge vector."""
    a, b = table[i], table[j]
    if merge == "hadamard":
        return a * b
    if merge == "average":
        return (a + b) / 2
    if merge == "abs_diff":
        return np.abs(a - b)
    if merge == "squared_diff":
        return (a - b) ** 2
    if merge == "concat":
        return np.concatenate([a, b])
    raise ValueError(f"unknown merge {merge!r}; expected one of {MERGES}")


def write_walks(path: str | Path, walks: np.ndarray, nodes: Sequence[Hashable]) -> Path:
    """One walk per line, node ids separated by spaces."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in walks:
            fh.write(" ".join(str(nodes[k]) for k in row) + "\n")
    return path
