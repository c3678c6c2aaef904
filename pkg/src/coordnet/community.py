"""Newman modularity and Louvain community detection on coordination graphs."""

from __future__ import annotations

import csv
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from coordnet.kernels import local_move
from coordnet.network import CoordinationGraph

logger = logging.getLogger(__name__)

DEFAULT_SEED = 42


@dataclass(frozen=True)
class CommunityPartition:
    assignment: dict[str, int]
    modularity: float
    community_sizes: dict[int, int] = field(default_factory=dict)
    seed: int | None = None

    @property
    def n_communities(self) -> int:
        return len(self.community_sizes)

    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {c: [] for c in self.community_sizes}
        for user, c in self.assignment.items():
            out[c].append(user)
        return out

    def summary(self) -> dict:
        hist = Counter(self.community_sizes.values())
        return {
            "modularity": self.modularity,
            "n_communities": self.n_communities,
            "size_histogram": {str(k): hist[k] for k in sorted(hist)},
            "seed": self.seed,
        }


def modularity_of(graph: CoordinationGraph, assignment: Mapping[str, Hashable]) -> float:
    """Newman modularity of ``assignment`` on the weighted graph.

    Q = sum over communities of (internal weight / m) - (degree sum / 2m)^2.
    Community labels may be any hashable values.
    """
    missing = [u for u in graph.nodes if u not in assignment]
    if missing:
        raise ValueError(f"assignment misses {len(missing)} nodes, e.g. {missing[0]!r}")
    m = float(graph.total_weight)
    if m == 0:
        logger.warning("modularity of an edgeless graph is defined as 0")
        return 0.0
    internal: dict[Hashable, float] = {}
    degree: dict[Hashable, float] = {}
    for (a, b), w in graph.edges.items():
        ca, cb = assignment[a], assignment[b]
        degree[ca] = degree.get(ca, 0.0) + w
        degree[cb] = degree.get(cb, 0.0) + w
        if ca == cb:
            internal[ca] = internal.get(ca, 0.0) + w
    q = 0.0
    for c, d in degree.items():
        q += internal.get(c, 0.0) / m - (d / (2.0 * m)) ** 2
    return q


@dataclass
class _Level:
    """Graph at one aggregation level, nodes 0..n-1."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    loops: np.ndarray

    def csr(self):
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        w = np.concatenate([self.weight, self.weight])
        order = np.lexsort((cols, rows))
        rows, cols, w = rows[order], cols[order], w[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, rows + 1, 1)
        np.cumsum(indptr, out=indptr)
        degree = np.zeros(self.n, dtype=np.float64)
        np.add.at(degree, rows, w)
        degree += 2.0 * self.loops
        return indptr, cols.astype(np.int64), w.astype(np.float64), degree


def _dense_labels(comm: np.ndarray) -> np.ndarray:
    """Relabel community ids 0..k-1 in order of first appearance."""
    _, first, inverse = np.unique(comm, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse]


def _aggregate(level: _Level, labels: np.ndarray) -> _Level:
    k = int(labels.max()) + 1 if level.n else 0
    cs, cd = labels[level.src], labels[level.dst]
    loops = np.zeros(k, dtype=np.float64)
    np.add.at(loops, labels, level.loops)
    inside = cs == cd
    np.add.at(loops, cs[inside], level.weight[inside])
    a = np.minimum(cs[~inside], cd[~inside])
    b = np.maximum(cs[~inside], cd[~inside])
    key = a * k + b
    uniq, inv = np.unique(key, return_inverse=True)
    w = np.zeros(len(uniq), dtype=np.float64)
    np.add.at(w, inv, level.weight[~inside])
    return _Level(k, uniq // k, uniq % k, w, loops)


def louvain_levels(graph: CoordinationGraph, seed: int = DEFAULT_SEED):
    """Run Louvain and return ``(labels, levels)``.

    ``labels`` maps node index (position in ``graph.nodes``) to a dense
    community id; ``levels`` lists the graph of each aggregation level
    with the labels found on it. The last level is the one on which the
    local-moving phase made no move.
    """
    nodes = graph.nodes
    index = {u: i for i, u in enumerate(nodes)}
    src = np.fromiter((index[a] for a, _ in graph.edges), dtype=np.int64, count=len(graph.edges))
    dst = np.fromiter((index[b] for _, b in graph.edges), dtype=np.int64, count=len(graph.edges))
    weight = np.fromiter(graph.edges.values(), dtype=np.float64, count=len(graph.edges))
    level = _Level(len(nodes), src, dst, weight, np.zeros(len(nodes)))
    labels = np.arange(len(nodes), dtype=np.int64)
    levels = []
    rng = random.Random(seed)
    while level.n:
        indptr, indices, w, degree = level.csr()
        m2 = float(degree.sum())
        comm = np.arange(level.n, dtype=np.int64)
        tot = degree.copy()
        size = np.ones(level.n, dtype=np.int64)
        order = list(range(level.n))
        rng.shuffle(order)
        moves = local_move(indptr, indices, w, degree, comm, tot, size, np.asarray(order, dtype=np.int64), m2)
        dense = _dense_labels(comm)
        levels.append((level, dense))
        if moves == 0:
            break
        labels = dense[labels]
        level = _aggregate(level, dense)
    return _dense_labels(labels), levels


def louvain(graph: CoordinationGraph, seed: int = DEFAULT_SEED) -> CommunityPartition:
    """Partition ``graph`` by greedy modularity optimisation (Louvain).

    Node visiting order at every level is a shuffle drawn from
    ``random.Random(seed)``, so output is reproducible per seed. Community
    ids are dense, numbered by each community's smallest user id.
    """
    if not graph.edges:
        return CommunityPartition({}, 0.0, {}, seed)
    labels, _ = louvain_levels(graph, seed)
    assignment = {u: int(c) for u, c in zip(graph.nodes, labels.tolist())}
    sizes = Counter(assignment.values())
    return CommunityPartition(
        assignment,
        modularity_of(graph, assignment),
        {c: sizes[c] for c in sorted(sizes)},
        seed,
    )


def write_partition_csv(path, partition: CommunityPartition) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "community_id"])
        for user in sorted(partition.assignment):
            writer.writerow([user, partition.assignment[user]])
