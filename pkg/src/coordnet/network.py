"""Coordination graphs: synchronized-action counting and link-strength filtering."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from coordnet.actions import ActionEvent
from coordnet.kernels import MAX_PROVENANCE, sync_pairs

logger = logging.getLogger(__name__)

Edge = tuple[str, str]


@dataclass(frozen=True)
class CoordinationGraph:
    """Weighted undirected user graph for one (event, channel).

    ``edges`` keys are ordered pairs ``(a, b)`` with ``a < b``. ``nodes``
    holds exactly the users incident to at least one edge, sorted.
    """

    action_type: str | None
    window_seconds: int
    edges: dict[Edge, int]
    nodes: tuple[str, ...] = ()
    provenance: dict[Edge, tuple[str, ...]] = field(default_factory=dict, repr=False)

    @classmethod
    def from_edges(
        cls,
        edges: Mapping[Edge, int],
        action_type: str | None = None,
        window_seconds: int = 1,
        provenance: Mapping[Edge, Sequence[str]] | None = None,
    ) -> "CoordinationGraph":
        """Build from an edge mapping; endpoints are reordered so ``a < b``."""
        clean: dict[Edge, int] = {}
        prov: dict[Edge, tuple[str, ...]] = {}
        for (a, b), w in edges.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            key = (a, b) if a < b else (b, a)
            if key in clean:
                raise ValueError(f"duplicate edge {key}")
            clean[key] = w
            if provenance and (a, b) in provenance:
                prov[key] = tuple(provenance[(a, b)])
        nodes = sorted({u for e in clean for u in e})
        return cls(action_type, window_seconds, dict(sorted(clean.items())), tuple(nodes), prov)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def strength(self) -> dict[str, int]:
        """Sum of incident edge weights per node."""
        out = dict.fromkeys(self.nodes, 0)
        for (a, b), w in self.edges.items():
            out[a] += w
            out[b] += w
        return out

    def subgraph_edges(self, predicate) -> "CoordinationGraph":
        kept = {e: w for e, w in self.edges.items() if predicate(e, w)}
        prov = {e: p for e, p in self.provenance.items() if e in kept}
        nodes = tuple(sorted({u for e in kept for u in e}))
        return CoordinationGraph(self.action_type, self.window_seconds, kept, nodes, prov)


@dataclass(frozen=True)
class GraphStageStats:
    stage: str
    node_count: int
    edge_count: int
    density: float

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "nodes": self.node_count,
            "links": self.edge_count,
            "density": self.density,
        }


@dataclass(frozen=True)
class ThresholdResult:
    graph: CoordinationGraph
    threshold: int
    coordinated: GraphStageStats
    filtered: GraphStageStats
    passes: int = 1


def _encode(events: Sequence[ActionEvent]):
    if any(events[i] > events[i + 1] for i in range(len(events) - 1)):
        events = sorted(events)
    users = sorted({ev.user_id for ev in events})
    user_index = {u: i for i, u in enumerate(users)}
    values: list[str] = []
    value_ids = np.empty(len(events), dtype=np.int64)
    times = np.empty(len(events), dtype=np.int64)
    uidx = np.empty(len(events), dtype=np.int64)
    last = None
    for k, ev in enumerate(events):
        if ev.action_value != last:
            values.append(ev.action_value)
            last = ev.action_value
        value_ids[k] = len(values) - 1
        times[k] = ev.timestamp
        uidx[k] = user_index[ev.user_id]
    return users, values, value_ids, times, uidx


def build_graph(
    events: Sequence[ActionEvent],
    window_seconds: int,
    *,
    bucketed: bool = False,
    max_provenance: int = MAX_PROVENANCE,
    action_type: str | None = None,
) -> CoordinationGraph:
    """Count synchronized actions between every pair of users.

    Two events with the same value by different users are synchronized
    when ``|t_i - t_j| <= window_seconds``. Each such post pair adds one
    to the pair's link weight. With ``bucketed=True`` events are instead
    synchronized when they share a ``t // window_seconds`` bucket.
    """
    if window_seconds < 1:
        raise ValueError("window_seconds must be >= 1")
    if action_type is None and events:
        action_type = events[0].action_type
    users, values, value_ids, times, uidx = _encode(events)
    a, b, w, prov = sync_pairs(value_ids, times, uidx, int(window_seconds), bucketed, max_provenance)
    edges: dict[Edge, int] = {}
    provenance: dict[Edge, tuple[str, ...]] = {}
    for ai, bi, wi, row in zip(a.tolist(), b.tolist(), w.tolist(), prov.tolist()):
        key = (users[ai], users[bi])
        edges[key] = wi
        provenance[key] = tuple(values[v] for v in row if v >= 0)
    nodes = tuple(users[i] for i in np.union1d(a, b).tolist())
    return CoordinationGraph(action_type, int(window_seconds), edges, nodes, provenance)


def iter_synchronized_pairs(
    events: Sequence[ActionEvent], window_seconds: int
) -> Iterator[tuple[str, str, str, str, str]]:
    """Stream every synchronized pair with full provenance.

    Yields ``(user_a, user_b, action_value, post_a, post_b)`` with
    ``user_a < user_b``. Intended for debugging; memory use is constant.
    """
    events = sorted(events)
    n = len(events)
    start = 0
    while start < n:
        value = events[start].action_value
        end = start + 1
        while end < n and events[end].action_value == value:
            end += 1
        for i in range(start, end - 1):
            ei = events[i]
            for j in range(i + 1, end):
                ej = events[j]
                if ej.timestamp - ei.timestamp > window_seconds:
                    break
                if ej.user_id == ei.user_id:
                    continue
                if ei.user_id < ej.user_id:
                    yield ei.user_id, ej.user_id, value, ei.post_id, ej.post_id
                else:
                    yield ej.user_id, ei.user_id, value, ej.post_id, ei.post_id
        start = end


def link_threshold(weights: Sequence[int]) -> int:
    """Smallest integer >= mean + population stdev of ``weights``.

    Evaluated in exact integer arithmetic so that e.g. constant weights
    give back exactly that constant.
    """
    n = len(weights)
    if n == 0:
        raise ValueError("no weights")
    s = sum(weights)
    q = sum(w * w for w in weights)
    var_num = n * q - s * s  # n^2 * variance
    guess = math.ceil(s / n + math.sqrt(max(var_num, 0)) / n)

    def ok(t):
        # t >= mean + sd  <=>  n*t - s >= 0 and (n*t - s)^2 >= var_num
        d = n * t - s
        return d >= 0 and d * d >= var_num

    t = guess
    while not ok(t):
        t += 1
    while ok(t - 1):
        t -= 1
    return t


def density(node_count: int, edge_count: int) -> float:
    if node_count < 2:
        return 0.0
    return 2.0 * edge_count / (node_count * (node_count - 1))


def graph_stats(graph: CoordinationGraph, stage: str = "coordinated") -> GraphStageStats:
    return GraphStageStats(stage, graph.node_count, graph.edge_count, density(graph.node_count, graph.edge_count))


def threshold_graph(graph: CoordinationGraph, passes: int = 1, warn: bool = True) -> ThresholdResult:
    """Keep only links at least as strong as ceil(mean + stdev) of the graph's weights.

    Nodes left without links are dropped. ``passes > 1`` repeats the
    filter on its own output, recomputing the cut each time; the reported
    threshold is the last one applied.
    """
    before = graph_stats(graph, "coordinated")
    if not graph.edges:
        if warn:
            logger.warning("thresholding an edgeless %s graph", graph.action_type or "coordination")
        empty = CoordinationGraph(graph.action_type, graph.window_seconds, {}, (), {})
        return ThresholdResult(empty, 0, before, graph_stats(empty, "filtered"), passes)
    current = graph
    cut = 0
    for _ in range(passes):
        if not current.edges:
            break
        cut = link_threshold(list(current.edges.values()))
        current = current.subgraph_edges(lambda e, w, c=cut: w >= c)
    return ThresholdResult(current, cut, before, graph_stats(current, "filtered"), passes)


def write_edge_csv(path, graph: CoordinationGraph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_a", "user_b", "weight"])
        for (a, b), w in graph.edges.items():
            writer.writerow([a, b, w])


def read_edge_csv(path, action_type=None, window_seconds=1) -> CoordinationGraph:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = {(r["user_a"], r["user_b"]): int(r["weight"]) for r in csv.DictReader(fh)}
    return CoordinationGraph.from_edges(rows, action_type, window_seconds)


def to_networkx(graph: CoordinationGraph):
    import networkx as nx

    g = nx.Graph(action_type=graph.action_type or "", window_seconds=graph.window_seconds)
    g.add_nodes_from(graph.nodes)
    for (a, b), w in graph.edges.items():
        g.add_edge(a, b, weight=w)
    return g


def write_graphml(path, graph: CoordinationGraph, node_attrs: Mapping[str, Mapping] | None = None) -> None:
    import networkx as nx

    g = to_networkx(graph)
    for node, attrs in (node_attrs or {}).items():
        if node in g:
            g.nodes[node].update(attrs)
    nx.write_graphml(g, path)
