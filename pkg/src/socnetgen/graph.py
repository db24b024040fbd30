"""Undirected simple graphs and edge-list ingestion."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_SPLIT = re.compile(r"[,\s]+")


class EdgeListError(ValueError):
    """Raised for malformed edge-list files or invalid edges."""


@dataclass(frozen=True)
class Graph:
    """Immutable undirected simple graph over nodes ``0..n_nodes-1``.

    ``edges`` is stored canonically: a sorted tuple of ``(u, v)`` with ``u < v``.
    ``labels`` optionally maps each dense node id back to its original label.
    """

    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    labels: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        if self.labels is not None and len(self.labels) != self.n_nodes:
            raise ValueError("labels must have one entry per node")

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable[tuple[int, int]],
                   labels: Sequence[int] | None = None) -> "Graph":
        """Build a graph, merging duplicate and reversed pairs.

        Raises ``ValueError`` on self-loops or endpoints outside ``0..n_nodes-1``.
        """
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ValueError(f"edge ({u}, {v}) has an endpoint outside 0..{n_nodes - 1}")
            canon.add((u, v) if u < v else (v, u))
        return cls(n_nodes, tuple(sorted(canon)),
                   None if labels is None else tuple(int(x) for x in labels))

    @classmethod
    def empty(cls, n_nodes: int) -> "Graph":
        return cls(n_nodes, ())

    @classmethod
    def complete(cls, n_nodes: int) -> "Graph":
        return cls(n_nodes, tuple((u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        adj: list[set[int]] = [set() for _ in range(self.n_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(s) for s in adj)

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        deg.setflags(write=False)
        return deg

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense 0/1 adjacency matrix (read-only)."""
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
        if self.edges:
            e = np.asarray(self.edges)
            a[e[:, 0], e[:, 1]] = 1
            a[e[:, 1], e[:, 0]] = 1
        a.setflags(write=False)
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbors[u]

    def degree(self, node: int) -> int:
        if not 0 <= node < self.n_nodes:
            raise KeyError(f"unknown node {node}")
        return int(self.degrees[node])

    def subgraph(self, nodes: Iterable[int]) -> "Graph":
        """Induced subgraph, relabelled densely in ascending order of ``nodes``."""
        keep = sorted(set(nodes))
        index = {old: new for new, old in enumerate(keep)}
        edges = [(index[u], index[v]) for u, v in self.edges if u in index and v in index]
        return Graph.from_edges(len(keep), edges, labels=[self.label(u) for u in keep])

    def label(self, node: int) -> int:
        return node if self.labels is None else self.labels[node]

    def __repr__(self) -> str:
        return f"Graph(N={self.n_nodes}, E={self.n_edges})"


@dataclass(frozen=True)
class WeightedEdgeList:
    """Weighted edge records exactly as parsed; weights may be negative."""

    records: tuple[tuple[int, int, float], ...]

    def __len__(self) -> int:
        return len(self.records)


def _tokens(path: Path, width: int):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = [t for t in _SPLIT.split(line) if t]
            if len(toks) != width:
                raise EdgeListError(f"{path}:{lineno}: expected {width} fields, got {len(toks)}")
            yield lineno, toks


def _remap(pairs: list[tuple[int, int]]) -> tuple[list[tuple[int, int]], list[int]]:
    labels = sorted({x for pair in pairs for x in pair})
    index = {lab: i for i, lab in enumerate(labels)}
    return [(index[u], index[v]) for u, v in pairs], labels


def load_edge_list(path, format: str = "plain"):
    """Read an edge list file.

    ``plain`` files hold ``u v`` per line and yield a :class:`Graph` whose node ids
    are dense (``0..N-1``, assigned in ascending order of the original labels,
    which are kept in ``Graph.labels``). ``weighted`` files hold ``u v w`` and
    yield a :class:`WeightedEdgeList`. Tokens may be separated by whitespace or
    commas; blank lines and ``#`` comments are skipped.
    """
    path = Path(path)
    if format == "plain":
        pairs = []
        for lineno, toks in _tokens(path, 2):
            try:
                u, v = int(toks[0]), int(toks[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: non-integer node id") from None
            if u < 0 or v < 0:
                raise EdgeListError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise EdgeListError(f"{path}:{lineno}: self-loop on node {u}")
            pairs.append((u, v))
        dense, labels = _remap(pairs)
        return Graph.from_edges(len(labels), dense, labels=labels)
    if format == "weighted":
        records = []
        for lineno, toks in _tokens(path, 3):
            try:
                records.append((int(toks[0]), int(toks[1]), float(toks[2])))
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: cannot parse weighted edge") from None
        return WeightedEdgeList(tuple(records))
    raise ValueError(f"unknown edge-list format {format!r}")


def threshold_positive(edge_list: WeightedEdgeList) -> Graph:
    """Keep edges with strictly positive weight as an undirected graph.

    Nodes only touched by dropped edges are not included.
    """
    pairs = [(u, v) for u, v, w in edge_list.records if w > 0 and u != v]
    dense, labels = _remap(pairs)
    return Graph.from_edges(len(labels), dense, labels=labels)


def save_edge_list(graph: Graph, path) -> None:
    """Write the canonical form: one ``u v`` line per edge, ``u < v``, sorted.

    Original labels are written when the graph carries them.
    """
    lines = sorted(
        (min(a, b), max(a, b))
        for a, b in ((graph.label(u), graph.label(v)) for u, v in graph.edges)
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(f"{u} {v}\n" for u, v in lines)


def degree(graph: Graph, node: int) -> int:
    return graph.degree(node)
