"""Graph-level structural metrics, Louvain modularity and degree summaries."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .graph import Graph

N_BINS = 20
BIN_WIDTH = 1.0 / N_BINS


def density(g: Graph) -> float:
    if g.n_nodes < 2:
        raise ValueError("density needs at least two nodes")
    return 2.0 * g.n_edges / (g.n_nodes * (g.n_nodes - 1))


def local_clustering(g: Graph) -> np.ndarray:
    """Per-node clustering ``2 E_i / (k_i (k_i - 1))``; 0 where degree < 2."""
    a = g.adjacency.astype(float)
    links = ((a @ a) * a).sum(axis=1) / 2.0
    k = g.degrees.astype(float)
    pairs = k * (k - 1) / 2.0
    return np.divide(links, pairs, out=np.zeros_like(links), where=pairs > 0)


def avg_clustering(g: Graph) -> float:
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    return float(local_clustering(g).mean())


def _components(g: Graph) -> np.ndarray:
    _, labels = connected_components(csr_matrix(g.adjacency), directed=False)
    return labels


def largest_component(g: Graph) -> list[int]:
    labels = _components(g)
    sizes = np.bincount(labels)
    biggest = int(np.argmax(sizes))
    return [int(i) for i in np.flatnonzero(labels == biggest)]


def lcc_fraction(g: Graph) -> float:
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    return len(largest_component(g)) / g.n_nodes


def avg_shortest_path_norm(g: Graph) -> float:
    """Mean shortest-path length over node pairs of the LCC divided by ``ln N_LCC``."""
    nodes = largest_component(g)
    n = len(nodes)
    if n < 2:
        raise ValueError("largest component has fewer than two nodes")
    sub = g.adjacency[np.ix_(nodes, nodes)]
    dist = shortest_path(csr_matrix(sub), directed=False, unweighted=True)
    mean = dist[np.triu_indices(n, k=1)].mean()
    return float(mean / math.log(n))


def modularity(g: Graph, partition: Sequence[int], resolution: float = 1.0) -> float:
    """``Q = 1/(2E) sum_ij (A_ij - gamma k_i k_j / 2E) [c_i == c_j]``."""
    if g.n_edges == 0:
        raise ValueError("modularity is undefined without edges")
    two_m = 2.0 * g.n_edges
    comm = np.asarray(partition)
    k = g.degrees.astype(float)
    q = 0.0
    for c in np.unique(comm):
        members = comm == c
        internal = g.adjacency[np.ix_(members, members)].sum()  # ordered pairs
        q += internal / two_m - resolution * (k[members].sum() / two_m) ** 2
    return float(q)


def _one_level(adj: list[dict[int, float]], rng, resolution: float) -> tuple[list[int], bool]:
    n = len(adj)
    k = np.array([sum(nb.values()) + nb.get(i, 0.0) for i, nb in enumerate(adj)])
    two_m = k.sum()
    comm = list(range(n))
    tot = k.copy()
    improved = False
    order = [int(i) for i in rng.permutation(n)]
    moved = True
    while moved:
        moved = False
        for i in order:
            ci = comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] = links.get(comm[j], 0.0) + w
            tot[ci] -= k[i]
            best, best_gain = ci, links.get(ci, 0.0) - resolution * tot[ci] * k[i] / two_m
            for c in sorted(links):
                gain = links[c] - resolution * tot[c] * k[i] / two_m
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved = improved = True
    return comm, improved


def louvain(g: Graph, seed=0, resolution: float = 1.0) -> tuple[list[int], float]:
    """Louvain community detection; returns ``(community per node, Q)``.

    Nodes are visited in a seeded random order at every level; a node moves only
    on a strict modularity gain, and the first local optimum is kept.
    """
    if g.n_edges == 0:
        raise ValueError("Louvain needs at least one edge")
    rng = np.random.default_rng(seed)
    adj: list[dict[int, float]] = [dict.fromkeys(nb, 1.0) for nb in g.neighbors]
    membership = list(range(g.n_nodes))
    while True:
        comm, improved = _one_level(adj, rng, resolution)
        if not improved:
            break
        relabel = {c: i for i, c in enumerate(sorted(set(comm)))}
        comm = [relabel[c] for c in comm]
        membership = [comm[c] for c in membership]
        agg: list[dict[int, float]] = [dict() for _ in relabel]
        for i, nb in enumerate(adj):
            for j, w in nb.items():
                ci, cj = comm[i], comm[j]
                agg[ci][cj] = agg[ci].get(cj, 0.0) + (w if i != j else 2.0 * w)
        # internal weight was accumulated over ordered pairs; store it once
        for c, nb in enumerate(agg):
            if c in nb:
                nb[c] /= 2.0
        adj = agg
    return membership, modularity(g, membership, resolution)


@dataclass(frozen=True)
class DegreeHistogram:
    """Mass of normalized degrees in 20 bins ``[0, .05), ..., [.95, 1]``."""

    masses: tuple[float, ...]
    count: int

    @property
    def bin_starts(self) -> list[float]:
        return [round(i * BIN_WIDTH, 2) for i in range(N_BINS)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_start", "mass"])
        for start, mass in zip(self.bin_starts, self.masses):
            w.writerow([f"{start:.2f}", repr(float(mass))])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"bin_starts": self.bin_starts, "masses": list(self.masses), "count": self.count}


def normalized_degrees(g: Graph) -> np.ndarray:
    return g.degrees / g.n_nodes


def pooled_normalized_degrees(graphs: Sequence[Graph]) -> np.ndarray:
    if not graphs:
        return np.empty(0)
    return np.concatenate([normalized_degrees(g) for g in graphs])


def pooled_degree_histogram(graphs: Sequence[Graph]) -> DegreeHistogram:
    counts = np.zeros(N_BINS, dtype=np.int64)
    for g in graphs:
        # integer binning avoids float edge cases such as 0.75 / 0.05 < 15
        bins = np.minimum((N_BINS * g.degrees) // max(g.n_nodes, 1), N_BINS - 1)
        counts += np.bincount(bins, minlength=N_BINS)
    total = int(counts.sum())
    masses = counts / total if total else counts.astype(float)
    return DegreeHistogram(tuple(float(x) for x in masses), total)


def gini(values: Sequence[float]) -> float:
    """``sum_ij |x_i - x_j| / (2 n^2 mean)``; 0 when the mean is 0."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("gini of an empty list")
    if (x < 0).any():
        raise ValueError("gini expects non-negative values")
    mean = x.mean()
    if mean == 0:
        return 0.0
    xs = np.sort(x)
    n = xs.size
    # sum_ij |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i) for sorted x, i = 0..n-1
    total = 2.0 * np.sum((2 * np.arange(n) - n + 1) * xs)
    return float(total / (2 * n * n * mean))


METRIC_NAMES = ("density", "avg_clustering", "lcc_fraction", "avg_sp_norm", "modularity",
                "degree_gini")


@dataclass(frozen=True)
class MetricVector:
    density: float
    avg_clustering: float
    lcc_fraction: float
    avg_sp_norm: float
    modularity: float
    degree_gini: float

    def to_dict(self) -> dict:
        return asdict(self)


def metric_vector(g: Graph, seed=0) -> MetricVector:
    return MetricVector(
        density=density(g),
        avg_clustering=avg_clustering(g),
        lcc_fraction=lcc_fraction(g),
        avg_sp_norm=avg_shortest_path_norm(g),
        modularity=louvain(g, seed)[1],
        degree_gini=gini(g.degrees),
    )
