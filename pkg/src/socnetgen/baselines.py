"""Classical random-graph baselines and their parameter fits."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import Graph
from .metrics import avg_clustering

WS_P_GRID = tuple(round(0.01 * i, 2) for i in range(1, 51))


def erdos_renyi(n: int, p: float, seed) -> Graph:
    """G(n, p): every pair is an edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, tuple(zip(iu[keep].tolist(), ju[keep].tolist())))


def barabasi_albert(n: int, m: int, seed) -> Graph:
    """Preferential attachment grown from a star on ``m + 1`` nodes.

    Each new node links to ``m`` distinct existing nodes drawn from the list of
    edge endpoints (so proportionally to degree), giving exactly
    ``m + (n - m - 1) * m`` edges.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.default_rng(seed)
    edges = [(0, j) for j in range(1, m + 1)]
    urn = [0] * m + list(range(1, m + 1))
    for source in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(urn[int(rng.integers(len(urn)))])
        for t in sorted(targets):
            edges.append((t, source))
        urn.extend(sorted(targets))
        urn.extend([source] * m)
    return Graph.from_edges(n, edges)


def watts_strogatz(n: int, k: int, p: float, seed) -> Graph:
    """Ring lattice of ``k`` nearest neighbours with each edge rewired w.p. ``p``.

    A rewired edge ``(u, v)`` becomes ``(u, w)`` with ``w`` uniform over nodes that
    are neither ``u`` nor already adjacent to it; the edge is left alone when no
    such ``w`` exists. The edge count stays ``n * k / 2``.
    """
    if k % 2 or not 0 <= k < n:
        raise ValueError("k must be even and 0 <= k < n")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    adj = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= p:
                continue
            if len(adj[u]) >= n - 1:
                continue
            candidates = [w for w in range(n) if w != u and w not in adj[u]]
            w = candidates[int(rng.integers(len(candidates)))]
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return Graph.from_edges(n, [(u, v) for u in range(n) for v in adj[u] if u < v])


def ba_density(n: int, m: int) -> float:
    return 2.0 * (m + (n - m - 1) * m) / (n * (n - 1))


def ws_density(n: int, k: int) -> float:
    return k / (n - 1)


def fit_er_p(reference_densities: Sequence[float]) -> float:
    """ER edge probability: the mean density of the references."""
    values = list(reference_densities)
    if not values:
        raise ValueError("need at least one reference density")
    return float(np.mean(values))


def fit_ba_m(n: int, reference_mean_density: float) -> int:
    """Smallest ``m`` whose closed-form BA density is closest to the reference."""
    gaps = [abs(ba_density(n, m) - reference_mean_density) for m in range(1, n)]
    return int(np.argmin(gaps)) + 1


def fit_ws_k(n: int, reference_mean_density: float) -> int:
    ks = list(range(2, n, 2))
    gaps = [abs(ws_density(n, k) - reference_mean_density) for k in ks]
    return ks[int(np.argmin(gaps))]


def ws_clustering_curve(n: int, k: int, seed, trials_per_p: int = 30,
                        grid: Sequence[float] = WS_P_GRID) -> np.ndarray:
    """Mean average clustering of ``trials_per_p`` WS graphs at each grid point."""
    seqs = np.random.SeedSequence(seed).spawn(len(grid))
    out = np.empty(len(grid))
    for i, (p, ss) in enumerate(zip(grid, seqs)):
        seeds = ss.spawn(trials_per_p)
        out[i] = np.mean([avg_clustering(watts_strogatz(n, k, p, np.random.default_rng(s)))
                          for s in seeds])
    return out


def fit_ws(n: int, reference_mean_density: float, reference_mean_clustering: float,
           trials_per_p: int = 30, seed=0, grid: Sequence[float] = WS_P_GRID) -> tuple[int, float]:
    """Fit ``k`` on density, then sweep ``p`` to match mean clustering."""
    k = fit_ws_k(n, reference_mean_density)
    curve = ws_clustering_curve(n, k, seed, trials_per_p, grid)
    return k, float(grid[int(np.argmin(np.abs(curve - reference_mean_clustering)))])
