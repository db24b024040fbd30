"""Homophily, segregation and neighbourhood-diversity measures on labelled graphs.

Edge proportions are taken over ordered node pairs throughout: the observed
share of an edge class is its ordered-pair count over ``2E`` and the expected
share is the matching ordered-pair count over ``N(N-1)``. Under this reading
the cross-group, same-group and pairwise ratios agree with each other (for two
groups the off-diagonal pairwise ratio equals the cross-group ratio).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np

from .graph import Graph
from .metrics import gini
from .persona import CATEGORICAL, Persona

DEFAULT_MIN_GROUP = 10


def age_group(age: int) -> str:
    if age < 30:
        return "Under 30"
    if age < 60:
        return "30-59"
    return "60+"


@dataclass(frozen=True)
class PoliticalMapping:
    variable: str = "political"
    conservative: str = "Republican"
    liberal: str = "Democrat"


@dataclass(frozen=True)
class LabeledGraph:
    graph: Graph
    labels: Mapping[str, tuple[Hashable, ...]]
    ages: tuple[int, ...] | None = None

    def __post_init__(self):
        for var, vals in self.labels.items():
            if len(vals) != self.graph.n_nodes:
                raise ValueError(f"labels for {var!r} must cover every node")
        if self.ages is not None and len(self.ages) != self.graph.n_nodes:
            raise ValueError("ages must cover every node")

    @classmethod
    def from_personas(cls, graph: Graph, personas: Sequence[Persona]) -> "LabeledGraph":
        if len(personas) != graph.n_nodes:
            raise ValueError("need one persona per node")
        labels = {}
        for var in CATEGORICAL:
            vals = tuple(p.value(var) for p in personas)
            if all(v is not None for v in vals):
                labels[var] = vals
        ages = None
        if all(p.age is not None for p in personas):
            ages = tuple(int(p.age) for p in personas)
            labels["age"] = tuple(age_group(a) for a in ages)
        return cls(graph, labels, ages)

    def with_graph(self, graph: Graph) -> "LabeledGraph":
        return LabeledGraph(graph, self.labels, self.ages)

    def groups(self, variable: str) -> tuple:
        try:
            return self.labels[variable]
        except KeyError:
            raise KeyError(f"no labels for variable {variable!r}") from None


def _edge_classes(lg: LabeledGraph, variable: str) -> tuple[int, int, Counter]:
    g = lg.groups(variable)
    same = sum(1 for u, v in lg.graph.edges if g[u] == g[v])
    return same, lg.graph.n_edges - same, Counter(g)


def _check(lg: LabeledGraph):
    if lg.graph.n_edges == 0:
        raise ValueError("ratio undefined on a graph without edges")
    if lg.graph.n_nodes < 2:
        raise ValueError("need at least two nodes")


def cross_group_ratio(lg: LabeledGraph, variable: str) -> float:
    """Observed over expected share of edges joining different groups."""
    _check(lg)
    _, cross, counts = _edge_classes(lg, variable)
    n = lg.graph.n_nodes
    expected = (n * n - sum(c * c for c in counts.values())) / (n * (n - 1))
    if expected == 0:
        raise ValueError(f"only one {variable} group present")
    return (cross / lg.graph.n_edges) / expected


def same_group_ratio(lg: LabeledGraph, variable: str) -> float:
    """Observed over expected share of edges inside a group."""
    _check(lg)
    same, _, counts = _edge_classes(lg, variable)
    n = lg.graph.n_nodes
    expected = sum(c * (c - 1) for c in counts.values()) / (n * (n - 1))
    if expected == 0:
        raise ValueError(f"every {variable} group is a singleton")
    return (same / lg.graph.n_edges) / expected


def pairwise_ratio(lg: LabeledGraph, variable: str,
                   min_group_size: int = DEFAULT_MIN_GROUP) -> tuple[list, np.ndarray]:
    """Ratio matrix over groups with at least ``min_group_size`` members.

    Entry ``(A, B)`` is the ordered-pair share of edges from group A to B over
    ``N_A (N_B - [A == B]) / (N (N - 1))``. Returns ``(groups, matrix)``.
    """
    _check(lg)
    g = lg.groups(variable)
    counts = Counter(g)
    groups = sorted((x for x, c in counts.items() if c >= min_group_size), key=str)
    index = {x: i for i, x in enumerate(groups)}
    obs = np.zeros((len(groups), len(groups)))
    for u, v in lg.graph.edges:
        a, b = index.get(g[u]), index.get(g[v])
        if a is not None and b is not None:
            obs[a, b] += 1
            obs[b, a] += 1
    n = lg.graph.n_nodes
    obs /= 2 * lg.graph.n_edges
    sizes = np.array([counts[x] for x in groups], dtype=float)
    exp = np.outer(sizes, sizes) - np.diag(sizes)
    exp /= n * (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(exp > 0, obs / exp, np.nan)
    return groups, ratio


def _pair_gaps(ages: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(ages.size, k=1)
    return np.abs(ages[i] - ages[j])


def age_ratio(lg: LabeledGraph) -> float:
    """Mean age gap over edges divided by the mean gap over all node pairs."""
    _check(lg)
    if lg.ages is None:
        raise ValueError("graph carries no ages")
    ages = np.asarray(lg.ages, dtype=float)
    expected = _pair_gaps(ages).mean()
    if expected == 0:
        raise ValueError("all ages are equal; expected gap is zero")
    e = np.asarray(lg.graph.edges)
    observed = np.abs(ages[e[:, 0]] - ages[e[:, 1]]).mean()
    return float(observed / expected)


def age_gap_distributions(lgs) -> tuple[np.ndarray, np.ndarray]:
    """Observed edge age gaps (pooled over ``lgs``) and all-pairs gaps.

    ``lgs`` is one labelled graph or a sequence sharing the same personas.
    """
    if isinstance(lgs, LabeledGraph):
        lgs = [lgs]
    if not lgs:
        raise ValueError("need at least one labelled graph")
    ages = np.asarray(lgs[0].ages, dtype=np.int64)
    observed = []
    for lg in lgs:
        if lg.graph.edges:
            e = np.asarray(lg.graph.edges)
            observed.append(np.abs(ages[e[:, 0]] - ages[e[:, 1]]))
    obs = np.concatenate(observed) if observed else np.empty(0, dtype=np.int64)
    return obs, _pair_gaps(ages)


def _sides(lg: LabeledGraph, mapping: PoliticalMapping) -> tuple[np.ndarray, np.ndarray]:
    g = lg.groups(mapping.variable)
    is_c = np.array([x == mapping.conservative for x in g])
    is_l = np.array([x == mapping.liberal for x in g])
    if not is_c.any() or not is_l.any():
        raise ValueError("both mapped political groups must be present")
    return is_c, is_l


def isolation_index(lg: LabeledGraph, mapping: PoliticalMapping = PoliticalMapping()) -> float:
    """Mean conservative exposure of conservatives minus that of liberals.

    A node's conservative share is the fraction of its mapped neighbours that are
    conservative; a node's exposure is the mean share over its mapped neighbours.
    Nodes outside the two mapped groups are ignored.
    """
    is_c, is_l = _sides(lg, mapping)
    mapped = is_c | is_l
    nbrs = lg.graph.neighbors
    share = np.full(lg.graph.n_nodes, np.nan)
    for j in range(lg.graph.n_nodes):
        c = sum(1 for k in nbrs[j] if is_c[k])
        l = sum(1 for k in nbrs[j] if is_l[k])
        if c + l:
            share[j] = c / (c + l)
    exposure = np.full(lg.graph.n_nodes, np.nan)
    for i in np.flatnonzero(mapped):
        vals = [share[j] for j in nbrs[i] if mapped[j] and not np.isnan(share[j])]
        if vals:
            exposure[i] = np.mean(vals)
    exp_c = exposure[is_c & ~np.isnan(exposure)]
    exp_l = exposure[is_l & ~np.isnan(exposure)]
    if exp_c.size == 0 or exp_l.size == 0:
        raise ValueError("conservative or liberal exposure undefined (no mapped neighbours)")
    return float(exp_c.mean() - exp_l.mean())


def node_polarization(lg: LabeledGraph, node: int,
                      mapping: PoliticalMapping = PoliticalMapping()) -> float:
    """``2 |0.5 - alpha / (alpha + beta)|`` with a uniform Beta(1, 1) prior."""
    g = lg.groups(mapping.variable)
    left = sum(1 for k in lg.graph.neighbors[node] if g[k] == mapping.liberal)
    right = sum(1 for k in lg.graph.neighbors[node] if g[k] == mapping.conservative)
    alpha, beta = 1 + left, 1 + right
    return 2.0 * abs(0.5 - alpha / (alpha + beta))


def polarization_mean(lg: LabeledGraph, mapping: PoliticalMapping = PoliticalMapping()) -> float:
    is_c, is_l = _sides(lg, mapping)
    nodes = np.flatnonzero(is_c | is_l)
    return float(np.mean([node_polarization(lg, int(i), mapping) for i in nodes]))


def gs_diversity(groups: Sequence[Hashable]) -> float:
    """Gini-Simpson index ``1 - sum_g p_g^2`` of a multiset of group labels."""
    groups = list(groups)
    if not groups:
        raise ValueError("diversity of an empty neighbourhood is undefined")
    p = np.array(list(Counter(groups).values()), dtype=float) / len(groups)
    return float(1.0 - np.sum(p * p))


def one_hop_diversity(lg: LabeledGraph, node: int, variable: str) -> float:
    g = lg.groups(variable)
    return gs_diversity([g[k] for k in lg.graph.neighbors[node]])


def democrat_lean(lg: LabeledGraph, node: int,
                  mapping: PoliticalMapping = PoliticalMapping()) -> float:
    """Share of a node's mapped neighbours that belong to the liberal group."""
    g = lg.groups(mapping.variable)
    left = sum(1 for k in lg.graph.neighbors[node] if g[k] == mapping.liberal)
    right = sum(1 for k in lg.graph.neighbors[node] if g[k] == mapping.conservative)
    if left + right == 0:
        raise ValueError(f"node {node} has no mapped neighbours")
    return left / (left + right)


@dataclass(frozen=True)
class GroupDegreeStats:
    group: Hashable
    n: int
    mean_degree: float
    degree_gini: float
    mean_gs: float | None


def group_degree_stats(lg: LabeledGraph, variable: str,
                       min_group_size: int = DEFAULT_MIN_GROUP) -> list[GroupDegreeStats]:
    """Per-group normalized mean degree, degree Gini and mean one-hop diversity."""
    g = lg.groups(variable)
    deg = lg.graph.degrees
    n_total = lg.graph.n_nodes
    out = []
    for group, size in sorted(Counter(g).items(), key=lambda kv: str(kv[0])):
        if size < min_group_size:
            continue
        members = [i for i in range(n_total) if g[i] == group]
        d = deg[members]
        gs = [one_hop_diversity(lg, i, variable) for i in members if deg[i] > 0]
        out.append(GroupDegreeStats(group, size, float(np.mean(d / n_total)), gini(d),
                                    float(np.mean(gs)) if gs else None))
    return out


@dataclass
class HomophilyReport:
    cross_ratio: dict[str, float] = field(default_factory=dict)
    same_ratio: dict[str, float] = field(default_factory=dict)
    pairwise: dict[str, dict] = field(default_factory=dict)
    age_ratio: float | None = None
    isolation: float | None = None
    polarization_mean: float | None = None
    group_stats: dict[str, list[dict]] = field(default_factory=dict)
    democrat_lean: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["democrat_lean"] = {str(k): v for k, v in self.democrat_lean.items()}
        return d


def _maybe(fn, *args):
    try:
        return fn(*args)
    except (ValueError, KeyError):
        return None


def homophily_report(lg: LabeledGraph, min_group_size: int = DEFAULT_MIN_GROUP,
                     mapping: PoliticalMapping = PoliticalMapping()) -> HomophilyReport:
    """Every measure that is defined for ``lg``; undefined ones are left as None."""
    rep = HomophilyReport()
    for var in lg.labels:
        if var == "age":
            continue
        rep.cross_ratio[var] = _maybe(cross_group_ratio, lg, var)
        rep.same_ratio[var] = _maybe(same_group_ratio, lg, var)
    for var in lg.labels:
        res = _maybe(pairwise_ratio, lg, var, min_group_size)
        if res is not None:
            groups, mat = res
            rep.pairwise[var] = {
                "groups": [str(x) for x in groups],
                "matrix": [[None if np.isnan(x) else float(x) for x in row] for row in mat],
            }
        rep.group_stats[var] = [asdict(s) for s in group_degree_stats(lg, var, min_group_size)]
    if lg.ages is not None:
        rep.age_ratio = _maybe(age_ratio, lg)
    if mapping.variable in lg.labels:
        rep.isolation = _maybe(isolation_index, lg, mapping)
        rep.polarization_mean = _maybe(polarization_mean, lg, mapping)
        for i in range(lg.graph.n_nodes):
            val = _maybe(democrat_lean, lg, i, mapping)
            if val is not None:
                rep.democrat_lean[i] = val
    return rep


def pairwise_csv(groups: Sequence, matrix: np.ndarray) -> str:
    lines = ["group," + ",".join(str(g) for g in groups)]
    for g, row in zip(groups, matrix):
        lines.append(str(g) + "," + ",".join("" if np.isnan(x) else repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
