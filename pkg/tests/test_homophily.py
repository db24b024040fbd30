import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from socnetgen.graph import Graph
from socnetgen.homophily import (
    LabeledGraph,
    age_gap_distributions,
    age_group,
    age_ratio,
    cross_group_ratio,
    democrat_lean,
    group_degree_stats,
    gs_diversity,
    homophily_report,
    isolation_index,
    node_polarization,
    pairwise_csv,
    pairwise_ratio,
    polarization_mean,
    same_group_ratio,
)
from socnetgen.persona import bundled_personas


def labeled(n, edges, groups=None, ages=None, political=None):
    labels = {}
    if groups is not None:
        labels["group"] = tuple(groups)
    if political is not None:
        labels["political"] = tuple(political)
    return LabeledGraph(Graph.from_edges(n, edges), labels, None if ages is None else tuple(ages))


def four_node():
    # nodes 0,1 in A and 2,3 in B; edges (0,1) and (0,2)
    return labeled(4, [(0, 1), (0, 2)], groups="AABB")


def test_cross_ratio_hand_example():
    assert cross_group_ratio(four_node(), "group") == pytest.approx(0.75)


def test_same_ratio_hand_example():
    assert same_group_ratio(four_node(), "group") == pytest.approx(1.5)


def test_pairwise_hand_example():
    groups, mat = pairwise_ratio(four_node(), "group", min_group_size=1)
    assert groups == ["A", "B"]
    assert mat[0, 1] == pytest.approx(0.75)
    assert mat[1, 0] == pytest.approx(0.75)


def test_complete_graph_ratios_are_one():
    lg = LabeledGraph(Graph.complete(7), {"group": tuple("AABBBCC")}, (20, 30, 40, 50, 60, 70, 80))
    assert cross_group_ratio(lg, "group") == pytest.approx(1.0)
    assert same_group_ratio(lg, "group") == pytest.approx(1.0)
    _, mat = pairwise_ratio(lg, "group", min_group_size=1)
    np.testing.assert_allclose(mat, 1.0)
    assert age_ratio(lg) == pytest.approx(1.0)


def test_segregated_edges():
    lg = labeled(4, [(0, 1), (2, 3)], groups="AABB")
    assert cross_group_ratio(lg, "group") == 0.0
    lg = labeled(4, [(0, 2), (1, 3)], groups="AABB")
    assert same_group_ratio(lg, "group") == 0.0


def test_single_group_and_empty_graph_raise():
    with pytest.raises(ValueError):
        cross_group_ratio(labeled(3, [(0, 1)], groups="AAA"), "group")
    with pytest.raises(ValueError):
        cross_group_ratio(labeled(3, [], groups="ABA"), "group")
    with pytest.raises(ValueError):
        pairwise_ratio(labeled(3, [], groups="ABA"), "group", 1)


def test_pairwise_min_group_size_filters():
    lg = labeled(5, [(0, 1), (1, 2), (3, 4)], groups="AAABB")
    groups, mat = pairwise_ratio(lg, "group", min_group_size=3)
    assert groups == ["A"]
    assert mat.shape == (1, 1)


def test_age_ratio_hand_example():
    lg = labeled(3, [(0, 1)], ages=(20, 30, 40))
    assert age_ratio(lg) == pytest.approx(0.75)


def test_age_ratio_equal_ages_raises():
    with pytest.raises(ValueError):
        age_ratio(labeled(3, [(0, 1)], ages=(30, 30, 30)))


def test_age_gap_distributions():
    lg = labeled(3, [], ages=(20, 30, 40))
    obs, exp = age_gap_distributions(lg)
    assert obs.size == 0
    assert sorted(exp.tolist()) == [10, 10, 20]
    k3 = lg.with_graph(Graph.complete(3))
    obs, exp = age_gap_distributions(k3)
    assert sorted(obs.tolist()) == sorted(exp.tolist())
    pooled, _ = age_gap_distributions([k3, labeled(3, [(0, 2)], ages=(20, 30, 40))])
    assert sorted(pooled.tolist()) == [10, 10, 20, 20]


def test_age_groups():
    assert [age_group(a) for a in (18, 29, 30, 59, 60, 99)] == [
        "Under 30", "Under 30", "30-59", "30-59", "60+", "60+"]


def test_isolation_segregated_cliques():
    parties = ["Republican"] * 3 + ["Democrat"] * 3
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
    assert isolation_index(labeled(6, edges, political=parties)) == pytest.approx(1.0)


def test_isolation_complete_bipartite():
    # every R node sees only D neighbours, whose neighbours are all R, so the
    # exposure of R nodes is 1 and that of D nodes is 0
    parties = ["Republican", "Republican", "Democrat", "Democrat"]
    edges = [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert isolation_index(labeled(4, edges, political=parties)) == pytest.approx(1.0)


def test_isolation_ignores_independents_and_needs_both_sides():
    parties = ["Republican", "Independent", "Democrat"]
    lg = labeled(3, [(0, 1), (1, 2)], political=parties)
    with pytest.raises(ValueError):
        isolation_index(lg)
    with pytest.raises(ValueError):
        isolation_index(labeled(2, [(0, 1)], political=["Democrat", "Democrat"]))


def test_polarization_examples():
    parties = ["Republican", "Democrat", "Republican", "Democrat", "Democrat", "Democrat"]
    lg = labeled(6, [(0, 1), (0, 2), (3, 4), (3, 5), (3, 1)], political=parties)
    assert node_polarization(lg, 0) == pytest.approx(0.0)
    assert node_polarization(lg, 3) == pytest.approx(0.6)
    iso = labeled(3, [(0, 1)], political=["Democrat", "Republican", "Democrat"])
    assert node_polarization(iso, 2) == 0.0


def test_polarization_mean_skips_unmapped():
    parties = ["Democrat", "Independent", "Republican"]
    lg = labeled(3, [(0, 1), (1, 2)], political=parties)
    assert polarization_mean(lg) == 0.0


def test_gs_diversity():
    assert gs_diversity(["a", "a", "a"]) == 0.0
    assert gs_diversity(["a", "b"]) == pytest.approx(0.5)
    assert gs_diversity(["a", "b", "c"]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        gs_diversity([])


def test_democrat_lean():
    parties = ["Republican", "Democrat", "Democrat", "Republican", "Republican"]
    lg = labeled(5, [(0, 1), (0, 2)], political=parties)
    assert democrat_lean(lg, 0) == 1.0
    mixed = ["Independent", "Democrat", "Republican", "Republican", "Republican"]
    lg = labeled(5, [(0, 1), (0, 3), (0, 4), (0, 2)], political=mixed)
    assert democrat_lean(lg, 0) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        democrat_lean(labeled(3, [(0, 1)], political=["Democrat"] * 3), 2)


def test_group_degree_stats_two_cliques():
    edges = [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (3, 6), (4, 5), (4, 6), (5, 6)]
    lg = labeled(7, edges, groups="AAABBBB")
    stats = {s.group: s for s in group_degree_stats(lg, "group", min_group_size=1)}
    assert stats["A"].mean_degree == pytest.approx(2 / 7)
    assert stats["B"].mean_degree == pytest.approx(3 / 7)
    assert stats["A"].degree_gini == 0.0
    assert stats["A"].mean_gs == 0.0
    single = labeled(4, [(0, 1), (1, 2)], groups="AAAA")
    (only,) = group_degree_stats(single, "group", min_group_size=1)
    assert only.mean_gs == 0.0
    assert only.n == 4


def test_report_on_bundled_personas():
    ps = list(bundled_personas())
    g = Graph.from_edges(len(ps), [(i, (i * 7 + 3) % len(ps)) for i in range(len(ps))
                                   if i != (i * 7 + 3) % len(ps)])
    rep = homophily_report(LabeledGraph.from_personas(g, ps))
    d = rep.to_dict()
    assert set(d["cross_ratio"]) == {"gender", "race", "religion", "political"}
    assert all(v is None or v >= 0 for v in d["cross_ratio"].values())
    assert rep.age_ratio is not None and rep.age_ratio >= 0
    assert rep.isolation is not None
    assert "political" in d["pairwise"]


def test_pairwise_csv():
    groups, mat = pairwise_ratio(four_node(), "group", 1)
    text = pairwise_csv(groups, mat)
    lines = text.strip().splitlines()
    assert lines[0] == "group,A,B"
    assert lines[1].startswith("A,")
    assert float(lines[1].split(",")[2]) == pytest.approx(0.75)


# ---------------------------------------------------------------- properties

@st.composite
def labeled_graphs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    return oracles.random_labeled_graph(np.random.default_rng(seed))


@settings(max_examples=60, deadline=None)
@given(labeled_graphs())
def test_cross_and_same_proportions_complement(lg):
    g = lg.labels["group"]
    n, e = lg.graph.n_nodes, lg.graph.n_edges
    sizes = [g.count(x) for x in set(g)]
    s_exp = sum(s * (s - 1) for s in sizes) / (n * (n - 1))
    c_exp = 1 - s_exp
    c_obs = cross_group_ratio(lg, "group") * c_exp
    if s_exp > 0:
        s_obs = same_group_ratio(lg, "group") * s_exp
        assert c_obs + s_obs == pytest.approx(1.0)
    cross = cross_group_ratio(lg, "group")
    if s_exp > 0:
        same = same_group_ratio(lg, "group")
        if cross < 1 - 1e-12:
            assert same > 1
        elif cross > 1 + 1e-12:
            assert same < 1
    assert e >= 1


@settings(max_examples=60, deadline=None)
@given(labeled_graphs())
def test_two_group_pairwise_matches_cross_ratio(lg):
    two = tuple("A" if x == lg.labels["group"][0] else "B" for x in lg.labels["group"])
    if len(set(two)) < 2:
        return
    lg2 = LabeledGraph(lg.graph, {"group": two})
    _, mat = pairwise_ratio(lg2, "group", min_group_size=1)
    assert mat[0, 1] == pytest.approx(cross_group_ratio(lg2, "group"), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(labeled_graphs(), st.permutations(["x", "y", "z", "w"]))
def test_label_permutation_equivariance(lg, names):
    old = sorted(set(lg.labels["group"]))
    rename = dict(zip(old, names))
    lg2 = LabeledGraph(lg.graph, {"group": tuple(rename[x] for x in lg.labels["group"])})
    assert cross_group_ratio(lg2, "group") == pytest.approx(cross_group_ratio(lg, "group"))
    g1, m1 = pairwise_ratio(lg, "group", 1)
    g2, m2 = pairwise_ratio(lg2, "group", 1)
    idx = [g2.index(rename[x]) for x in g1]
    np.testing.assert_allclose(m2[np.ix_(idx, idx)], m1, equal_nan=True)


@settings(max_examples=40, deadline=None)
@given(labeled_graphs())
def test_ratios_non_negative_and_polarization_bounded(lg):
    assert cross_group_ratio(lg, "group") >= 0
    assert 0.0 <= polarization_mean(lg) <= 1.0
    assert 0.0 <= gs_diversity(list(lg.labels["group"])) < 1.0
    assert math.isfinite(age_ratio(lg))
