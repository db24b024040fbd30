import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from socnetgen.baselines import (
    ba_density,
    barabasi_albert,
    erdos_renyi,
    fit_ba_m,
    fit_er_p,
    fit_ws,
    fit_ws_k,
    watts_strogatz,
    ws_density,
)
from socnetgen.metrics import avg_clustering, density
from socnetgen.references import ReferenceSet


def test_er_extremes():
    assert erdos_renyi(10, 0.0, 1).n_edges == 0
    assert erdos_renyi(10, 1.0, 1).n_edges == 45
    with pytest.raises(ValueError):
        erdos_renyi(10, 1.5, 0)


def test_er_mean_density():
    d = [density(erdos_renyi(50, 0.2, s)) for s in range(200)]
    # sd of one density is sqrt(.2*.8/1225) ~ .0114; of the mean ~ .0008
    assert abs(np.mean(d) - 0.2) < 0.004


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 40), st.data())
def test_ba_edge_count_identity(n, data):
    m = data.draw(st.integers(1, n - 1))
    seed = data.draw(st.integers(0, 2**32 - 1))
    g = barabasi_albert(n, m, seed)
    assert g.n_edges == m + (n - m - 1) * m
    assert density(g) == pytest.approx(ba_density(n, m))


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 40), st.data())
def test_ws_edge_count_identity(n, data):
    k = data.draw(st.sampled_from(list(range(0, n, 2))))
    p = data.draw(st.floats(0, 1))
    g = watts_strogatz(n, k, p, data.draw(st.integers(0, 2**32 - 1)))
    assert g.n_edges == n * k // 2
    assert density(g) == pytest.approx(ws_density(n, k))


def test_ws_lattice_clustering():
    # ring lattice clustering is 3(k-2) / (4(k-1))
    assert avg_clustering(watts_strogatz(50, 10, 0.0, 0)) == pytest.approx(3 * 8 / 36)


def test_ba_hubs():
    degs = barabasi_albert(200, 2, 0).degrees
    assert degs.max() > 4 * np.median(degs)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        watts_strogatz(10, 3, 0.1, 0)
    with pytest.raises(ValueError):
        barabasi_albert(5, 5, 0)
    with pytest.raises(ValueError):
        fit_er_p([])


def test_fits_on_bundled_references():
    refs = ReferenceSet.bundled()
    assert len(refs.networks) == 8
    assert fit_er_p(refs.densities) == pytest.approx(0.1974, abs=1e-4)
    assert fit_ba_m(50, refs.mean_density) == 5
    assert fit_ws_k(50, refs.mean_density) == 10


def test_fit_ws_grid_and_determinism():
    # a coarse grid keeps this quick; exact-clustering targets pick their own p
    grid = (0.0, 0.5, 1.0)
    k, p = fit_ws(50, 0.2, 0.667, trials_per_p=3, seed=0, grid=grid)
    assert (k, p) == (10, 0.0)
    assert fit_ws(50, 0.2, 0.3, trials_per_p=3, seed=1, grid=grid) == fit_ws(
        50, 0.2, 0.3, trials_per_p=3, seed=1, grid=grid)
