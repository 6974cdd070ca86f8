import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphflow import ConfigurationError, Graph, GraphGenSpec, SeedSet, eigen_centrality, generate, select_seeds
from graphflow.seeding import rank_nodes

from helpers import complete, path, small_graphs, star


def test_degree_examples():
    assert select_seeds(star(3), "degree", 1).ids == (0,)
    assert select_seeds(path(3), "degree", 2).ids == (0, 1)


def test_random_exhaustive_and_replayable():
    g = path(7)
    assert select_seeds(g, "random", 7, 5).ids == tuple(range(7))
    big = generate(GraphGenSpec("er", 100, p=0.05), 0)
    assert select_seeds(big, "random", 5, 8) == select_seeds(big, "random", 5, 8)


@pytest.mark.parametrize("budget", [0, 4, -1])
def test_budget_out_of_range(budget):
    with pytest.raises(ValueError):
        select_seeds(path(3), "degree", budget)


def test_unknown_strategy():
    with pytest.raises(ConfigurationError):
        select_seeds(path(3), "pagerank", 1)


def test_seed_set_invariants():
    assert SeedSet((3, 1), 2).ids == (1, 3)
    with pytest.raises(ValueError):
        SeedSet((1, 1), 2)
    with pytest.raises(ValueError):
        SeedSet((1,), 2)


def test_eigen_symmetric_k3():
    res = eigen_centrality(complete(3))
    assert res.converged
    np.testing.assert_allclose(res.scores, 1.0)


def test_eigen_star_ratio():
    scores = eigen_centrality(star(4)).scores
    assert scores[0] == pytest.approx(1.0)
    np.testing.assert_allclose(scores[1:], 0.5, rtol=1e-8)


def test_eigen_edgeless_is_flagged():
    res = eigen_centrality(Graph.from_edges(3, []))
    assert not res.converged
    np.testing.assert_array_equal(res.scores, 1.0)


def test_eigen_bipartite_converges():
    res = eigen_centrality(path(6))
    assert res.converged


def test_eigen_matches_networkx_on_connected_graph():
    g = generate(GraphGenSpec("ws", 60), 3)
    ref = nx.eigenvector_centrality_numpy(g.to_networkx())
    ref = np.array([ref[v] for v in range(60)])
    np.testing.assert_allclose(eigen_centrality(g).scores, ref / ref.max(), rtol=1e-6)


def test_rank_ties_go_to_lower_id():
    assert rank_nodes([1.0, 2.0, 2.0, 1.0 + 1e-15]).tolist() == [1, 2, 0, 3]
    assert rank_nodes([3, 1, 3], exclude=[0]).tolist() == [2, 1]


@given(small_graphs(min_nodes=2, max_nodes=10, connected=True), st.permutations(range(10)))
def test_scores_are_permutation_equivariant(case, perm):
    n, edges = case
    perm = [p for p in perm if p < n]
    g = Graph.from_edges(n, edges)
    h = Graph.from_edges(n, [(perm[u], perm[v]) for u, v in edges])
    np.testing.assert_array_equal(h.degree[perm], g.degree)
    np.testing.assert_allclose(eigen_centrality(h).scores[perm], eigen_centrality(g).scores, atol=1e-8)
