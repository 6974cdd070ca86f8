"""Seed sets and the strategies that pick them (random, degree, eigen)."""

from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from ._rng import stream
from .exceptions import ConfigurationError
from .validation import check_budget, check_graph, check_node_ids, check_seed

SEED_STRATEGIES = ("random", "degree", "eigen")

# Scores equal to this relative precision are ties and fall back to node id.
_TIE_DECIMALS = 10


@dataclass(frozen=True)
class SeedSet:
    ids: Tuple[int, ...]
    budget: int

    def __post_init__(self):
        ids = tuple(sorted(int(v) for v in self.ids))
        if len(set(ids)) != len(ids):
            raise ValueError(f"seed ids must be unique, got {ids}")
        if len(ids) != self.budget:
            raise ValueError(f"seed set has {len(ids)} ids but budget {self.budget}")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def of(cls, graph, ids):
        ids = check_node_ids(graph, ids, "seeds", allow_empty=False)
        return cls(ids, len(ids))

    def __iter__(self):
        return iter(self.ids)

    def __len__(self):
        return len(self.ids)

    def __contains__(self, v):
        return v in self.ids


def rank_nodes(scores, exclude=()):
    """Node ids by descending score, lower id first among ties.

    Scores are compared after rounding to ``_TIE_DECIMALS`` significant
    digits relative to the largest magnitude, so floating-point noise
    between structurally equivalent nodes does not break ties.
    """
    scores = np.asarray(scores, dtype=np.float64)
    scale = np.abs(scores).max() if scores.size else 0.0
    key = np.round(scores / scale, _TIE_DECIMALS) if scale > 0 else np.zeros_like(scores)
    order = np.argsort(-key, kind="stable")
    if len(exclude):
        order = order[~np.isin(order, np.asarray(list(exclude), dtype=np.int64))]
    return order


def top_k(scores, k, exclude=()):
    return tuple(sorted(rank_nodes(scores, exclude)[:k].tolist()))


class EigenResult(NamedTuple):
    scores: np.ndarray
    converged: bool
    iterations: int


def eigen_centrality(graph, tolerance=1e-10, max_iterations=1000):
    """Dominant adjacency eigenvector by power iteration, max-normalised.

    Iterates ``x <- (A + I) x`` from the uniform vector; the shift leaves
    the eigenvectors unchanged but keeps bipartite graphs from
    oscillating. On a graph without edges the uniform vector is returned
    with ``converged=False``.
    """
    graph = check_graph(graph)
    if graph.node_count == 0:
        raise ValueError("eigen_centrality needs a non-empty graph")
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    n = graph.node_count
    x = np.ones(n)
    if graph.arc_count == 0:
        return EigenResult(x, False, 0)
    a = graph.to_csr()
    for it in range(1, max_iterations + 1):
        y = a @ x + x
        y /= np.abs(y).max()
        if np.abs(y - x).max() < tolerance:
            return EigenResult(y, True, it)
        x = y
    return EigenResult(x, False, max_iterations)


def degree_scores(graph):
    return graph.degree.astype(np.float64)


def select_seeds(graph, strategy, budget, rng_seed=0):
    """Pick ``budget`` seeds with ``random``, ``degree`` or ``eigen``."""
    graph = check_graph(graph)
    budget = check_budget(budget, graph.node_count)
    if strategy == "random":
        ids = stream(check_seed(rng_seed)).choice(graph.node_count, size=budget, replace=False)
        return SeedSet(tuple(int(v) for v in ids), budget)
    if strategy == "degree":
        return SeedSet(top_k(degree_scores(graph), budget), budget)
    if strategy == "eigen":
        return SeedSet(top_k(eigen_centrality(graph).scores, budget), budget)
    raise ConfigurationError(f"unknown seed strategy {strategy!r}; expected one of {SEED_STRATEGIES}")
