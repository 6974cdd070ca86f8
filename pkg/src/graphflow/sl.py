"""Multi-source localisation from a snapshot of the activated subgraph."""

import itertools
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.sparse.csgraph import shortest_path
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import child_seed
from .diffusion import simulate
from .exceptions import CapacityError, ConfigurationError, DegenerateError
from .graph import bfs_distances
from .seeding import rank_nodes, select_seeds
from .validation import check_graph, check_node_ids, check_positive_int, check_seed

SL_METHODS = ("jordan", "netsleuth")
MAX_MATCHING = 6
_DENSE_LIMIT = 2000
_EIG_TOL = 1e-9


@dataclass(frozen=True)
class Observation:
    infected: Tuple[int, ...]
    snapshot_step: Optional[int] = None

    def __post_init__(self):
        infected = tuple(sorted({int(v) for v in self.infected}))
        if not infected:
            raise ValueError("observation needs at least one infected node")
        object.__setattr__(self, "infected", infected)


@dataclass(frozen=True)
class SlResult:
    """Predicted sources plus a per-node score (higher = more source-like)."""

    predicted: Tuple[int, ...]
    scores: np.ndarray
    degenerate: bool = False


def _check_observation(graph, obs, num_sources):
    infected = obs.infected if isinstance(obs, Observation) else obs
    infected = check_node_ids(graph, infected, "infected", allow_empty=False)
    num_sources = check_positive_int(num_sources, "num_sources")
    if num_sources > len(infected):
        raise ValueError(f"num_sources {num_sources} exceeds the {len(infected)} infected nodes")
    return np.asarray(infected, dtype=np.int64), num_sources


def induced_distances(graph, nodes):
    """All-pairs hop distances inside the subgraph induced by ``nodes`` (inf if unreachable)."""
    sub = graph.to_csr()[nodes][:, nodes]
    return shortest_path(sub, method="D", directed=graph.directed, unweighted=True)


def _farthest_point_cells(dist, num_cells):
    anchors = [0]
    nearest = dist[0].copy()
    for _ in range(num_cells - 1):
        nearest[anchors] = -1.0
        nxt = int(np.argmax(nearest))
        anchors.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    anchors.sort()
    owner = np.argmin(dist[anchors], axis=0)
    return [np.flatnonzero(owner == i) for i in range(len(anchors))]


def jordan_center(graph, obs, num_sources=1):
    """Jordan centre(s) of the infected subgraph.

    One source: the infected node with the smallest eccentricity inside
    the induced subgraph. Several: infected nodes are split into cells by
    farthest-point anchors (starting at the lowest id) and nearest-anchor
    assignment, and each cell contributes its own Jordan centre. Nodes
    that cannot reach every member of their cell are not candidates.
    """
    graph = check_graph(graph)
    infected, num_sources = _check_observation(graph, obs, num_sources)
    dist = induced_distances(graph, infected)
    cells = [np.arange(infected.size)] if num_sources == 1 else _farthest_point_cells(dist, num_sources)
    scores = np.zeros(graph.node_count)
    predicted = []
    for cell in cells:
        ecc = dist[np.ix_(cell, cell)].max(axis=1)
        finite = np.isfinite(ecc)
        if not finite.any():
            raise DegenerateError("no node in the cell reaches every other member")
        scores[infected[cell[finite]]] = 1.0 / (1.0 + ecc[finite])
        best = cell[finite][np.argmin(ecc[finite])]
        predicted.append(int(infected[best]))
    return SlResult(tuple(sorted(predicted)), scores)


def _smallest_eigenpair(mat):
    if mat.shape[0] <= _DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(mat.toarray(), subset_by_index=[0, min(1, mat.shape[0] - 1)])
        return vals, vecs[:, 0]
    vals, vecs = scipy.sparse.linalg.eigsh(mat.tocsc(), k=2, sigma=-1e-3, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order[0]]


def netsleuth(graph, obs, num_sources=1):
    """Rank infected nodes by the smallest eigenvector of the infected Laplacian block.

    The block is the principal submatrix of the full-graph Laplacian
    ``D - A`` on the infected nodes. After each pick the chosen node is
    deleted from the block and the eigenvector recomputed. When the
    smallest eigenvalue is repeated, or is zero (the infected set then
    covers a whole component and the eigenvector is flat), ranking falls
    back to degree inside the infected subgraph and ``degenerate`` is set.
    """
    graph = check_graph(graph)
    infected, num_sources = _check_observation(graph, obs, num_sources)
    a = graph.to_csr()
    degree = graph.degree.astype(np.float64)
    remaining = infected.copy()
    picks = []
    degenerate = False
    scores = np.zeros(graph.node_count)
    for round_ in range(num_sources):
        block = a[remaining][:, remaining]
        lap = scipy.sparse.diags(degree[remaining]) - block
        if remaining.size == 1:
            local = np.ones(1)
            flat = False
        else:
            vals, vec = _smallest_eigenpair(lap)
            scale = max(1.0, abs(vals[-1]))
            flat = abs(vals[0]) <= _EIG_TOL * scale or (vals[1] - vals[0]) <= _EIG_TOL * scale
            local = np.abs(vec)
        if flat:
            degenerate = True
            local = np.asarray(block.sum(axis=1)).ravel()
        if round_ == 0:
            scores[remaining] = local
        v = int(remaining[rank_nodes(local)[0]])
        picks.append(v)
        remaining = remaining[remaining != v]
    return SlResult(tuple(sorted(picks)), scores, degenerate)


def locate(method, graph, obs, num_sources):
    if method == "jordan":
        return jordan_center(graph, obs, num_sources)
    if method == "netsleuth":
        return netsleuth(graph, obs, num_sources)
    raise ConfigurationError(f"unknown SL method {method!r}; expected one of {SL_METHODS}")


def source_distance(graph, predicted, truth):
    """Minimum total hop distance over bijections ``predicted -> truth``.

    Unreachable pairs cost ``node_count``. Exact by enumerating all
    matchings, so both sets are limited to six nodes.
    """
    graph = check_graph(graph)
    predicted = check_node_ids(graph, getattr(predicted, "ids", predicted), "predicted")
    truth = check_node_ids(graph, getattr(truth, "ids", truth), "truth")
    if len(predicted) != len(truth):
        raise ValueError(f"size mismatch: {len(predicted)} predicted vs {len(truth)} true sources")
    if len(predicted) > MAX_MATCHING:
        raise CapacityError(f"exact matching supports at most {MAX_MATCHING} sources")
    if not predicted:
        return 0.0
    cost = np.array([bfs_distances(graph, u)[list(truth)] for u in predicted])
    cost[np.isinf(cost)] = graph.node_count
    rows = np.arange(len(predicted))
    return float(min(cost[rows, list(perm)].sum() for perm in itertools.permutations(range(len(truth)))))


def plant_cascade(graph, config, num_sources, rng_seed=0, strategy="random"):
    """Draw sources, run the diffusion for ``config.max_steps`` steps, observe.

    Returns ``(truth, observation)``; the observation holds every node
    that is active or recovered at the snapshot.
    """
    graph = check_graph(graph)
    rng_seed = check_seed(rng_seed)
    truth = select_seeds(graph, strategy, num_sources, child_seed(rng_seed, 0))
    trace = simulate(graph, config, truth, child_seed(rng_seed, 1))
    return truth, Observation(trace.activated, config.max_steps)


class _Locator(BaseEstimator):
    """``fit(graph)`` binds the graph; ``predict(infected)`` returns source ids."""

    def fit(self, graph, y=None):
        self.graph_ = check_graph(graph)
        return self

    def predict(self, infected):
        check_is_fitted(self, "graph_")
        self.result_ = self._locate(self.graph_, infected)
        return np.asarray(self.result_.predicted)

    def score(self, infected, truth):
        """Negative source distance, so that larger is better."""
        return -source_distance(self.graph_, self.predict(infected).tolist(), truth)


class JordanCenter(_Locator):
    def __init__(self, num_sources=1):
        self.num_sources = num_sources

    def _locate(self, graph, infected):
        return jordan_center(graph, infected, self.num_sources)


class NetSleuth(_Locator):
    def __init__(self, num_sources=1):
        self.num_sources = num_sources

    def _locate(self, graph, infected):
        return netsleuth(graph, infected, self.num_sources)
