"""Influence maximisation: simulation-, sketch- and proxy-based solvers."""

import heapq
import time
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import stream
from .diffusion import CHUNK, ExactSpreadOracle, _Draws, expected_spread, ic, propagate
from .exceptions import ConfigurationError, UnsupportedModelError
from .seeding import SeedSet, degree_scores, eigen_centrality, rank_nodes
from .validation import check_budget, check_graph, check_positive_int, check_seed

IM_METHODS = ("greedy", "celf", "celfpp", "ris", "degree", "eigen", "pi", "sigma")
PROXIES = ("degree", "eigen", "pi", "sigma")
DEFAULT_SIMS_PER_EVAL = 100
DEFAULT_RR_SETS = 10_000
DEFAULT_BETA_HAT = 0.1
DEFAULT_HORIZON = 5


@dataclass(frozen=True)
class ImResult:
    """Selected seeds plus per-pick gains in selection order (``picks``)."""

    seeds: SeedSet
    marginal_gains: Tuple[float, ...]
    wall_time: float
    evaluations: int = 0
    picks: Tuple[int, ...] = ()


class _GainEvaluator:
    """Marginal gain ``sigma(S + v) - sigma(S)`` by oracle or by simulation.

    In simulation mode the gain for candidate ``v`` on top of a set of
    size ``r`` uses the stream ``(rng_seed, r, v)`` for both terms, so
    the two spreads share their random numbers and the gain is
    non-negative for the progressive models.
    """

    def __init__(self, graph, config, sims, rng_seed, oracle=None):
        self.graph = graph
        self.config = config
        self.sims = sims
        self.rng_seed = rng_seed
        self.oracle = oracle
        self.evaluations = 0

    def gain(self, base, v):
        self.evaluations += 1
        with_v = tuple(sorted(base + (v,)))
        if self.oracle is not None:
            return self.oracle(with_v) - (self.oracle(base) if base else 0.0)
        draws = _Draws(self.graph, self.config, self.sims, stream(self.rng_seed, len(base), v), cache=True)
        n = self.graph.node_count
        mask = np.zeros(n, dtype=bool)
        mask[list(with_v)] = True
        state, _, _ = propagate(self.graph, self.config, draws, mask)
        total = np.count_nonzero(state) / self.sims
        if not base:
            return float(total)
        mask[v] = False
        state, _, _ = propagate(self.graph, self.config, draws, mask)
        return float(total - np.count_nonzero(state) / self.sims)


def _resolve_oracle(graph, config, oracle):
    if oracle == "exact":
        return ExactSpreadOracle(graph, config)
    return oracle


def greedy_im(graph, config, budget, sims_per_eval=DEFAULT_SIMS_PER_EVAL, rng_seed=0, oracle=None):
    """Simulation-based greedy hill climbing.

    Each round adds the node with the largest estimated marginal gain,
    lower id first on ties. ``oracle`` may be ``"exact"`` or any callable
    mapping a seed tuple to an expected spread, replacing simulation.
    """
    graph = check_graph(graph)
    budget = check_budget(budget, graph.node_count)
    sims_per_eval = check_positive_int(sims_per_eval, "sims_per_eval")
    evaluator = _GainEvaluator(graph, config, sims_per_eval, check_seed(rng_seed), _resolve_oracle(graph, config, oracle))
    start = time.perf_counter()
    picks, gains = [], []
    chosen = np.zeros(graph.node_count, dtype=bool)
    for _ in range(budget):
        base = tuple(sorted(picks))
        best, best_gain = -1, -np.inf
        for v in np.flatnonzero(~chosen).tolist():
            g = evaluator.gain(base, v)
            if g > best_gain:
                best, best_gain = v, g
        picks.append(best)
        gains.append(best_gain)
        chosen[best] = True
    return ImResult(SeedSet(tuple(picks), budget), tuple(gains), time.perf_counter() - start, evaluator.evaluations, tuple(picks))


def celf_im(graph, config, budget, sims_per_eval=DEFAULT_SIMS_PER_EVAL, rng_seed=0, lookahead=False, oracle=None):
    """Lazy greedy (CELF); ``lookahead=True`` gives CELF++.

    A max-heap keyed on (gain, -id) holds possibly stale gains, which
    bound the current gains by submodularity; only the top entry is
    recomputed. With lookahead each recomputation also stores the gain
    conditioned on the round's current best candidate, which is reused
    without re-evaluation if that candidate is picked next.
    """
    graph = check_graph(graph)
    budget = check_budget(budget, graph.node_count)
    sims_per_eval = check_positive_int(sims_per_eval, "sims_per_eval")
    evaluator = _GainEvaluator(graph, config, sims_per_eval, check_seed(rng_seed), _resolve_oracle(graph, config, oracle))
    start = time.perf_counter()
    picks, gains = [], []
    mg1, mg2, prev_best, flag = {}, {}, {}, {}
    cur_best = None

    def better(u, w):
        return w is None or mg1[u] > mg1[w] or (mg1[u] == mg1[w] and u < w)

    def refresh(u, base):
        nonlocal cur_best
        mg1[u] = evaluator.gain(base, u)
        flag[u] = len(base)
        if lookahead:
            prev_best[u] = cur_best
            if cur_best is not None and cur_best != u:
                mg2[u] = evaluator.gain(tuple(sorted(base + (cur_best,))), u)
            else:
                mg2[u] = mg1[u]
        if better(u, cur_best):
            cur_best = u

    heap = []
    for u in range(graph.node_count):
        refresh(u, ())
        heap.append((-mg1[u], u))
    heapq.heapify(heap)
    last_seed = None
    while len(picks) < budget:
        _, u = heapq.heappop(heap)
        base = tuple(sorted(picks))
        if flag[u] == len(picks):
            picks.append(u)
            gains.append(mg1[u])
            last_seed = u
            cur_best = None
            continue
        if lookahead and prev_best.get(u) is not None and prev_best[u] == last_seed and flag[u] == len(picks) - 1:
            mg1[u] = mg2[u]
            flag[u] = len(picks)
            if better(u, cur_best):
                cur_best = u
        else:
            refresh(u, base)
        heapq.heappush(heap, (-mg1[u], u))
    return ImResult(SeedSet(tuple(picks), budget), tuple(gains), time.perf_counter() - start, evaluator.evaluations, tuple(picks))


def sketch_probability(config):
    """Per-arc liveness used for reverse-reachable sketches.

    SI within ``max_steps`` is treated as IC with the probability that an
    arc transmits at least once in that many steps.
    """
    if config.kind == "IC":
        return config.p
    if config.kind == "SI":
        return 1.0 - (1.0 - config.beta) ** config.max_steps
    raise UnsupportedModelError(f"RIS supports IC and SI, got {config.kind}")


def rr_sets(graph, config, num_rr_sets, rng_seed=0):
    """Sample reverse-reachable sets as a sparse ``(num_rr_sets, n)`` 0/1 matrix.

    Each set is rooted at a uniform node and grown by reverse BFS over
    arcs that are live with :func:`sketch_probability`, up to
    ``max_steps`` hops.
    """
    graph = check_graph(graph)
    num_rr_sets = check_positive_int(num_rr_sets, "num_rr_sets")
    rng_seed = check_seed(rng_seed)
    reversed_graph = graph.reverse()
    live_cfg = ic(sketch_probability(config), max_steps=config.max_steps)
    n = graph.node_count
    roots = stream(rng_seed, 0).integers(n, size=num_rr_sets)
    rows, cols = [], []
    for chunk, start in enumerate(range(0, num_rr_sets, CHUNK)):
        size = min(CHUNK, num_rr_sets - start)
        seed_mask = np.zeros((CHUNK, n), dtype=bool)
        seed_mask[np.arange(size), roots[start:start + size]] = True
        draws = _Draws(reversed_graph, live_cfg, CHUNK, stream(rng_seed, 1, chunk))
        state, _, _ = propagate(reversed_graph, live_cfg, draws, seed_mask)
        r, c = np.nonzero(state[:size])
        rows.append(r + start)
        cols.append(c)
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    return sp.csr_array((np.ones(rows.size, dtype=np.int64), (rows, cols)), shape=(num_rr_sets, n))


def ris_im(graph, config, budget, num_rr_sets=DEFAULT_RR_SETS, rng_seed=0):
    """Reverse influence sampling followed by greedy maximum coverage."""
    graph = check_graph(graph)
    budget = check_budget(budget, graph.node_count)
    sketch_probability(config)
    start = time.perf_counter()
    members = rr_sets(graph, config, num_rr_sets, rng_seed)
    by_node = members.tocsc()
    counts = np.asarray(members.sum(axis=0)).ravel().astype(np.int64)
    covered = np.zeros(num_rr_sets, dtype=bool)
    chosen = np.zeros(graph.node_count, dtype=bool)
    picks, gains = [], []
    n = graph.node_count
    for _ in range(budget):
        masked = np.where(chosen, -1, counts)
        v = int(np.argmax(masked))
        hit = by_node.indices[by_node.indptr[v]:by_node.indptr[v + 1]]
        new_rows = hit[~covered[hit]]
        covered[new_rows] = True
        if new_rows.size:
            counts -= np.asarray(members[new_rows].sum(axis=0)).ravel().astype(np.int64)
        picks.append(v)
        gains.append(new_rows.size / num_rr_sets * n)
        chosen[v] = True
    return ImResult(SeedSet(tuple(picks), budget), tuple(gains), time.perf_counter() - start, 0, tuple(picks))


def proxy_scores(graph, proxy, beta_hat=DEFAULT_BETA_HAT, horizon=DEFAULT_HORIZON):
    """Closed-form influence proxies.

    ``sigma`` is the truncated power series ``sum_{t=1..horizon} (beta_hat A)^t 1``
    computed by repeated products; ``pi`` adds to each node's sigma score
    ``beta_hat`` times the sigma scores of its neighbours.
    """
    graph = check_graph(graph)
    if proxy == "degree":
        return degree_scores(graph)
    if proxy == "eigen":
        return eigen_centrality(graph).scores
    if proxy not in ("pi", "sigma"):
        raise ConfigurationError(f"unknown proxy {proxy!r}; expected one of {PROXIES}")
    beta_hat = float(beta_hat)
    if not 0.0 < beta_hat <= 1.0:
        raise ValueError(f"beta_hat must lie in (0, 1], got {beta_hat}")
    horizon = check_positive_int(horizon, "horizon")
    a = graph.to_csr()
    x = np.ones(graph.node_count)
    total = np.zeros(graph.node_count)
    for _ in range(horizon):
        x = beta_hat * (a @ x)
        total += x
    if proxy == "sigma":
        return total
    return total + beta_hat * (a @ total)


def proxy_im(graph, proxy, budget, beta_hat=DEFAULT_BETA_HAT, horizon=DEFAULT_HORIZON):
    """Top-``budget`` nodes by proxy score."""
    graph = check_graph(graph)
    budget = check_budget(budget, graph.node_count)
    start = time.perf_counter()
    scores = proxy_scores(graph, proxy, beta_hat, horizon)
    picks = rank_nodes(scores)[:budget].tolist()
    gains = tuple(float(scores[v]) for v in picks)
    return ImResult(SeedSet(tuple(picks), budget), gains, time.perf_counter() - start, 0, tuple(picks))


def solve_im(method, graph, config, budget, rng_seed=0, **params):
    """Dispatch by method name (the CLI/config vocabulary)."""
    if method == "greedy":
        return greedy_im(graph, config, budget, rng_seed=rng_seed, **params)
    if method in ("celf", "celfpp"):
        return celf_im(graph, config, budget, rng_seed=rng_seed, lookahead=method == "celfpp", **params)
    if method == "ris":
        return ris_im(graph, config, budget, rng_seed=rng_seed, **params)
    if method in PROXIES:
        return proxy_im(graph, method, budget, **params)
    raise ConfigurationError(f"unknown IM method {method!r}; expected one of {IM_METHODS}")


class _InfluenceMaximizer(BaseEstimator):
    """Shared fit/score plumbing; subclasses implement ``_solve``."""

    def fit(self, graph, y=None):
        graph = check_graph(graph)
        self.result_ = self._solve(graph)
        self.seeds_ = np.asarray(self.result_.seeds.ids)
        self.marginal_gains_ = np.asarray(self.result_.marginal_gains)
        self.n_nodes_in_ = graph.node_count
        return self

    def fit_predict(self, graph, y=None):
        return self.fit(graph).seeds_

    def score(self, graph, y=None, runs=1000, rng_seed=0):
        """Monte Carlo expected spread of the fitted seeds on ``graph``."""
        check_is_fitted(self, "seeds_")
        config = getattr(self, "diffusion", None) or ic()
        return expected_spread(check_graph(graph), config, self.seeds_.tolist(), runs, rng_seed).mean


class GreedyIM(_InfluenceMaximizer):
    def __init__(self, diffusion=None, budget=5, sims_per_eval=DEFAULT_SIMS_PER_EVAL, random_state=0, oracle=None):
        self.diffusion = diffusion
        self.budget = budget
        self.sims_per_eval = sims_per_eval
        self.random_state = random_state
        self.oracle = oracle

    def _solve(self, graph):
        return greedy_im(graph, self.diffusion or ic(), self.budget, self.sims_per_eval, self.random_state, self.oracle)


class CELFIM(_InfluenceMaximizer):
    """Lazy greedy; set ``lookahead=True`` for CELF++."""

    def __init__(self, diffusion=None, budget=5, sims_per_eval=DEFAULT_SIMS_PER_EVAL, random_state=0, lookahead=False, oracle=None):
        self.diffusion = diffusion
        self.budget = budget
        self.sims_per_eval = sims_per_eval
        self.random_state = random_state
        self.lookahead = lookahead
        self.oracle = oracle

    def _solve(self, graph):
        return celf_im(graph, self.diffusion or ic(), self.budget, self.sims_per_eval, self.random_state, self.lookahead, self.oracle)


class RISIM(_InfluenceMaximizer):
    def __init__(self, diffusion=None, budget=5, num_rr_sets=DEFAULT_RR_SETS, random_state=0):
        self.diffusion = diffusion
        self.budget = budget
        self.num_rr_sets = num_rr_sets
        self.random_state = random_state

    def _solve(self, graph):
        return ris_im(graph, self.diffusion or ic(), self.budget, self.num_rr_sets, self.random_state)


class ProxyIM(_InfluenceMaximizer):
    def __init__(self, proxy="degree", budget=5, beta_hat=DEFAULT_BETA_HAT, horizon=DEFAULT_HORIZON):
        self.proxy = proxy
        self.budget = budget
        self.beta_hat = beta_hat
        self.horizon = horizon

    def _solve(self, graph):
        return proxy_im(graph, self.proxy, self.budget, self.beta_hat, self.horizon)
