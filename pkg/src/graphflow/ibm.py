"""Influence blocking by node removal against a known seed set."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._rng import stream
from .diffusion import SpreadEstimate, _Draws, propagate, seed_ids, spread_samples, summarize
from .exceptions import ConfigurationError
from .im import DEFAULT_BETA_HAT, DEFAULT_HORIZON, DEFAULT_SIMS_PER_EVAL, PROXIES, proxy_scores
from .seeding import rank_nodes
from .validation import check_graph, check_node_ids, check_positive_int, check_seed

IBM_METHODS = ("greedy",) + PROXIES


@dataclass(frozen=True)
class BlockSet:
    """Nodes to remove. ``protected`` records the seeds they must avoid."""

    removed_nodes: Tuple[int, ...]
    budget: int
    protected: Tuple[int, ...] = ()

    def __post_init__(self):
        removed = tuple(sorted(int(v) for v in self.removed_nodes))
        object.__setattr__(self, "removed_nodes", removed)
        object.__setattr__(self, "protected", tuple(sorted(int(v) for v in self.protected)))
        if len(set(removed)) != len(removed):
            raise ValueError(f"removed nodes must be unique, got {removed}")
        if len(removed) != self.budget:
            raise ValueError(f"block set has {len(removed)} nodes but budget {self.budget}")
        overlap = set(removed) & set(self.protected)
        if overlap:
            raise ValueError(f"cannot block seed node(s) {sorted(overlap)}")


@dataclass(frozen=True)
class BlockingEffect:
    baseline: SpreadEstimate
    blocked: SpreadEstimate

    @property
    def effect(self):
        return self.baseline.mean - self.blocked.mean


def _mask(graph, nodes):
    m = np.zeros(graph.node_count, dtype=bool)
    m[list(nodes)] = True
    return m


def apply_block(graph, block):
    """Return ``G - block``: blocked nodes lose every incident arc but keep their ids."""
    graph = check_graph(graph)
    removed = getattr(block, "removed_nodes", block)
    removed = check_node_ids(graph, removed, "blocked nodes")
    if not removed:
        return graph
    gone = _mask(graph, removed)
    src, dst = graph.arcs
    keep = ~(gone[src] | gone[dst])
    return type(graph).from_edges(graph.node_count, np.column_stack([src[keep], dst[keep]]), graph.directed)


def _check_block_budget(graph, seeds, budget):
    budget = check_positive_int(budget, "budget")
    if budget > graph.node_count - len(seeds):
        raise ValueError(f"budget {budget} exceeds the {graph.node_count - len(seeds)} non-seed nodes")
    return budget


def greedy_block(graph, config, seeds, budget, sims_per_eval=DEFAULT_SIMS_PER_EVAL, rng_seed=0):
    """Remove, one at a time, the non-seed node that most reduces simulated spread.

    Round ``r`` evaluates every candidate on one shared sample drawn from
    stream ``(rng_seed, r)``. Under that coupling a node that is never
    reached in the sample cannot change the spread, so only reached nodes
    are simulated (except for LT, where removal reweights neighbours).
    Ties, including the no-improvement case, go to the lower id.
    """
    graph = check_graph(graph)
    ids = seed_ids(graph, seeds)
    budget = _check_block_budget(graph, ids, budget)
    sims = check_positive_int(sims_per_eval, "sims_per_eval")
    rng_seed = check_seed(rng_seed)
    seed_mask = _mask(graph, ids)
    blocked = np.zeros(graph.node_count, dtype=bool)
    for r in range(budget):
        draws = _Draws(graph, config, sims, stream(rng_seed, r), cache=True)
        state, _, _ = propagate(graph, config, draws, seed_mask, blocked=blocked)
        current = np.count_nonzero(state)
        eligible = ~(seed_mask | blocked)
        totals = np.where(eligible, current, np.iinfo(np.int64).max).astype(np.int64)
        if config.kind == "LT":
            candidates = np.flatnonzero(eligible)
        else:
            candidates = np.flatnonzero(eligible & (state != 0).any(axis=0))
        for v in candidates.tolist():
            blocked[v] = True
            trial, _, _ = propagate(graph, config, draws, seed_mask, blocked=blocked)
            blocked[v] = False
            totals[v] = np.count_nonzero(trial)
        blocked[int(np.argmin(totals))] = True
    return BlockSet(tuple(np.flatnonzero(blocked).tolist()), budget, ids)


def greedy_block_random_seeds(graph, config, budget, num_seeds=1, sims_per_eval=DEFAULT_SIMS_PER_EVAL, rng_seed=0):
    """Unknown-seed variant: minimise spread averaged over random seed draws.

    Every simulated run starts from its own ``num_seeds`` uniform seeds,
    so the selection weakens connectivity in general rather than against
    one seed set. Not used by the experiment runner.
    """
    graph = check_graph(graph)
    budget = _check_block_budget(graph, (), budget)
    sims = check_positive_int(sims_per_eval, "sims_per_eval")
    rng_seed = check_seed(rng_seed)
    n = graph.node_count
    blocked = np.zeros(n, dtype=bool)
    for r in range(budget):
        gen = stream(rng_seed, r, 0)
        seed_mask = np.zeros((sims, n), dtype=bool)
        for i in range(sims):
            seed_mask[i, gen.choice(n, size=num_seeds, replace=False)] = True
        draws = _Draws(graph, config, sims, stream(rng_seed, r, 1), cache=True)
        totals = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
        for v in np.flatnonzero(~blocked).tolist():
            blocked[v] = True
            state, _, _ = propagate(graph, config, draws, seed_mask & ~blocked, blocked=blocked)
            blocked[v] = False
            totals[v] = np.count_nonzero(state)
        blocked[int(np.argmin(totals))] = True
    return BlockSet(tuple(np.flatnonzero(blocked).tolist()), budget)


def proxy_block(graph, proxy, seeds, budget, beta_hat=DEFAULT_BETA_HAT, horizon=DEFAULT_HORIZON):
    """Remove the top-``budget`` non-seed nodes by proxy score on the original graph."""
    graph = check_graph(graph)
    ids = seed_ids(graph, seeds)
    budget = _check_block_budget(graph, ids, budget)
    scores = proxy_scores(graph, proxy, beta_hat, horizon)
    picks = rank_nodes(scores, exclude=ids)[:budget]
    return BlockSet(tuple(picks.tolist()), budget, ids)


def solve_ibm(method, graph, config, seeds, budget, rng_seed=0, **params):
    if method == "greedy":
        return greedy_block(graph, config, seeds, budget, rng_seed=rng_seed, **params)
    if method in PROXIES:
        return proxy_block(graph, method, seeds, budget, **params)
    raise ConfigurationError(f"unknown IBM method {method!r}; expected one of {IBM_METHODS}")


def blocking_effect(graph, config, seeds, block, runs=1000, rng_seed=0):
    """Spread without and with the block, paired on identical random streams.

    The effect is ``baseline.mean - blocked.mean`` and can be negative
    for a poor blocker under a non-monotone model.
    """
    graph = check_graph(graph)
    removed = check_node_ids(graph, getattr(block, "removed_nodes", block), "blocked nodes")
    base = spread_samples(graph, config, seeds, runs, rng_seed)
    cut = spread_samples(graph, config, seeds, runs, rng_seed, blocked=_mask(graph, removed))
    return BlockingEffect(summarize(base), summarize(cut))


class _Blocker(TransformerMixin, BaseEstimator):
    """``fit(graph, seeds)`` learns ``block_``; ``transform(graph)`` returns the blocked graph."""

    def fit(self, graph, seeds=None):
        if seeds is None:
            raise ValueError("blocking needs the known seed set: fit(graph, seeds)")
        graph = check_graph(graph)
        self.block_ = self._solve(graph, seeds)
        self.removed_nodes_ = np.asarray(self.block_.removed_nodes)
        return self

    def transform(self, graph):
        check_is_fitted(self, "block_")
        return apply_block(check_graph(graph), self.block_)

    def effect(self, graph, seeds, diffusion, runs=1000, rng_seed=0):
        check_is_fitted(self, "block_")
        return blocking_effect(graph, diffusion, seeds, self.block_, runs, rng_seed).effect


class GreedyBlocker(_Blocker):
    def __init__(self, diffusion=None, budget=5, sims_per_eval=DEFAULT_SIMS_PER_EVAL, random_state=0):
        self.diffusion = diffusion
        self.budget = budget
        self.sims_per_eval = sims_per_eval
        self.random_state = random_state

    def _solve(self, graph, seeds):
        if self.diffusion is None:
            raise ValueError("GreedyBlocker needs a diffusion config")
        return greedy_block(graph, self.diffusion, seeds, self.budget, self.sims_per_eval, self.random_state)


class ProxyBlocker(_Blocker):
    def __init__(self, proxy="degree", budget=5, beta_hat=DEFAULT_BETA_HAT, horizon=DEFAULT_HORIZON):
        self.proxy = proxy
        self.budget = budget
        self.beta_hat = beta_hat
        self.horizon = horizon

    def _solve(self, graph, seeds):
        return proxy_block(graph, self.proxy, seeds, self.budget, self.beta_hat, self.horizon)
