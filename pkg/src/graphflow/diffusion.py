"""Discrete-time diffusion on graphs: IC, LT, SI and SIR.

All models advance in synchronous rounds. The engine simulates a batch of
``R`` independent runs at once as an ``(R, n)`` state matrix; the single
run behind :func:`simulate` is the ``R = 1`` case with frame recording.

Node removal (blocking) is expressed as a mask on the *original* graph
rather than by rebuilding it, so that a blocked and an unblocked run can
consume exactly the same random numbers (common random numbers).
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._rng import stream
from .exceptions import CapacityError, ConfigurationError, UnsupportedModelError
from .validation import check_graph, check_node_ids, check_positive_int, check_probability, check_seed

MODEL_KINDS = ("IC", "LT", "SI", "SIR")
DEFAULT_MAX_STEPS = 100
DEFAULT_IC_P = 0.1

SUSCEPTIBLE, ACTIVE, RECOVERED = 0, 1, 2

# Runs per RNG stream in batched estimation. Run i uses row i % CHUNK of
# the stream derived from (rng_seed, i // CHUNK).
CHUNK = 256


@dataclass(frozen=True)
class DiffusionConfig:
    """A diffusion model and its parameters.

    ``p`` is the IC activation probability (default 0.1), ``beta`` the
    per-contact, per-step infection probability of SI/SIR and ``gamma``
    the SIR per-step recovery probability. ``recover_first`` flips the
    SIR within-step order to recovery before infection.
    """

    kind: str
    p: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    max_steps: int = DEFAULT_MAX_STEPS
    recover_first: bool = False

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown diffusion kind {self.kind!r}; expected one of {MODEL_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "IC" and self.p is None:
            object.__setattr__(self, "p", DEFAULT_IC_P)
        if kind in ("SI", "SIR") and self.beta is None:
            raise ConfigurationError(f"{kind} requires beta")
        if kind == "SIR" and self.gamma is None:
            raise ConfigurationError("SIR requires gamma")
        for name in ("p", "beta", "gamma"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, check_probability(value, name))
        if isinstance(self.max_steps, bool) or not isinstance(self.max_steps, (int, np.integer)) or self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be a positive integer, got {self.max_steps!r}")

    @property
    def transmission(self):
        """Per-arc transmission probability (None for LT)."""
        if self.kind == "IC":
            return self.p
        if self.kind in ("SI", "SIR"):
            return self.beta
        return None

    @property
    def progressive(self):
        return self.kind != "SIR"

    @property
    def label(self):
        if self.kind == "IC":
            params = f"p={self.p:g}"
        elif self.kind == "LT":
            params = ""
        elif self.kind == "SI":
            params = f"beta={self.beta:g}"
        else:
            params = f"beta={self.beta:g};gamma={self.gamma:g}"
            if self.recover_first:
                params += ";recover_first"
        sep = ";" if params else ""
        return f"{self.kind.lower()}({params}{sep}steps={self.max_steps})"


def ic(p=DEFAULT_IC_P, max_steps=DEFAULT_MAX_STEPS):
    return DiffusionConfig("IC", p=p, max_steps=max_steps)


def lt(max_steps=DEFAULT_MAX_STEPS):
    return DiffusionConfig("LT", max_steps=max_steps)


def si(beta, max_steps=DEFAULT_MAX_STEPS):
    return DiffusionConfig("SI", beta=beta, max_steps=max_steps)


def sir(beta, gamma, max_steps=DEFAULT_MAX_STEPS, recover_first=False):
    return DiffusionConfig("SIR", beta=beta, gamma=gamma, max_steps=max_steps, recover_first=recover_first)


@dataclass(frozen=True)
class Trace:
    """Per-step node states of one run.

    ``steps`` is an ``(T + 1, n)`` int8 array; row 0 marks the seeds.
    ``terminated_reason`` is ``"quiescent"`` or ``"step_cap"``.
    """

    steps: np.ndarray
    seed_ids: Tuple[int, ...]
    terminated_reason: str

    @property
    def final_state(self):
        return self.steps[-1]

    @property
    def activated(self):
        """Sorted ids of the activated subgraph (active or recovered at the end)."""
        return tuple(np.flatnonzero(self.final_state != SUSCEPTIBLE).tolist())

    @property
    def spread(self):
        return int(np.count_nonzero(self.final_state))


@dataclass(frozen=True)
class SpreadEstimate:
    mean: float
    std: float
    runs: int
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)


def seed_ids(graph, seeds):
    """Normalise a seed set (SeedSet, iterable or single id) to a sorted id tuple."""
    ids = getattr(seeds, "ids", seeds)
    return check_node_ids(graph, ids, "seeds", allow_empty=False)


# Below this probability, skipping ahead by geometric gaps beats one coin per trial.
_SPARSE_P = 0.2


def bernoulli_positions(rng, total, p):
    """Sorted indices of successes among ``total`` independent Bernoulli(p) trials."""
    if p <= 0.0 or total == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    if p >= _SPARSE_P:
        return np.flatnonzero(rng.random(total) < p)
    chunks, pos = [], -1
    while pos < total - 1:
        mean = (total - 1 - pos) * p
        gaps = rng.geometric(p, int(mean + 6.0 * np.sqrt(mean) + 32))
        chunk = pos + np.cumsum(gaps)
        chunks.append(chunk)
        pos = int(chunk[-1])
    out = np.concatenate(chunks)
    return out[out < total]


class _Draws:
    """Random numbers for a batch of runs, produced step by step.

    Per-step draw shapes depend only on the graph's arc and node counts,
    never on the evolving state, so the t-th step always sees the same
    numbers. Live arcs are kept as flat ``run * n + node`` index pairs so
    a step only touches arcs that can fire. With ``cache=True`` every
    step is kept for reuse across propagations (candidate evaluation
    under common random numbers).
    """

    def __init__(self, graph, config, runs, rng, cache=False, transmission=None):
        self.runs = runs
        self._rng = rng
        self._src, self._dst = graph.arcs
        self._m = graph.arc_count
        self._n = graph.node_count
        self._kind = config.kind
        self._p = config.transmission if transmission is None else transmission
        self._gamma = config.gamma
        self._cache = cache
        self._steps = {}
        self._last = 0
        self.thresholds = None
        self._static = None
        if self._kind == "LT":
            # Thresholds in (0, 1] so a node never activates without an active neighbour.
            self.thresholds = 1.0 - rng.random((runs, self._n))
        elif self._kind == "IC":
            self._static = self._live_arcs()

    def _live_arcs(self):
        pos = bernoulli_positions(self._rng, self.runs * self._m, self._p)
        rows, arcs = np.divmod(pos, self._m) if self._m else (pos, pos)
        offset = rows * self._n
        return offset + self._src[arcs], offset + self._dst[arcs]

    def step(self, t):
        """``(live_arcs, recovery)`` for step ``t`` (1-based)."""
        if self._kind == "IC":
            return self._static, None
        if self._kind == "LT":
            return None, None
        if t in self._steps:
            return self._steps[t]
        if t != self._last + 1:
            raise RuntimeError("uncached draws must be consumed in step order")
        live = self._live_arcs()
        recovery = None
        if self._kind == "SIR":
            recovery = self._rng.random((self.runs, self._n)) < self._gamma
        self._last = t
        if not self._cache:
            self._steps.clear()
        self._steps[t] = (live, recovery)
        return live, recovery


def _lt_weights(graph, allowed):
    src, dst = graph.arcs
    if allowed is None:
        indeg = graph.in_degree
    else:
        indeg = np.bincount(dst[allowed[src]], minlength=graph.node_count)
    with np.errstate(divide="ignore"):
        w = 1.0 / indeg[dst]
    return np.where(np.isfinite(w), w, 0.0)


def _can_change(kind, state, fresh, src, dst, open_):
    """Whether any run can still change state. ``open_`` is (R, n): susceptible and not blocked."""
    if kind == "SIR":
        return bool((state == ACTIVE).any())
    senders = fresh if kind in ("IC", "LT") else state == ACTIVE
    if not senders.any():
        return False
    return bool((senders[:, src] & open_[:, dst]).any())


def propagate(graph, config, draws, seed_mask, blocked=None, record=False):
    """Run the batch to quiescence or the step cap.

    ``seed_mask`` is ``(n,)`` (same seeds for every run) or ``(R, n)``.
    ``blocked`` is an optional ``(n,)`` bool mask of nodes that can never
    activate. Returns ``(final_state, frames, reason)``; ``frames`` is a
    list of per-step state rows when ``record`` is set (``R`` must be 1).
    """
    runs, n = draws.runs, graph.node_count
    src, dst = graph.arcs
    kind = config.kind
    state = np.zeros((runs, n), dtype=np.int8)
    state[np.broadcast_to(seed_mask, (runs, n))] = ACTIVE
    allowed = None if blocked is None else ~np.asarray(blocked, dtype=bool)
    fresh = state == ACTIVE
    acc = weights = None
    if kind == "LT":
        acc = np.zeros((runs, n))
        weights = _lt_weights(graph, allowed)

    def open_mask():
        o = state == SUSCEPTIBLE
        return o if allowed is None else o & allowed

    frames = [state[0].copy()] if record else None
    reason = "quiescent"
    t = 0
    active = _can_change(kind, state, fresh, src, dst, open_mask())
    while active:
        if t == config.max_steps:
            if _can_change(kind, state, fresh, src, dst, open_mask()):
                reason = "step_cap"
            break
        t += 1
        live, recovery = draws.step(t)
        infected = state == ACTIVE
        if kind == "SIR":
            recovering = infected & recovery
            senders = infected & ~recovering if config.recover_first else infected
        elif kind == "SI":
            senders = infected
        else:
            senders = fresh
        if kind == "LT":
            rows, cols = np.nonzero(senders[:, src])
            acc += np.bincount(rows * n + dst[cols], weights=weights[cols], minlength=runs * n).reshape(runs, n)
            new = (acc >= draws.thresholds) & open_mask()
        else:
            flat_src, flat_dst = live
            hit = np.zeros(runs * n, dtype=bool)
            hit[flat_dst[senders.ravel()[flat_src]]] = True
            new = hit.reshape(runs, n) & open_mask()
        changed = bool(new.any())
        if kind == "SIR":
            changed = changed or bool(recovering.any())
            state[recovering] = RECOVERED
        state[new] = ACTIVE
        fresh = new
        if changed:
            active = True
        else:
            active = _can_change(kind, state, fresh, src, dst, open_mask())
            if not active:
                break
        if record:
            frames.append(state[0].copy())
    return state, frames, reason


def simulate(graph, config, seeds, rng_seed=0, thresholds=None):
    """Simulate one run and return its :class:`Trace`.

    ``thresholds`` pins the LT node thresholds (length ``n``) instead of
    drawing them; it is ignored by the other models.
    """
    graph = check_graph(graph)
    ids = seed_ids(graph, seeds)
    draws = _Draws(graph, config, 1, stream(check_seed(rng_seed)))
    if thresholds is not None and config.kind == "LT":
        draws.thresholds = np.asarray(thresholds, dtype=np.float64).reshape(1, graph.node_count)
    mask = np.zeros(graph.node_count, dtype=bool)
    mask[list(ids)] = True
    _, frames, reason = propagate(graph, config, draws, mask, record=True)
    return Trace(np.vstack(frames), ids, reason)


def spread_samples(graph, config, seeds, runs, rng_seed=0, blocked=None):
    """Per-run activated-subgraph sizes, as an int array of length ``runs``."""
    graph = check_graph(graph)
    ids = seed_ids(graph, seeds)
    runs = check_positive_int(runs, "runs")
    rng_seed = check_seed(rng_seed)
    mask = np.zeros(graph.node_count, dtype=bool)
    mask[list(ids)] = True
    out = np.empty(runs, dtype=np.int64)
    for chunk, start in enumerate(range(0, runs, CHUNK)):
        size = min(CHUNK, runs - start)
        draws = _Draws(graph, config, CHUNK, stream(rng_seed, chunk))
        state, _, _ = propagate(graph, config, draws, mask, blocked=blocked)
        out[start:start + size] = np.count_nonzero(state[:size], axis=1)
    return out


def summarize(samples):
    samples = np.asarray(samples, dtype=np.float64)
    std = float(samples.std(ddof=1)) if samples.size > 1 else 0.0
    return SpreadEstimate(float(samples.mean()), std, int(samples.size), samples)


def expected_spread(graph, config, seeds, runs=1000, rng_seed=0):
    """Monte Carlo estimate of the expected activated-subgraph size.

    Mean and sample standard deviation over ``runs`` independent runs.
    Deterministic in its inputs.
    """
    return summarize(spread_samples(graph, config, seeds, runs, rng_seed))


class ExactSpreadOracle:
    """Exact IC expected spread by live-edge enumeration.

    Every undirected edge (or directed arc) is live independently with
    probability ``p``; the expected spread of ``S`` is the expected number
    of nodes within ``max_steps`` live hops of ``S``. Each connected
    component is enumerated separately, and per component the reachable
    sets for all ``2**E`` liveness patterns are precomputed once as
    bitmasks, so repeated queries are cheap. Counts are accumulated as
    integers per live-edge count before weighting, which makes the result
    bit-identical for structurally symmetric seed sets.
    """

    def __init__(self, graph, config, max_edges=20):
        graph = check_graph(graph)
        if config.kind != "IC":
            raise UnsupportedModelError(f"exact enumeration supports IC only, got {config.kind}")
        if graph.edge_count > max_edges:
            raise CapacityError(f"{graph.edge_count} edges exceed the enumeration limit of {max_edges}")
        self.graph = graph
        self.config = config
        self.evaluations = 0
        self._cache = {}
        n = graph.node_count
        _, labels = connected_components(graph.to_csr(), directed=graph.directed, connection="weak")
        self._labels = labels
        edges = graph.edges()
        self._components = []
        for c in range(labels.max() + 1 if n else 0):
            nodes = np.flatnonzero(labels == c)
            comp_edges = [(u, v) for u, v in edges if labels[u] == c]
            self._components.append(_ComponentTable(nodes, comp_edges, graph.directed, config))

    def __call__(self, seeds):
        key = tuple(sorted(set(int(s) for s in getattr(seeds, "ids", seeds))))
        if key in self._cache:
            return self._cache[key]
        self.evaluations += 1
        by_comp = {}
        for s in key:
            by_comp.setdefault(self._labels[s], []).append(s)
        value = sum(self._components[c].spread(ss) for c, ss in sorted(by_comp.items()))
        value = float(value)
        self._cache[key] = value
        return value


class _ComponentTable:
    def __init__(self, nodes, edges, directed, config):
        self.local = {int(v): i for i, v in enumerate(nodes)}
        size = len(nodes)
        e = len(edges)
        self.trivial = e == 0
        if self.trivial:
            return
        dtype = next(d for d in (np.uint8, np.uint16, np.uint32, np.uint64) if np.iinfo(d).bits >= size)
        masks = np.arange(1 << e, dtype=np.int64)
        live = [((masks >> j) & 1).astype(bool) for j in range(e)]
        arcs = []
        for j, (u, v) in enumerate(edges):
            a, b = self.local[u], self.local[v]
            arcs.append((a, b, j))
            if not directed:
                arcs.append((b, a, j))
        reach = np.empty((masks.size, size), dtype=dtype)
        for i in range(size):
            reach[:, i] = dtype(1) << dtype(i)
        zero = dtype(0)
        # reach[:, v] after h sweeps = nodes within h live hops of v.
        for _ in range(min(config.max_steps, size - 1)):
            nxt = reach.copy()
            for a, b, j in arcs:
                nxt[:, a] |= np.where(live[j], reach[:, b], zero)
            if np.array_equal(nxt, reach):
                break
            reach = nxt
        self.reach = reach
        self.live_count = np.bitwise_count(masks).astype(np.int64)
        p = config.p
        k = np.arange(e + 1)
        self.weights = p ** k * (1.0 - p) ** (e - k)
        self.edges = e

    def spread(self, seeds):
        if self.trivial:
            return float(len(seeds))
        cols = [self.local[s] for s in seeds]
        union = np.bitwise_or.reduce(self.reach[:, cols], axis=1)
        counts = np.bitwise_count(union).astype(np.float64)
        per_k = np.bincount(self.live_count, weights=counts, minlength=self.edges + 1)
        return float(np.dot(self.weights, per_k))


def exact_expected_spread(graph, config, seeds, max_edges=20):
    """Exact IC expected spread by enumerating all edge-liveness patterns."""
    graph = check_graph(graph)
    ids = seed_ids(graph, seeds)
    return ExactSpreadOracle(graph, config, max_edges=max_edges)(ids)
