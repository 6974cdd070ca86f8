"""Immutable graphs in CSR form, generators, edge-list I/O and BFS."""

import io
import os
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ._rng import stream
from .exceptions import ConfigurationError, ParseError
from .validation import check_node

INF = np.inf

GENERATOR_KINDS = ("erdos_renyi", "barabasi_albert", "watts_strogatz")
_KIND_ALIASES = {
    "er": "erdos_renyi",
    "erdos_renyi": "erdos_renyi",
    "random": "erdos_renyi",
    "ba": "barabasi_albert",
    "barabasi_albert": "barabasi_albert",
    "ws": "watts_strogatz",
    "watts_strogatz": "watts_strogatz",
}
WS_DEFAULT_K = 6
WS_DEFAULT_P = 0.1


class EdgeListWarning(UserWarning):
    """Emitted when ingestion drops duplicate arcs or self-loops."""

    def __init__(self, dropped):
        self.dropped = dropped
        super().__init__(f"dropped {dropped} duplicate or self-loop line(s)")


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=np.int64)
    a.flags.writeable = False
    return a


def _canonical_arcs(n, src, dst, directed):
    """Deduplicate, drop self-loops and sort. Returns (src, dst, dropped_inputs)."""
    src = np.asarray(src, dtype=np.int64).ravel()
    dst = np.asarray(dst, dtype=np.int64).ravel()
    total = src.size
    keep = src != dst
    src, dst = src[keep], dst[keep]
    if directed:
        keys = np.unique(src * n + dst)
        kept = keys.size
    else:
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        pair_keys = np.unique(lo * n + hi)
        kept = pair_keys.size
        lo, hi = pair_keys // n, pair_keys % n
        keys = np.unique(np.concatenate([lo * n + hi, hi * n + lo]))
    return keys // n, keys % n, total - kept


class Graph:
    """Unweighted graph with dense 0-based node ids, stored as CSR.

    Out-neighbour lists are sorted ascending with no duplicates or
    self-loops. Undirected graphs store both arcs of every edge, and
    ``edge_count`` counts unordered pairs. Instances are immutable.
    """

    __slots__ = ("_n", "_directed", "_indptr", "_indices", "__dict__")

    def __init__(self, node_count, indptr, indices, directed=False):
        self._n = int(node_count)
        self._directed = bool(directed)
        self._indptr = _readonly(indptr)
        self._indices = _readonly(indices)
        if self._indptr.shape != (self._n + 1,):
            raise ValueError("indptr must have node_count + 1 entries")

    @classmethod
    def from_edges(cls, node_count, edges, directed=False):
        """Build a canonical graph from an iterable of ``(u, v)`` pairs."""
        n = int(node_count)
        if n < 0:
            raise ValueError("node_count must be non-negative")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError(f"edge endpoint out of range [0, {n})")
        graph, _ = cls._from_arrays(n, arr[:, 0], arr[:, 1], directed)
        return graph

    @classmethod
    def _from_arrays(cls, n, src, dst, directed):
        src, dst, dropped = _canonical_arcs(n, src, dst, directed)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, indptr, dst, directed), int(dropped)

    @classmethod
    def from_networkx(cls, g):
        """Convert a NetworkX graph. Nodes are relabelled 0..n-1 in sorted order."""
        nodes = list(g.nodes())
        try:
            nodes = sorted(nodes)
        except TypeError:
            pass
        index = {v: i for i, v in enumerate(nodes)}
        edges = [(index[u], index[v]) for u, v in g.edges()]
        return cls.from_edges(len(nodes), edges, directed=g.is_directed())

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph() if self._directed else nx.Graph()
        g.add_nodes_from(range(self._n))
        g.add_edges_from(self.edges())
        return g

    @property
    def node_count(self):
        return self._n

    @property
    def directed(self):
        return self._directed

    @property
    def indptr(self):
        return self._indptr

    @property
    def indices(self):
        return self._indices

    @property
    def arc_count(self):
        return int(self._indices.size)

    @property
    def edge_count(self):
        return self.arc_count if self._directed else self.arc_count // 2

    def neighbors(self, v):
        """Sorted out-neighbours of ``v`` (read-only view)."""
        v = check_node(self, v)
        return self._indices[self._indptr[v]:self._indptr[v + 1]]

    def adjacency(self):
        return [self._indices[self._indptr[v]:self._indptr[v + 1]].tolist() for v in range(self._n)]

    @cached_property
    def degree(self):
        """Out-degree per node (degree for undirected graphs)."""
        return _readonly(np.diff(self._indptr))

    @cached_property
    def in_degree(self):
        if not self._directed:
            return self.degree
        return _readonly(np.bincount(self._indices, minlength=self._n))

    @cached_property
    def arcs(self):
        """``(src, dst)`` arrays, one entry per stored arc, in CSR order."""
        src = np.repeat(np.arange(self._n, dtype=np.int64), self.degree)
        return _readonly(src), self._indices

    def reverse(self):
        """Graph with every arc flipped; undirected graphs return themselves."""
        if not self._directed:
            return self
        src, dst = self.arcs
        graph, _ = Graph._from_arrays(self._n, dst, src, True)
        return graph

    def edges(self):
        """List of ``(u, v)`` pairs; ``u < v`` for undirected graphs."""
        src, dst = self.arcs
        if not self._directed:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        return list(zip(src.tolist(), dst.tolist()))

    def to_csr(self, dtype=np.float64):
        data = np.ones(self.arc_count, dtype=dtype)
        return sp.csr_array((data, self._indices, self._indptr), shape=(self._n, self._n))

    def to_edge_list(self):
        """Canonical text form: ``nodes N`` header then sorted ``u v`` lines."""
        lines = [f"nodes {self._n}"]
        lines.extend(f"{u} {v}" for u, v in self.edges())
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._n == other._n
            and self._directed == other._directed
            and np.array_equal(self._indptr, other._indptr)
            and np.array_equal(self._indices, other._indices)
        )

    __hash__ = None

    def __repr__(self):
        kind = "directed" if self._directed else "undirected"
        return f"Graph({kind}, nodes={self._n}, edges={self.edge_count})"


def parse_edge_list(text, directed=False):
    """Parse edge-list text. Returns ``(graph, dropped_line_count)``.

    ``text`` may be a string or a text stream. Blank lines and lines
    starting with ``#`` are skipped. An optional ``nodes N`` line fixes
    the node count so trailing isolated nodes survive.
    """
    if not isinstance(text, str):
        text = text.read()
    src, dst = [], []
    header_n = 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "nodes":
            if len(tokens) != 2:
                raise ParseError("expected 'nodes N'", lineno)
            header_n = max(header_n, _parse_id(tokens[1], lineno))
            continue
        if len(tokens) != 2:
            raise ParseError(f"expected two node ids, got {len(tokens)} token(s)", lineno)
        src.append(_parse_id(tokens[0], lineno))
        dst.append(_parse_id(tokens[1], lineno))
    n = max(header_n, 1 + max(src + dst, default=-1))
    return Graph._from_arrays(n, src, dst, directed)


def _parse_id(token, lineno):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"malformed node id {token!r}", lineno) from None
    if value < 0:
        raise ParseError(f"negative node id {value}", lineno)
    return value


def from_edge_list(text, directed=False):
    """Parse edge-list text into a canonical :class:`Graph`.

    Duplicate arcs and self-loops are dropped; an :class:`EdgeListWarning`
    carrying the count is emitted when that happens.
    """
    graph, dropped = parse_edge_list(text, directed)
    if dropped:
        warnings.warn(EdgeListWarning(dropped), stacklevel=2)
    return graph


def read_graph(path, directed=False, remap=False):
    """Load an edge-list file.

    With ``remap=True`` the distinct ids in the file are mapped to dense
    ids in ascending order and the mapping is persisted next to the file
    as ``<path>.idmap`` (``internal external`` per line).
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not remap:
        return from_edge_list(text, directed)
    pairs = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("nodes"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected two node ids, got {len(tokens)} token(s)", lineno)
        pairs.append((_parse_id(tokens[0], lineno), _parse_id(tokens[1], lineno)))
    external = sorted({v for pair in pairs for v in pair})
    index = {v: i for i, v in enumerate(external)}
    with open(os.fspath(path) + ".idmap", "w", encoding="utf-8") as fh:
        fh.writelines(f"{i} {v}\n" for i, v in enumerate(external))
    remapped = "".join(f"{index[u]} {index[v]}\n" for u, v in pairs)
    return from_edge_list(remapped, directed)


def write_graph(graph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(graph.to_edge_list())


@dataclass(frozen=True)
class GraphGenSpec:
    """Parameters for :func:`generate`.

    ``p`` is the edge probability for Erdős–Rényi and the rewiring
    probability for Watts–Strogatz; ``k`` is the Watts–Strogatz ring
    degree and ``m`` the Barabási–Albert attachment count. Watts–Strogatz
    falls back to ``k=6, p=0.1`` when those are omitted.
    """

    kind: str
    n: int
    p: Optional[float] = None
    k: Optional[int] = None
    m: Optional[int] = None

    def __post_init__(self):
        kind = _KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ConfigurationError(f"unknown graph kind {self.kind!r}; expected one of {GENERATOR_KINDS}")
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        if kind == "watts_strogatz":
            if self.k is None:
                object.__setattr__(self, "k", WS_DEFAULT_K)
            if self.p is None:
                object.__setattr__(self, "p", WS_DEFAULT_P)
        if kind in ("erdos_renyi", "watts_strogatz"):
            if self.p is None:
                raise ConfigurationError(f"{kind} requires p")
            if not 0.0 <= float(self.p) <= 1.0:
                raise ConfigurationError(f"p must lie in [0, 1], got {self.p}")
        if kind == "watts_strogatz":
            k = self.k
            if not isinstance(k, (int, np.integer)) or k < 2 or k % 2:
                raise ConfigurationError(f"watts_strogatz k must be an even integer >= 2, got {k!r}")
            if k >= self.n:
                raise ConfigurationError(f"watts_strogatz requires k < n, got k={k}, n={self.n}")
        if kind == "barabasi_albert":
            m = self.m
            if not isinstance(m, (int, np.integer)) or m < 1:
                raise ConfigurationError(f"barabasi_albert m must be an integer >= 1, got {m!r}")
            if m >= self.n:
                raise ConfigurationError(f"barabasi_albert requires m < n, got m={m}, n={self.n}")

    @property
    def label(self):
        if self.kind == "erdos_renyi":
            return f"er(n={self.n};p={self.p:g})"
        if self.kind == "barabasi_albert":
            return f"ba(n={self.n};m={self.m})"
        return f"ws(n={self.n};k={self.k};p={self.p:g})"


def generate(spec, rng_seed=0):
    """Generate an undirected graph; a pure function of ``(spec, rng_seed)``."""
    rng = stream(rng_seed)
    n = spec.n
    if spec.kind == "erdos_renyi":
        return _erdos_renyi(n, float(spec.p), rng)
    if spec.kind == "barabasi_albert":
        return _barabasi_albert(n, int(spec.m), rng)
    return _watts_strogatz(n, int(spec.k), float(spec.p), rng)


def _erdos_renyi(n, p, rng):
    src, dst = [], []
    for i in range(n - 1):
        hits = np.flatnonzero(rng.random(n - i - 1) < p) + i + 1
        src.append(np.full(hits.size, i, dtype=np.int64))
        dst.append(hits)
    if not src:
        return Graph.from_edges(n, [])
    return Graph._from_arrays(n, np.concatenate(src), np.concatenate(dst), False)[0]


def _barabasi_albert(n, m, rng):
    # Seed clique on nodes 0..m; each later node attaches to m distinct
    # existing nodes drawn proportionally to degree.
    edges = [(u, v) for u in range(m + 1) for v in range(u + 1, m + 1)]
    endpoints = [v for e in edges for v in e]
    for new in range(m + 1, n):
        targets = []
        chosen = set()
        while len(targets) < m:
            t = endpoints[int(rng.integers(len(endpoints)))]
            if t not in chosen:
                chosen.add(t)
                targets.append(t)
        for t in targets:
            edges.append((t, new))
            endpoints.extend((t, new))
    return Graph.from_edges(n, edges)


def _watts_strogatz(n, k, p, rng):
    adj = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for u in range(n):
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
            w = int(rng.integers(n))
            while w == u or w in adj[u]:
                w = int(rng.integers(n))
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph.from_edges(n, edges)


def gather_neighbors(graph, nodes):
    """Concatenated out-neighbour lists of ``nodes``."""
    nodes = np.asarray(nodes, dtype=np.int64)
    starts = graph.indptr[nodes]
    counts = graph.indptr[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
    return graph.indices[np.arange(total) + offsets]


def bfs_distances(graph, source):
    """Hop distances from ``source``; unreachable nodes get ``inf``.

    Returns a float array of length ``node_count`` (integral values).
    """
    source = check_node(graph, source, "source")
    dist = np.full(graph.node_count, INF)
    dist[source] = 0.0
    frontier = np.array([source], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        nbrs = gather_neighbors(graph, frontier)
        nbrs = np.unique(nbrs[np.isinf(dist[nbrs])])
        dist[nbrs] = level
        frontier = nbrs
    return dist
