"""Input validation helpers shared by the functional API and the estimators.

The ``check_*`` functions follow the scikit-learn convention: they accept
loosely typed input, normalise it, and raise ``ValueError`` subclasses
with a message naming the offending argument.
"""

import numbers

import numpy as np

from .exceptions import ConfigurationError


def check_graph(graph):
    """Return a :class:`~graphflow.graph.Graph`.

    NetworkX graphs are converted with :meth:`Graph.from_networkx`, so any
    estimator in the package can be fitted on one directly.
    """
    from .graph import Graph

    if isinstance(graph, Graph):
        return graph
    if hasattr(graph, "adj") and hasattr(graph, "is_directed"):
        return Graph.from_networkx(graph)
    raise TypeError(f"expected a Graph or networkx graph, got {type(graph).__name__}")


def check_node(graph, node, name="node"):
    if isinstance(node, (bool, np.bool_)) or not isinstance(node, numbers.Integral):
        raise ValueError(f"{name} must be an integer node id, got {node!r}")
    node = int(node)
    if not 0 <= node < graph.node_count:
        raise ValueError(f"{name} {node} out of range [0, {graph.node_count})")
    return node


def check_node_ids(graph, ids, name="nodes", allow_empty=True):
    """Return ``ids`` as a sorted tuple of unique, in-range ints."""
    if isinstance(ids, numbers.Integral):
        ids = [ids]
    out = sorted({check_node(graph, v, name) for v in ids})
    if not allow_empty and not out:
        raise ValueError(f"{name} must be non-empty")
    return tuple(out)


def check_budget(budget, upper, name="budget"):
    if isinstance(budget, (bool, np.bool_)) or not isinstance(budget, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {budget!r}")
    budget = int(budget)
    if budget < 1 or budget > upper:
        raise ValueError(f"{name} must lie in [1, {upper}], got {budget}")
    return budget


def check_positive_int(value, name):
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_probability(value, name, error=ConfigurationError):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise error(f"{name} must be a real number, got {value!r}") from None
    if not 0.0 <= value <= 1.0:
        raise error(f"{name} must lie in [0, 1], got {value}")
    return value


def check_seed(rng_seed):
    """Normalise an integer RNG seed; ``None`` maps to 0 so results stay reproducible."""
    if rng_seed is None:
        return 0
    if isinstance(rng_seed, (bool, np.bool_)) or not isinstance(rng_seed, numbers.Integral):
        raise ValueError(f"rng_seed must be an integer, got {rng_seed!r}")
    return int(rng_seed) & ((1 << 64) - 1)
