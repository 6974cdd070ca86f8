"""Deterministic derivation of independent random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
built by :func:`stream`. A stream is identified by a root seed plus a tuple
of non-negative integer keys (run index, round, candidate, ...). The keys
become the ``spawn_key`` of a :class:`numpy.random.SeedSequence`, which
hashes (root, keys) into the PCG64 state. Streams with different keys are
statistically independent and the result never depends on the order in
which streams are created, so work can be scheduled in any order.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def seed_sequence(root, *keys):
    keys = tuple(int(k) for k in keys)
    if any(k < 0 for k in keys):
        raise ValueError(f"stream keys must be non-negative, got {keys}")
    return np.random.SeedSequence(int(root) & _MASK64, spawn_key=keys)


def stream(root, *keys):
    """Return a fresh generator for ``(root, *keys)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(root, *keys)))


def child_seed(root, *keys):
    """Derive a 64-bit integer seed, for APIs that take an integer ``rng_seed``."""
    state = seed_sequence(root, *keys).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)
