"""Shared test utilities: forced randomness, brute-force oracles, and the
graph invariant scan."""

import numpy as np


class QueueRandom:
    """Stand-in random source returning queued values from .random()."""

    def __init__(self, values):
        self._values = list(values)

    def random(self):
        return self._values.pop(0)


class FixedUniform:
    """Stand-in random source whose .uniform() returns preset arrays."""

    def __init__(self, values):
        self._values = list(values)

    def uniform(self, low, high, size=None):
        return np.asarray(self._values.pop(0), dtype=np.float64)


def brute_nn_sqdist(points, queries):
    """Exact squared nearest-neighbor distance of each query to the set."""
    points = np.asarray(points, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    diff = points[np.newaxis, :, :] - queries[:, np.newaxis, :]
    return (diff * diff).sum(axis=-1).min(axis=1)


def brute_top_ids(points, query, count):
    """Ids of the ``count`` closest points, distance then id ascending."""
    points = np.asarray(points, dtype=np.float64)
    diff = points - np.asarray(query, dtype=np.float64)
    d2 = (diff * diff).sum(axis=-1)
    order = np.lexsort((np.arange(len(points)), d2))
    return [int(i) for i in order[:count]]


def check_graph_invariants(index):
    """Exhaustive structural scan: bidirectional links, degree caps, layer
    monotonicity, and a live entry point on the top layer."""
    n = index.size
    assert n > 0
    assert 0 <= index.entry_point < n
    assert index.level_of(index.entry_point) == index.max_layer
    assert max(index.level_of(i) for i in range(n)) == index.max_layer
    for i in range(n):
        level = index.level_of(i)
        for layer in range(level + 1):
            links = index.links(i, layer)
            cap = index.params.m0 if layer == 0 else index.params.m
            assert len(links) <= cap, f"node {i} layer {layer} over cap"
            assert len(set(links)) == len(links), f"node {i} duplicate links"
            assert i not in links, f"node {i} self-link"
            for j in links:
                assert 0 <= j < n, f"node {i} links dead id {j}"
                assert index.level_of(j) >= layer, "link target below its layer"
                assert i in index.links(j, layer), f"{i}<->{j} not bidirectional"
