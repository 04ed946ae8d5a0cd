import numpy as np
import pytest

from artbench.kdtree import KdTree
from helpers import brute_nn_sqdist


def test_empty_tree_raises():
    tree = KdTree(2)
    with pytest.raises(LookupError):
        tree.nearest_sqdist([0.0, 0.0])


def test_dimension_mismatch():
    tree = KdTree(2)
    with pytest.raises(ValueError):
        tree.add([1.0, 2.0, 3.0])


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_exact_against_brute_force(d):
    rng = np.random.default_rng(d)
    pts = rng.uniform(-10, 10, (300, d))
    tree = KdTree(d)
    for p in pts:
        tree.add(p)
    queries = rng.uniform(-12, 12, (200, d))
    expected = brute_nn_sqdist(pts, queries)
    got = np.array([tree.nearest_sqdist(q) for q in queries])
    assert np.array_equal(got, expected)


def test_incremental_queries_stay_exact():
    rng = np.random.default_rng(99)
    tree = KdTree(3)
    pts = []
    for i in range(120):
        p = rng.uniform(0, 1, 3)
        tree.add(p)
        pts.append(p)
        q = rng.uniform(0, 1, 3)
        assert tree.nearest_sqdist(q) == brute_nn_sqdist(pts, q)[0]
        assert len(tree) == i + 1


def test_duplicate_points_give_zero_distance():
    tree = KdTree(2)
    tree.add([0.5, 0.5])
    tree.add([0.5, 0.5])
    assert tree.nearest_sqdist([0.5, 0.5]) == 0.0
