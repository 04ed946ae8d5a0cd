"""Incremental KD-tree with exact nearest-neighbor queries.

Points are inserted one at a time (no rebalancing); splitting cycles
through the dimensions by depth.  Queries backtrack fully, so the
returned nearest distance is exact — this is the "KD-exact" baseline,
deliberately simpler than limited-backtracking variants.
"""

from __future__ import annotations



class _Node:
    __slots__ = ("point", "axis", "left", "right")

    def __init__(self, point, axis):
        self.point = point
        self.axis = axis
        self.left = None
        self.right = None


class KdTree:
    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self._root = None
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, point) -> None:
        p = tuple(float(x) for x in point)
        if len(p) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {len(p)}")
        if self._root is None:
            self._root = _Node(p, 0)
            self._size = 1
            return
        node = self._root
        while True:
            axis = node.axis
            if p[axis] < node.point[axis]:
                if node.left is None:
                    node.left = _Node(p, (axis + 1) % self.dimension)
                    break
                node = node.left
            else:
                if node.right is None:
                    node.right = _Node(p, (axis + 1) % self.dimension)
                    break
                node = node.right
        self._size += 1

    def nearest_sqdist(self, query) -> float:
        """Exact squared distance from ``query`` to the closest stored point."""
        if self._root is None:
            raise LookupError("nearest query on an empty tree")
        q = tuple(float(x) for x in query)
        best = [float("inf")]
        self._search(self._root, q, best)
        return best[0]

    def _search(self, node, q, best):
        p = node.point
        d2 = 0.0
        for i in range(self.dimension):
            t = p[i] - q[i]
            d2 += t * t
        if d2 < best[0]:
            best[0] = d2
        axis = node.axis
        delta = q[axis] - p[axis]
        near, far = (node.left, node.right) if delta < 0 else (node.right, node.left)
        if near is not None:
            self._search(near, q, best)
        if far is not None and delta * delta < best[0]:
            self._search(far, q, best)
