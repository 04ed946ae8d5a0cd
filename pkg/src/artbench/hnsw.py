"""Layered small-world proximity index with greedy insert and approximate search.

The index stores executed test points in a multi-layer graph: every node
lives on the ground layer, exponentially fewer on each layer above.  A
query walks the top layers greedily (long hops), then runs a bounded
best-first expansion on the ground layer.

Single-writer discipline: ``insert``/``rebuild_doubled`` must not run
concurrently with anything else on the same index.  Queries leave the
index untouched (each call owns its traversal scratch), so they may run
concurrently with each other; trial farms still parallelize by one index
per trial rather than by sharing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .geometry import Metric, RandomSource, TestPoint, as_point

DEFAULT_BASE_CAPACITY = 10_000
DEFAULT_BREADTH_FACTOR = 4


class CapacityError(RuntimeError):
    """The index is full; the caller must rebuild with more room first."""


class EmptyIndexError(LookupError):
    """No nodes yet; the first test case never has a nearest neighbor."""


def construction_breadth(
    m0: int, capacity: int, factor: int = DEFAULT_BREADTH_FACTOR
) -> int:
    """Dynamic-list size used while building: grows with the log of capacity,
    never below the ground-layer link cap."""
    return max(m0, math.ceil(factor * math.log(capacity)))


def assign_level(rng: RandomSource, level_norm: float) -> int:
    """Draw a node's top layer: floor(-ln(u) * level_norm), u uniform in (0, 1]."""
    if level_norm <= 0:
        raise ValueError("level_norm must be positive")
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return int(math.floor(-math.log(u) * level_norm))


@dataclass(frozen=True)
class HnswParams:
    """Tuning knobs for the layered graph.

    ``m``/``m0`` cap the per-node links above/at the ground layer,
    ``ef_search``/``ef_construct`` size the query- and build-time dynamic
    lists, ``level_norm`` scales the exponential layer assignment, and
    ``base_capacity`` is the node budget before a rebuild doubles it.
    """

    m: int
    m0: int
    ef_search: int
    ef_construct: int
    level_norm: float
    base_capacity: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.m0 < self.m:
            raise ValueError("m0 must be >= m")
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")
        if self.ef_construct < self.m:
            raise ValueError("ef_construct must be >= m")
        if self.level_norm <= 0:
            raise ValueError("level_norm must be positive")
        if self.base_capacity < 1:
            raise ValueError("base_capacity must be >= 1")

    @classmethod
    def for_dimension(
        cls,
        dimension: int,
        base_capacity: int = DEFAULT_BASE_CAPACITY,
        ef_search: int = 2,
    ) -> "HnswParams":
        """Recommended parameters for a d-dimensional domain: 3*d links per
        node, twice that on the ground layer."""
        m = 3 * dimension
        m0 = 2 * m
        return cls(
            m=m,
            m0=m0,
            ef_search=ef_search,
            ef_construct=construction_breadth(m0, base_capacity),
            level_norm=1.0 / math.log(max(m, 2)),
            base_capacity=base_capacity,
        )

    def doubled(self) -> "HnswParams":
        """Parameters after a capacity doubling; the construction breadth is
        recomputed for the new size."""
        capacity = self.base_capacity * 2
        return replace(
            self,
            base_capacity=capacity,
            ef_construct=construction_breadth(self.m0, capacity),
        )


class SmallWorldIndex:
    """Append-only layered graph over test points."""

    def __init__(
        self,
        dimension: int,
        params: HnswParams,
        metric: Metric = Metric.EUCLIDEAN,
    ):
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.params = params
        self.metric = metric
        cap = params.base_capacity
        self._coords = np.zeros((cap, dimension), dtype=np.float64)
        self._levels = np.zeros(cap, dtype=np.int32)
        self._adj0 = np.zeros((cap, params.m0), dtype=np.int32)
        self._deg0 = np.zeros(cap, dtype=np.int32)
        self._up_row = np.full(cap, -1, dtype=np.int32)
        up_rows = max(16, cap // 4)
        self._adj_up = np.zeros((up_rows, params.m), dtype=np.int32)
        self._deg_up = np.zeros(up_rows, dtype=np.int32)
        self._up_used = 0
        self._visited = np.zeros(cap, dtype=np.int64)
        self._epoch = 0
        self._count = 0
        self.entry_point = -1
        self.max_layer = -1

    def __len__(self) -> int:
        return self._count

    @property
    def size(self) -> int:
        return self._count

    @property
    def capacity(self) -> int:
        return self.params.base_capacity

    def point(self, node_id: int) -> TestPoint:
        self._check_id(node_id)
        return self._coords[node_id].copy()

    def points(self) -> np.ndarray:
        """All stored points in insertion order (copy)."""
        return self._coords[: self._count].copy()

    def level_of(self, node_id: int) -> int:
        self._check_id(node_id)
        return int(self._levels[node_id])

    def links(self, node_id: int, layer: int) -> list[int]:
        """Link ids of a node on one layer, sorted for stable comparison."""
        self._check_id(node_id)
        if layer < 0 or layer > self._levels[node_id]:
            raise ValueError(f"node {node_id} does not reach layer {layer}")
        if layer == 0:
            row = self._adj0[node_id, : self._deg0[node_id]]
        else:
            r = self._up_row[node_id] + layer - 1
            row = self._adj_up[r, : self._deg_up[r]]
        return sorted(int(x) for x in row)

    def _check_id(self, node_id: int) -> None:
        if not 0 <= node_id < self._count:
            raise ValueError(f"unknown node id {node_id}")

    def _alloc_upper(self, rows: int) -> int:
        start = self._up_used
        need = start + rows
        if need > self._adj_up.shape[0]:
            new_rows = max(need, self._adj_up.shape[0] * 2)
            adj = np.zeros((new_rows, self.params.m), dtype=np.int32)
            deg = np.zeros(new_rows, dtype=np.int32)
            adj[: self._up_used] = self._adj_up[: self._up_used]
            deg[: self._up_used] = self._deg_up[: self._up_used]
            self._adj_up = adj
            self._deg_up = deg
        self._up_used = need
        return start

    def insert(self, point: TestPoint, rng: RandomSource) -> int:
        """Insert a point; returns its node id.

        Greedy descent from the entry point locates the point's
        neighborhood, then each layer from its assigned level down to the
        ground gets a construction-width search whose closest m (m0 on the
        ground) results become bidirectional links; any neighbor pushed
        over its cap keeps only its closest links.  Raises
        :class:`CapacityError` when full — callers rebuild first.
        """
        if self._count >= self.capacity:
            raise CapacityError(
                f"index at capacity {self.capacity}; rebuild_doubled() required"
            )
        p = as_point(point, self.dimension)
        level = assign_level(rng, self.params.level_norm)
        return self._insert_at_level(p, level)

    def _insert_at_level(self, p: np.ndarray, level: int) -> int:
        params = self.params
        nid = self._count
        self._coords[nid] = p
        self._levels[nid] = level
        if level >= 1:
            self._up_row[nid] = self._alloc_upper(level)

        if nid == 0:
            self._count = 1
            self.entry_point = 0
            self.max_layer = level
            return 0

        ep = self.entry_point
        if level < self.max_layer:
            ep, _ = _kernels.greedy_descent(
                self._coords,
                self._adj0,
                self._deg0,
                self._adj_up,
                self._deg_up,
                self._up_row,
                p,
                ep,
                self.max_layer,
                level + 1,
            )
        seeds = np.array([ep], dtype=np.int32)
        n_seeds = 1
        ef = params.ef_construct
        w_id = np.empty(ef, dtype=np.int32)
        w_d2 = np.empty(ef, dtype=np.float64)
        for layer in range(min(level, self.max_layer), -1, -1):
            self._epoch += 1
            wn = _kernels.search_layer(
                self._coords,
                self._adj0,
                self._deg0,
                self._adj_up,
                self._deg_up,
                self._up_row,
                layer,
                p,
                seeds,
                n_seeds,
                ef,
                self._visited,
                self._epoch,
                w_id,
                w_d2,
            )
            cap = params.m0 if layer == 0 else params.m
            _kernels.connect_and_shrink(
                self._coords,
                self._adj0,
                self._deg0,
                self._adj_up,
                self._deg_up,
                self._up_row,
                nid,
                layer,
                w_id,
                min(cap, wn),
                cap,
            )
            seeds = w_id[:wn].copy()
            n_seeds = wn
        self._count = nid + 1
        if level > self.max_layer:
            self.entry_point = nid
            self.max_layer = level
        return nid

    def nearest(self, q: TestPoint) -> tuple[TestPoint, float]:
        """Approximate nearest stored point and its distance to ``q``."""
        if self._count == 0:
            raise EmptyIndexError("nearest() on an empty index")
        q = as_point(q, self.dimension)
        ids, dists = self.nearest_many(q[np.newaxis, :])
        return self._coords[ids[0]].copy(), float(dists[0])

    def nearest_many(
        self, queries: np.ndarray, ef: int | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """Batched :meth:`nearest`; returns (node ids, distances).

        ``ef`` overrides the configured query width for this call only.
        """
        if self._count == 0:
            raise EmptyIndexError("nearest_many() on an empty index")
        queries = np.ascontiguousarray(queries, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[1] != self.dimension:
            raise ValueError(f"queries must be (n, {self.dimension})")
        n = queries.shape[0]
        out_id = np.empty(n, dtype=np.int32)
        out_d2 = np.empty(n, dtype=np.float64)
        # queries own their scratch so concurrent readers stay safe
        visited = np.zeros(self.capacity, dtype=np.int64)
        _kernels.nns_batch(
            self._coords,
            self._adj0,
            self._deg0,
            self._adj_up,
            self._deg_up,
            self._up_row,
            self.entry_point,
            self.max_layer,
            queries,
            self.params.ef_search if ef is None else ef,
            visited,
            1,
            out_id,
            out_d2,
        )
        return out_id, np.sqrt(out_d2)

    def search_layer(
        self, q: TestPoint, entry: int, ef: int, layer: int
    ) -> list[tuple[int, float]]:
        """Best-first expansion on one layer seeded at ``entry``.

        Returns up to ``ef`` (node id, distance) pairs sorted ascending.
        A layer with no nodes yields an empty list so callers can fall
        through to lower layers.
        """
        if ef < 1:
            raise ValueError("ef must be >= 1")
        if layer < 0:
            raise ValueError("layer must be >= 0")
        if layer > self.max_layer:
            return []
        self._check_id(entry)
        if self._levels[entry] < layer:
            raise ValueError(f"entry {entry} does not reach layer {layer}")
        q = as_point(q, self.dimension)
        seeds = np.array([entry], dtype=np.int32)
        w_id = np.empty(ef, dtype=np.int32)
        w_d2 = np.empty(ef, dtype=np.float64)
        visited = np.zeros(self.capacity, dtype=np.int64)
        wn = _kernels.search_layer(
            self._coords,
            self._adj0,
            self._deg0,
            self._adj_up,
            self._deg_up,
            self._up_row,
            layer,
            q,
            seeds,
            1,
            ef,
            visited,
            1,
            w_id,
            w_d2,
        )
        return [(int(w_id[i]), math.sqrt(float(w_d2[i]))) for i in range(wn)]

    def rebuild_doubled(self, rng: RandomSource) -> "SmallWorldIndex":
        """Fresh index with twice the capacity, points re-inserted in their
        original order; layer assignments are drawn anew from ``rng``."""
        new = SmallWorldIndex(self.dimension, self.params.doubled(), self.metric)
        for i in range(self._count):
            new.insert(self._coords[i], rng)
        return new

    # -- debug dump format: header, then per node "id level x1,...,xd" and
    #    one "L<layer>: id,id,..." line per layer it reaches. Not stable.

    def dump(self) -> str:
        p = self.params
        lines = [
            "# artbench-index"
            f" dim={self.dimension} m={p.m} m0={p.m0} ef_search={p.ef_search}"
            f" ef_construct={p.ef_construct} level_norm={p.level_norm!r}"
            f" base_capacity={p.base_capacity} entry={self.entry_point}"
            f" max_layer={self.max_layer} count={self._count}"
        ]
        for i in range(self._count):
            coords = ",".join(repr(float(x)) for x in self._coords[i])
            lines.append(f"{i} {int(self._levels[i])} {coords}")
            for layer in range(int(self._levels[i]) + 1):
                ids = ",".join(str(x) for x in self.links(i, layer))
                lines.append(f"L{layer}: {ids}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str, metric: Metric = Metric.EUCLIDEAN) -> "SmallWorldIndex":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# artbench-index"):
            raise ValueError("not an index dump")
        header = dict(
            item.split("=", 1) for item in lines[0].split()[2:] if "=" in item
        )
        params = HnswParams(
            m=int(header["m"]),
            m0=int(header["m0"]),
            ef_search=int(header["ef_search"]),
            ef_construct=int(header["ef_construct"]),
            level_norm=float(header["level_norm"]),
            base_capacity=int(header["base_capacity"]),
        )
        index = cls(int(header["dim"]), params, metric)
        count = int(header["count"])
        pos = 1
        for i in range(count):
            node_id, level, coords = lines[pos].split(" ", 2)
            if int(node_id) != i:
                raise ValueError(f"node lines out of order at id {node_id}")
            level = int(level)
            p = np.array([float(x) for x in coords.split(",")], dtype=np.float64)
            index._coords[i] = as_point(p, index.dimension)
            index._levels[i] = level
            if level >= 1:
                index._up_row[i] = index._alloc_upper(level)
            pos += 1
            for layer in range(level + 1):
                tag, _, ids = lines[pos].partition(":")
                if tag != f"L{layer}":
                    raise ValueError(f"expected L{layer} line for node {i}")
                link_ids = [int(x) for x in ids.split(",") if x.strip() != ""]
                cap = params.m0 if layer == 0 else params.m
                if len(link_ids) > cap:
                    raise ValueError(f"node {i} layer {layer} exceeds link cap")
                if layer == 0:
                    index._adj0[i, : len(link_ids)] = link_ids
                    index._deg0[i] = len(link_ids)
                else:
                    r = index._up_row[i] + layer - 1
                    index._adj_up[r, : len(link_ids)] = link_ids
                    index._deg_up[r] = len(link_ids)
                pos += 1
        index._count = count
        index.entry_point = int(header["entry"])
        index.max_layer = int(header["max_layer"])
        return index
