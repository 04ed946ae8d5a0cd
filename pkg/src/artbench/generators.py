"""Interchangeable test-case generation engines.

Four strategies share one protocol: ``next_test_case`` proposes a point,
``record_outcome`` stores it when the run did not fail.  Random testing
samples blindly; the FSCS engines draw k fresh candidates per step and
pick the one whose nearest executed neighbor is farthest away (min-max),
differing only in how that nearest-neighbor distance is obtained: a flat
scan, an exact KD-tree, or the approximate small-world graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import InputDomain, Metric, TestPoint, as_point, sample_many, sample_uniform
from .hnsw import HnswParams, SmallWorldIndex
from .kdtree import KdTree

DEFAULT_CANDIDATES = 10


class Strategy(Enum):
    RANDOM_TESTING = "rt"
    FSCS_BRUTE_FORCE = "fscs-bf"
    FSCS_KD_TREE = "fscs-kd"
    SWFC_ART = "swfc"


@dataclass(frozen=True)
class GeneratorConfig:
    strategy: Strategy
    domain: InputDomain
    k: int = DEFAULT_CANDIDATES
    seed: int = 0
    metric: Metric = Metric.EUCLIDEAN
    hnsw: HnswParams | None = None  # SWFC only; None = sized from the domain

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("candidate set size k must be >= 1")


class _FlatBackend:
    """Growable matrix of executed points; nearest neighbor by full scan."""

    def __init__(self, dimension: int):
        self._rows = np.empty((256, dimension), dtype=np.float64)
        self._n = 0

    def nn_sqdist_many(self, candidates: np.ndarray) -> np.ndarray:
        executed = self._rows[: self._n]
        diff = executed[np.newaxis, :, :] - candidates[:, np.newaxis, :]
        return (diff * diff).sum(axis=-1).min(axis=1)

    def add(self, point: np.ndarray, rng) -> None:
        if self._n == self._rows.shape[0]:
            grown = np.empty((self._n * 2, self._rows.shape[1]), dtype=np.float64)
            grown[: self._n] = self._rows
            self._rows = grown
        self._rows[self._n] = point
        self._n += 1


class _KdBackend:
    def __init__(self, dimension: int):
        self._tree = KdTree(dimension)

    def nn_sqdist_many(self, candidates: np.ndarray) -> np.ndarray:
        return np.array([self._tree.nearest_sqdist(c) for c in candidates])

    def add(self, point: np.ndarray, rng) -> None:
        self._tree.add(point)


class _SwfcBackend:
    def __init__(self, dimension: int, params: HnswParams, metric: Metric):
        self.index = SmallWorldIndex(dimension, params, metric)

    def nn_sqdist_many(self, candidates: np.ndarray) -> np.ndarray:
        _, dists = self.index.nearest_many(candidates)
        return dists * dists

    def add(self, point: np.ndarray, rng) -> None:
        if self.index.size >= self.index.capacity:
            self.index = self.index.rebuild_doubled(rng)
        self.index.insert(point, rng)


@dataclass
class GeneratorState:
    """One trial's mutable state: its RNG, the executed set, and the
    strategy-specific store over it."""

    config: GeneratorConfig
    rng: np.random.Generator
    backend: object | None
    executed: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.executed)

    def executed_matrix(self) -> np.ndarray:
        """Executed points in execution order as an (n, d) array."""
        if not self.executed:
            return np.empty((0, self.config.domain.dimension))
        return np.asarray(self.executed)


def new_generator(config: GeneratorConfig) -> GeneratorState:
    dim = config.domain.dimension
    if config.strategy is Strategy.RANDOM_TESTING:
        backend = None
    elif config.strategy is Strategy.FSCS_BRUTE_FORCE:
        backend = _FlatBackend(dim)
    elif config.strategy is Strategy.FSCS_KD_TREE:
        backend = _KdBackend(dim)
    elif config.strategy is Strategy.SWFC_ART:
        params = config.hnsw or HnswParams.for_dimension(dim)
        backend = _SwfcBackend(dim, params, config.metric)
    else:
        raise ValueError(f"unknown strategy {config.strategy}")
    return GeneratorState(
        config=config, rng=np.random.default_rng(config.seed), backend=backend
    )


def draw_candidates(state: GeneratorState) -> np.ndarray:
    """The k fresh uniform candidates for one selection step."""
    return sample_many(state.config.domain, state.rng, state.config.k)


def select_best(state: GeneratorState, candidates: np.ndarray) -> int:
    """Index of the candidate whose nearest executed neighbor is farthest
    (first wins on ties)."""
    sqdists = state.backend.nn_sqdist_many(candidates)
    return int(np.argmax(sqdists))


def next_test_case(state: GeneratorState) -> TestPoint:
    """Propose the next test case.

    Random testing, and every strategy's very first step, return a plain
    uniform sample; otherwise the min-max rule picks among k candidates.
    """
    config = state.config
    if config.strategy is Strategy.RANDOM_TESTING or state.count == 0:
        return sample_uniform(config.domain, state.rng)
    candidates = draw_candidates(state)
    return candidates[select_best(state, candidates)]


def record_outcome(state: GeneratorState, point: TestPoint, failed: bool) -> None:
    """Store the executed point unless it revealed a failure (which ends
    the trial, so failing points never join the reference set)."""
    if failed:
        return
    p = as_point(point, state.config.domain.dimension)
    state.executed.append(p)
    if state.backend is not None:
        state.backend.add(p, state.rng)
