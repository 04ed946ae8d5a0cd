"""Input domains, test points, uniform sampling, and distance metrics.

A test point is a plain 1-d ``numpy.ndarray`` of float64 coordinates with
one entry per input dimension.  All values here are immutable after
construction and safe to share between threads; random state is always
injected by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# A test point is a (d,) float64 vector of finite coordinates.
TestPoint = np.ndarray

RandomSource = np.random.Generator


class Metric(Enum):
    """Distance metric between test points (extension point, L2 only)."""

    EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class InputDomain:
    """A hyper-rectangular input space: one closed [lo, hi] interval per dimension."""

    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)

    def __init__(self, bounds):
        lower = np.asarray([b[0] for b in bounds], dtype=np.float64)
        upper = np.asarray([b[1] for b in bounds], dtype=np.float64)
        if lower.size < 1:
            raise ValueError("domain needs at least one dimension")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("domain bounds must be finite")
        if not (lower < upper).all():
            raise ValueError("every dimension needs lo < hi")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lo: float, hi: float, dimension: int) -> "InputDomain":
        """The same [lo, hi] interval in every dimension."""
        return cls([(lo, hi)] * dimension)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, points: np.ndarray) -> np.ndarray | bool:
        """Whether the point(s) lie inside the closed bounds; boundary counts."""
        pts = np.asarray(points, dtype=np.float64)
        inside = (pts >= self.lower) & (pts <= self.upper)
        return inside.all(axis=-1)

    def __repr__(self) -> str:
        pairs = ", ".join(f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.lower, self.upper))
        return f"InputDomain({pairs})"


def as_point(coords, dimension: int | None = None) -> TestPoint:
    """Validate and normalize coordinates into a test point."""
    p = np.asarray(coords, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"test point must be 1-d, got shape {p.shape}")
    if dimension is not None and p.size != dimension:
        raise ValueError(f"expected {dimension} coordinates, got {p.size}")
    if not np.isfinite(p).all():
        raise ValueError("test point coordinates must be finite")
    return p


def sample_uniform(domain: InputDomain, rng: RandomSource) -> TestPoint:
    """Draw one point uniformly from the domain, dimensions independent."""
    return rng.uniform(domain.lower, domain.upper)


def sample_many(domain: InputDomain, rng: RandomSource, count: int) -> np.ndarray:
    """Draw ``count`` points uniformly; rows are points."""
    return rng.uniform(domain.lower, domain.upper, size=(count, domain.dimension))


def distance(metric: Metric, a: TestPoint, b: TestPoint) -> float:
    """Distance between two points of equal dimensionality."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric is not Metric.EUCLIDEAN:
        raise ValueError(f"unsupported metric: {metric}")
    diff = a - b
    return math.sqrt(float((diff * diff).sum()))
