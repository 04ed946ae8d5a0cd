"""Synthetic failure regions and the first-failure trial runner.

Three classic failure shapes at a target rate theta (the fraction of the
domain's hyper-volume that fails): one block, one strip across the
domain, or 25 scattered point blocks.  ``run_trial`` drives a generator
against a region and reports how many tests ran until the first hit.
"""

from __future__ import annotations

import json
import math
import subprocess
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .generators import GeneratorConfig, new_generator, next_test_case, record_outcome
from .geometry import InputDomain, RandomSource

STRIP_CALIBRATION_SAMPLES = 1 << 21
STRIP_VOLUME_RTOL = 0.02
STRIP_MAX_BISECTIONS = 60
POINT_SUB_BLOCKS = 25
# anchor chords shorter than this fraction of the domain diagonal sit in a
# corner and would calibrate to an unrealistically thick slab
STRIP_MIN_CHORD = 0.5
_SAMPLE_CHUNK = 1 << 18


class CalibrationError(RuntimeError):
    """Strip half-width calibration failed to converge."""


class PlacementError(RuntimeError):
    """Could not place disjoint point-pattern blocks in the retry budget."""


class FailurePattern(Enum):
    BLOCK = "block"
    STRIP = "strip"
    POINT = "point"


@dataclass(frozen=True)
class BlockRegion:
    """One axis-aligned hyper-cube of exact volume fraction theta."""

    lower: np.ndarray
    upper: np.ndarray
    theta: float
    seed: int | None = None

    pattern = FailurePattern.BLOCK

    def contains(self, points) -> np.ndarray | bool:
        pts = np.asarray(points, dtype=np.float64)
        return ((pts >= self.lower) & (pts <= self.upper)).all(axis=-1)


@dataclass(frozen=True)
class StripRegion:
    """All points within ``half_width`` of the segment joining two anchors
    on adjacent domain borders; width calibrated by Monte Carlo."""

    a: np.ndarray
    b: np.ndarray
    half_width: float
    theta: float
    seed: int | None = None

    pattern = FailurePattern.STRIP

    def contains(self, points) -> np.ndarray | bool:
        d2 = _segment_sqdist(np.asarray(points, dtype=np.float64), self.a, self.b)
        return d2 <= self.half_width * self.half_width


@dataclass(frozen=True)
class PointRegion:
    """25 disjoint blocks, each of volume theta/25."""

    lowers: np.ndarray  # (25, d)
    uppers: np.ndarray
    theta: float
    seed: int | None = None

    pattern = FailurePattern.POINT

    def contains(self, points) -> np.ndarray | bool:
        pts = np.asarray(points, dtype=np.float64)
        hit = (
            (pts[..., np.newaxis, :] >= self.lowers)
            & (pts[..., np.newaxis, :] <= self.uppers)
        ).all(axis=-1)
        return hit.any(axis=-1)


FailureRegion = BlockRegion | StripRegion | PointRegion


def _segment_sqdist(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    denom = float((ab * ab).sum())
    if denom == 0.0:
        diff = points - a
        return (diff * diff).sum(axis=-1)
    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    closest = a + np.multiply.outer(t, ab)
    diff = points - closest
    return (diff * diff).sum(axis=-1)


def _check_theta(theta: float) -> None:
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")


def make_block(
    domain: InputDomain, theta: float, rng: RandomSource, seed: int | None = None
) -> BlockRegion:
    """A hyper-cube of normalized side theta^(1/d), placed uniformly among
    positions fully inside the domain."""
    _check_theta(theta)
    side_frac = theta ** (1.0 / domain.dimension)
    if side_frac > 1.0:
        raise ValueError(f"theta {theta} does not fit the domain")
    side = side_frac * domain.span
    lower = rng.uniform(domain.lower, domain.upper - side)
    return BlockRegion(lower=lower, upper=lower + side, theta=theta, seed=seed)


def _anchor_on_face(
    domain: InputDomain, dim: int, side: int, rng: RandomSource
) -> np.ndarray:
    p = rng.uniform(domain.lower, domain.upper)
    p[dim] = domain.lower[dim] if side == 0 else domain.upper[dim]
    return p


def make_strip(
    domain: InputDomain,
    theta: float,
    rng: RandomSource,
    seed: int | None = None,
    samples: int = STRIP_CALIBRATION_SAMPLES,
) -> StripRegion:
    """A slab around a segment joining two adjacent borders.

    The half-width is bisected until the Monte-Carlo volume fraction over a
    fixed uniform sample lands within theta * (1 +/- 2%).  Corner strips
    are resampled: an anchor chord spanning less than half the domain
    diagonal would calibrate to an unrealistically thick slab.
    """
    _check_theta(theta)
    if domain.dimension < 2:
        raise ValueError("strip patterns need at least 2 dimensions")
    min_chord = STRIP_MIN_CHORD * math.sqrt(domain.dimension)
    for _ in range(1000):
        dims = rng.choice(domain.dimension, size=2, replace=False)
        sides = rng.integers(0, 2, size=2)
        a = _anchor_on_face(domain, int(dims[0]), int(sides[0]), rng)
        b = _anchor_on_face(domain, int(dims[1]), int(sides[1]), rng)
        if float(np.linalg.norm((a - b) / domain.span)) >= min_chord:
            break
    else:
        raise CalibrationError("could not sample non-corner strip anchors")

    sqdist = np.empty(samples, dtype=np.float64)
    done = 0
    while done < samples:
        n = min(_SAMPLE_CHUNK, samples - done)
        pts = rng.uniform(domain.lower, domain.upper, size=(n, domain.dimension))
        sqdist[done : done + n] = _segment_sqdist(pts, a, b)
        done += n

    lo, hi = 0.0, float(np.linalg.norm(domain.span))
    for _ in range(STRIP_MAX_BISECTIONS):
        w = 0.5 * (lo + hi)
        frac = float((sqdist <= w * w).mean())
        if theta * (1.0 - STRIP_VOLUME_RTOL) <= frac <= theta * (1.0 + STRIP_VOLUME_RTOL):
            return StripRegion(a=a, b=b, half_width=w, theta=theta, seed=seed)
        if frac < theta:
            lo = w
        else:
            hi = w
    raise CalibrationError(
        f"strip width did not converge to theta={theta} in "
        f"{STRIP_MAX_BISECTIONS} bisection steps"
    )


def make_point_pattern(
    domain: InputDomain, theta: float, rng: RandomSource, seed: int | None = None
) -> PointRegion:
    """25 equal disjoint blocks whose volumes sum to exactly theta."""
    _check_theta(theta)
    side_frac = (theta / POINT_SUB_BLOCKS) ** (1.0 / domain.dimension)
    if side_frac > 1.0:
        raise ValueError(f"theta {theta} does not fit the domain")
    side = side_frac * domain.span
    lowers = np.empty((POINT_SUB_BLOCKS, domain.dimension))
    uppers = np.empty_like(lowers)
    for i in range(POINT_SUB_BLOCKS):
        for attempt in range(1000):
            lo = rng.uniform(domain.lower, domain.upper - side)
            hi = lo + side
            overlap = (
                (lo < uppers[:i]) & (lowers[:i] < hi)
            ).all(axis=-1).any() if i else False
            if not overlap:
                lowers[i] = lo
                uppers[i] = hi
                break
        else:
            raise PlacementError(
                f"could not place disjoint block {i + 1}/{POINT_SUB_BLOCKS} "
                f"for theta={theta} in d={domain.dimension}"
            )
    return PointRegion(lowers=lowers, uppers=uppers, theta=theta, seed=seed)


def make_region(
    pattern: FailurePattern,
    domain: InputDomain,
    theta: float,
    rng: RandomSource,
    seed: int | None = None,
) -> FailureRegion:
    if pattern is FailurePattern.BLOCK:
        return make_block(domain, theta, rng, seed)
    if pattern is FailurePattern.STRIP:
        return make_strip(domain, theta, rng, seed)
    if pattern is FailurePattern.POINT:
        return make_point_pattern(domain, theta, rng, seed)
    raise ValueError(f"unknown pattern {pattern}")


def region_to_text(region: FailureRegion) -> str:
    """Serialize a region so a campaign can be replayed elsewhere."""
    payload = {"pattern": region.pattern.value, "theta": region.theta, "seed": region.seed}
    if isinstance(region, BlockRegion):
        payload["lower"] = region.lower.tolist()
        payload["upper"] = region.upper.tolist()
    elif isinstance(region, StripRegion):
        payload["a"] = region.a.tolist()
        payload["b"] = region.b.tolist()
        payload["half_width"] = region.half_width
    else:
        payload["lowers"] = region.lowers.tolist()
        payload["uppers"] = region.uppers.tolist()
    return json.dumps(payload)


def region_from_text(text: str) -> FailureRegion:
    payload = json.loads(text)
    pattern = FailurePattern(payload["pattern"])
    theta = payload["theta"]
    seed = payload.get("seed")
    if pattern is FailurePattern.BLOCK:
        return BlockRegion(
            lower=np.asarray(payload["lower"]),
            upper=np.asarray(payload["upper"]),
            theta=theta,
            seed=seed,
        )
    if pattern is FailurePattern.STRIP:
        return StripRegion(
            a=np.asarray(payload["a"]),
            b=np.asarray(payload["b"]),
            half_width=payload["half_width"],
            theta=theta,
            seed=seed,
        )
    return PointRegion(
        lowers=np.asarray(payload["lowers"]),
        uppers=np.asarray(payload["uppers"]),
        theta=theta,
        seed=seed,
    )


class ExternalCommandOracle:
    """Failure oracle backed by an external program.

    The test point's coordinates are appended to ``argv`` as decimal
    literals; a nonzero exit status means the input failed.  This is the
    hook for driving a real system under test instead of a synthetic
    region; no subject programs ship with the library.
    """

    pattern = None
    theta = None

    def __init__(self, argv: list[str], timeout: float | None = None):
        self.argv = list(argv)
        self.timeout = timeout

    def contains(self, point) -> bool:
        cmd = self.argv + [repr(float(x)) for x in np.atleast_1d(point)]
        proc = subprocess.run(cmd, capture_output=True, timeout=self.timeout)
        return proc.returncode != 0


@dataclass(frozen=True)
class TrialRecord:
    """Outcome of one first-failure trial."""

    strategy: object
    pattern: FailurePattern | None
    d: int
    theta: float | None
    seed: int
    f_measure: int
    censored: bool
    gen_time_ns: int

    def __post_init__(self):
        if self.f_measure < 1:
            raise ValueError("f_measure counts the failing test, so it is >= 1")


def run_trial(
    config: GeneratorConfig, region, max_tests: int | None = None
) -> TrialRecord:
    """Generate tests until one lands in the region (or the budget runs out).

    ``gen_time_ns`` covers generation and bookkeeping only; membership
    checks are excluded so generation cost stays separable from execution
    cost.  Hitting ``max_tests`` yields a censored record with
    ``f_measure == max_tests``.
    """
    if max_tests is None:
        theta = getattr(region, "theta", None)
        if theta is None:
            raise ValueError("max_tests is required when the region has no theta")
        max_tests = math.ceil(10.0 / theta)
    if max_tests < 1:
        raise ValueError("max_tests must be >= 1")

    state = new_generator(config)
    gen_ns = 0
    executed = 0
    failed = False
    while executed < max_tests:
        t0 = time.perf_counter_ns()
        point = next_test_case(state)
        gen_ns += time.perf_counter_ns() - t0
        executed += 1
        failed = bool(region.contains(point))
        t0 = time.perf_counter_ns()
        record_outcome(state, point, failed)
        gen_ns += time.perf_counter_ns() - t0
        if failed:
            break
    return TrialRecord(
        strategy=config.strategy,
        pattern=getattr(region, "pattern", None),
        d=config.domain.dimension,
        theta=getattr(region, "theta", None),
        seed=config.seed,
        f_measure=executed,
        censored=not failed,
        gen_time_ns=gen_ns,
    )
