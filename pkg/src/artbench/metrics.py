"""Effectiveness, efficiency, and distribution metrics, plus rank statistics.

Everything here is a pure function over immutable inputs; the timing
harness is the one exception (it owns its generator states and should run
on a single core to keep wall-clock numbers clean).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy.stats import norm, rankdata

from .generators import GeneratorConfig, new_generator, next_test_case, record_outcome
from .geometry import InputDomain, RandomSource

EXACT_RANK_SUM_LIMIT = 12  # pooled size up to which the p-value is enumerated
_BOX_CHUNK = 128


@dataclass(frozen=True)
class SampleSummary:
    """A retained sample with its first two moments."""

    n: int
    mean: float
    std: float
    values: np.ndarray

    @classmethod
    def from_values(cls, values) -> "SampleSummary":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise ValueError("empty sample")
        return cls(n=v.size, mean=float(v.mean()), std=float(v.std(ddof=0)), values=v)


@dataclass(frozen=True)
class RankSumResult:
    z: float
    p_value: float
    effect_size_r: float


def f_ratio(f_art_mean: float, theta: float) -> float:
    """Mean F-measure as a percentage of the theoretical random-testing
    F-measure 1/theta."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    return 100.0 * f_art_mean * theta


def discrepancy(
    points: np.ndarray, domain: InputDomain, m: int, rng: RandomSource
) -> float:
    """Worst point-density mismatch over m random sub-boxes.

    Each sub-box takes per dimension an interval [u, u+s] with u and s
    uniform, clipped to the domain; the result is the max over boxes of
    |points-inside fraction - volume fraction|, always in [0, 1].
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty (n, d) array")
    if m < 1:
        raise ValueError("m must be >= 1")
    n = pts.shape[0]
    lo = rng.uniform(domain.lower, domain.upper, size=(m, domain.dimension))
    size = rng.uniform(0.0, domain.span, size=(m, domain.dimension))
    hi = np.minimum(lo + size, domain.upper)
    vol = ((hi - lo) / domain.span).prod(axis=1)
    worst = 0.0
    for start in range(0, m, _BOX_CHUNK):
        lo_c = lo[start : start + _BOX_CHUNK]
        hi_c = hi[start : start + _BOX_CHUNK]
        inside = (
            (pts >= lo_c[:, np.newaxis, :]) & (pts <= hi_c[:, np.newaxis, :])
        ).all(axis=-1)
        frac = inside.sum(axis=1) / n
        gap = np.abs(frac - vol[start : start + _BOX_CHUNK]).max()
        worst = max(worst, float(gap))
    return worst


def _exact_two_tailed_p(ranks: np.ndarray, n1: int, u_obs: float) -> float:
    """Permutation p: over all assignments of n1 pooled ranks, the share with
    a U-statistic at least as far from its mean as observed."""
    n = ranks.size
    offset = n1 * (n1 + 1) / 2.0
    mu = n1 * (n - n1) / 2.0
    obs_dev = abs(u_obs - mu)
    hits = 0
    total = 0
    for idx in combinations(range(n), n1):
        u = ranks[list(idx)].sum() - offset
        if abs(u - mu) >= obs_dev - 1e-9:
            hits += 1
        total += 1
    return hits / total


def wilcoxon_rank_sum(a, b) -> RankSumResult:
    """Two-tailed unpaired rank-sum comparison.

    The z statistic uses the tie-corrected normal approximation with a 0.5
    continuity correction (positive z means ``a`` ranks higher).  The
    p-value is enumerated exactly for pooled sizes up to
    ``EXACT_RANK_SUM_LIMIT`` and approximated normally beyond that.  Two
    samples with all values identical degenerate to z=0, p=1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = rankdata(np.concatenate([a, b]))
    u1 = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float((tie_counts**3 - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0

    if var <= 0.0:
        z = 0.0
        p = 1.0
    else:
        dev = u1 - mu
        corrected = max(abs(dev) - 0.5, 0.0)
        z = math.copysign(corrected, dev) / math.sqrt(var) if corrected else 0.0
        if n <= EXACT_RANK_SUM_LIMIT:
            p = _exact_two_tailed_p(ranks, n1, u1)
        else:
            p = min(1.0, 2.0 * float(norm.sf(abs(z))))
    return RankSumResult(z=z, p_value=p, effect_size_r=abs(z) / math.sqrt(n))


@dataclass(frozen=True)
class TimingRow:
    strategy: object
    d: int
    n: int
    mean_seconds: float


def timing_harness(
    config: GeneratorConfig,
    n_targets: list[int],
    repeats: int = 1,
    warmup_steps: int = 2000,
) -> list[TimingRow]:
    """Wall-clock cost of generating test cases, failure-free.

    One generation run per repeat covers max(n_targets) steps with the
    cumulative time checkpointed at each target; repeats (with derived
    seeds) are averaged and a shortened warm-up run is discarded first.
    """
    targets = list(n_targets)
    if not targets or targets != sorted(targets) or targets[0] < 1:
        raise ValueError("n_targets must be ascending positive test counts")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if warmup_steps > 0:
        _timed_generation(config, [min(warmup_steps, targets[-1])])
    totals = {n: 0.0 for n in targets}
    for rep in range(repeats):
        cfg = replace(config, seed=config.seed + rep)
        for n, elapsed in _timed_generation(cfg, targets).items():
            totals[n] += elapsed
    d = config.domain.dimension
    return [
        TimingRow(strategy=config.strategy, d=d, n=n, mean_seconds=totals[n] / repeats)
        for n in targets
    ]


def _timed_generation(config: GeneratorConfig, targets: list[int]) -> dict[int, float]:
    remaining = set(targets)
    out = {}
    state = new_generator(config)
    start = time.perf_counter()
    for i in range(1, targets[-1] + 1):
        point = next_test_case(state)
        record_outcome(state, point, False)
        if i in remaining:
            out[i] = time.perf_counter() - start
    return out
