import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artbench.generators import GeneratorConfig, Strategy
from artbench.geometry import InputDomain
from artbench.metrics import (
    RankSumResult,
    SampleSummary,
    discrepancy,
    f_ratio,
    timing_harness,
    wilcoxon_rank_sum,
)
from helpers import FixedUniform

UNIT_SQUARE = InputDomain.cube(0.0, 1.0, 2)
UNIT_LINE = InputDomain.cube(0.0, 1.0, 1)


# -- F-ratio ---------------------------------------------------------------


def test_f_ratio_parity_with_random_testing():
    assert f_ratio(1.0 / 0.004, 0.004) == pytest.approx(100.0)


def test_f_ratio_reference_point():
    assert f_ratio(69.68, 0.01) == pytest.approx(69.68)


def test_f_ratio_doubles_with_mean():
    theta = 0.0005
    assert f_ratio(2.0 / theta, theta) == pytest.approx(200.0)
    # linear in the mean
    assert f_ratio(350.0, 0.01) == pytest.approx(2 * f_ratio(175.0, 0.01))


def test_f_ratio_rejects_nonpositive_theta():
    with pytest.raises(ValueError):
        f_ratio(100.0, 0.0)


# -- sample summary ---------------------------------------------------------


def test_sample_summary_recomputable():
    values = [3.0, 1.0, 4.0, 1.0, 5.0]
    s = SampleSummary.from_values(values)
    assert s.n == len(values)
    assert s.mean == pytest.approx(np.mean(values))
    assert s.std == pytest.approx(np.std(values))
    assert np.array_equal(s.values, values)
    with pytest.raises(ValueError):
        SampleSummary.from_values([])


# -- discrepancy ------------------------------------------------------------


def test_discrepancy_whole_domain_box_contributes_zero():
    # force the single sub-box to be the whole domain: |1/1 - 1| = 0
    rng = FixedUniform([[[0.0, 0.0]], [[1.0, 1.0]]])
    single = np.array([[0.3, 0.7]])
    assert discrepancy(single, UNIT_SQUARE, m=1, rng=rng) == 0.0


def test_discrepancy_grid_beats_clump():
    grid = np.linspace(0.0, 1.0, 100)[:, np.newaxis]
    clump = np.full((100, 1), 1e-4)
    d_grid = discrepancy(grid, UNIT_LINE, 1000, np.random.default_rng(1))
    d_clump = discrepancy(clump, UNIT_LINE, 1000, np.random.default_rng(1))
    assert d_grid < d_clump


def test_discrepancy_bounds_and_validation():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, (500, 2))
    value = discrepancy(pts, UNIT_SQUARE, 200, rng)
    assert 0.0 <= value <= 1.0
    with pytest.raises(ValueError):
        discrepancy(np.empty((0, 2)), UNIT_SQUARE, 10, rng)
    with pytest.raises(ValueError):
        discrepancy(pts, UNIT_SQUARE, 0, rng)


def test_discrepancy_shrinks_with_more_uniform_points():
    medians = []
    for n in (100, 1000, 10000):
        values = [
            discrepancy(
                np.random.default_rng(100 + s).uniform(0, 1, (n, 2)),
                UNIT_SQUARE,
                400,
                np.random.default_rng(200 + s),
            )
            for s in range(9)
        ]
        medians.append(np.median(values))
    assert medians[0] > medians[1] > medians[2]


# -- rank-sum ---------------------------------------------------------------


def exact_rank_sum_p(a, b):
    """Independent oracle: enumerate every assignment of pooled values and
    count U statistics at least as extreme as observed (pairwise counting)."""
    pooled = list(a) + list(b)
    n1 = len(a)

    def u_of(ids):
        chosen = [pooled[i] for i in ids]
        rest = [pooled[i] for i in range(len(pooled)) if i not in set(ids)]
        u = 0.0
        for x in chosen:
            for y in rest:
                if x > y:
                    u += 1.0
                elif x == y:
                    u += 0.5
        return u

    mu = n1 * (len(pooled) - n1) / 2.0
    observed = abs(u_of(range(n1)) - mu)
    hits = total = 0
    for ids in combinations(range(len(pooled)), n1):
        if abs(u_of(ids) - mu) >= observed - 1e-9:
            hits += 1
        total += 1
    return hits / total


def test_identical_samples_degenerate():
    result = wilcoxon_rank_sum([5.0, 5.0, 5.0], [5.0, 5.0])
    assert result == RankSumResult(z=0.0, p_value=1.0, effect_size_r=0.0)


def test_separated_triples_reference():
    result = wilcoxon_rank_sum([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    # exact enumeration over C(6,3)=20 assignments gives 0.1 two-tailed
    assert result.p_value == pytest.approx(0.1)
    # z keeps the tie-corrected continuity-corrected normal form
    assert result.z == pytest.approx(-4.0 / math.sqrt(5.25))
    assert result.effect_size_r == pytest.approx(abs(result.z) / math.sqrt(6))


def test_effect_size_arithmetic():
    assert 12.3 / math.sqrt(20_000) == pytest.approx(0.08697, abs=1e-4)
    a = np.arange(30.0)
    b = np.arange(30.0) + 4.0
    result = wilcoxon_rank_sum(a, b)
    assert result.effect_size_r == pytest.approx(abs(result.z) / math.sqrt(60))
    assert 0.0 <= result.effect_size_r <= 1.0


def test_small_sample_p_matches_exact_oracle():
    rng = np.random.default_rng(31)
    shapes = [(n1, n2) for n1 in range(1, 10) for n2 in range(1, 10) if n1 + n2 <= 10]
    for n1, n2 in shapes:
        for rep in range(4):
            if rep % 2 == 0:
                a = rng.normal(size=n1)
                b = rng.normal(size=n2)
            else:  # heavy ties
                a = rng.integers(0, 3, size=n1).astype(float)
                b = rng.integers(0, 3, size=n2).astype(float)
            got = wilcoxon_rank_sum(a, b).p_value
            want = exact_rank_sum_p(a, b)
            assert got == pytest.approx(want, abs=0.02), (n1, n2, a, b)


def test_large_sample_normal_branch_stays_close_to_exact():
    rng = np.random.default_rng(32)
    a = rng.normal(size=8)
    b = rng.normal(size=8) + 0.5
    got = wilcoxon_rank_sum(a, b).p_value
    assert got == pytest.approx(exact_rank_sum_p(a, b), abs=0.05)


def test_swap_flips_z_keeps_p():
    rng = np.random.default_rng(33)
    a = rng.normal(size=40)
    b = rng.normal(size=50) + 0.3
    r1 = wilcoxon_rank_sum(a, b)
    r2 = wilcoxon_rank_sum(b, a)
    assert r1.z == pytest.approx(-r2.z)
    assert r1.p_value == pytest.approx(r2.p_value)
    assert r1.effect_size_r == pytest.approx(r2.effect_size_r)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["affine", "exp", "cube"]))
@settings(max_examples=60, deadline=None)
def test_p_invariant_under_monotone_transforms(seed, kind):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=12)
    b = rng.normal(size=15) + rng.normal() * 0.5
    if kind == "affine":
        f = lambda x: 2.5 * x + 1.0
    elif kind == "exp":
        f = np.exp
    else:
        f = lambda x: x**3
    base = wilcoxon_rank_sum(a, b)
    moved = wilcoxon_rank_sum(f(a), f(b))
    assert moved.p_value == pytest.approx(base.p_value)
    assert moved.z == pytest.approx(base.z)


def test_empty_sample_rejected():
    with pytest.raises(ValueError):
        wilcoxon_rank_sum([], [1.0])


# -- timing harness ----------------------------------------------------------


def test_timing_harness_basic_shape():
    config = GeneratorConfig(strategy=Strategy.RANDOM_TESTING, domain=UNIT_SQUARE, seed=0)
    rows = timing_harness(config, [1, 50], repeats=2, warmup_steps=10)
    assert [(r.n, r.d, r.strategy) for r in rows] == [
        (1, 2, Strategy.RANDOM_TESTING),
        (50, 2, Strategy.RANDOM_TESTING),
    ]
    assert rows[0].mean_seconds > 0.0
    assert math.isfinite(rows[1].mean_seconds)
    assert rows[0].mean_seconds <= rows[1].mean_seconds


def test_timing_harness_validates_targets():
    config = GeneratorConfig(strategy=Strategy.RANDOM_TESTING, domain=UNIT_SQUARE, seed=0)
    with pytest.raises(ValueError):
        timing_harness(config, [100, 50])
    with pytest.raises(ValueError):
        timing_harness(config, [])
    with pytest.raises(ValueError):
        timing_harness(config, [10], repeats=0)
