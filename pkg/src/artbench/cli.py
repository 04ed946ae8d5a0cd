"""Batch experiment driver: simulate | bench | discrepancy | recall.

A campaign is configured by a YAML file plus flag overrides and emits
plot-ready CSV (and, for simulations, a JSON summary with the pairwise
rank-sum comparisons).  All randomness derives from one campaign seed, so
identical configs replay to identical trial rows.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .failures import (
    CalibrationError,
    FailurePattern,
    PlacementError,
    make_region,
    run_trial,
)
from .generators import GeneratorConfig, Strategy, new_generator, next_test_case, record_outcome
from .geometry import InputDomain, sample_many
from .hnsw import HnswParams, SmallWorldIndex
from .metrics import (
    SampleSummary,
    discrepancy,
    f_ratio,
    timing_harness,
    wilcoxon_rank_sum,
)

DEFAULT_DOMAIN = (-5000.0, 5000.0)
DEFAULT_N_TARGETS = [500, 1000, 2000, 5000, 10000, 20000]
DEFAULT_DISCREPANCY_COUNTS = [100, 1000, 10000]
DEFAULT_RECALL_EFS = [1, 2, 4]

TRIALS_CSV = "trials.csv"
SUMMARY_JSON = "summary.json"
BENCH_CSV = "bench.csv"
DISCREPANCY_CSV = "discrepancy.csv"
RECALL_CSV = "recall.csv"


class ConfigError(ValueError):
    """Bad campaign configuration; reported with exit code 1."""


@dataclass
class CampaignConfig:
    strategies: list[Strategy] = field(
        default_factory=lambda: [
            Strategy.RANDOM_TESTING,
            Strategy.FSCS_BRUTE_FORCE,
            Strategy.FSCS_KD_TREE,
            Strategy.SWFC_ART,
        ]
    )
    dimensions: list[int] = field(default_factory=lambda: [2])
    thetas: list[float] = field(default_factory=lambda: [0.01])
    patterns: list[FailurePattern] = field(
        default_factory=lambda: [FailurePattern.BLOCK]
    )
    trials: int = 100
    seed: int = 0
    n_targets: list[int] = field(default_factory=lambda: list(DEFAULT_N_TARGETS))
    output_path: str = "artbench-out"
    jobs: int = 1
    k: int = 10
    domain_low: float = DEFAULT_DOMAIN[0]
    domain_high: float = DEFAULT_DOMAIN[1]
    bench_repeats: int = 1
    discrepancy_counts: list[int] = field(
        default_factory=lambda: list(DEFAULT_DISCREPANCY_COUNTS)
    )
    discrepancy_m: int = 1000
    recall_points: int = 500
    recall_queries: int = 1000
    recall_efs: list[int] = field(default_factory=lambda: list(DEFAULT_RECALL_EFS))

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.thetas or any(not 0.0 < t < 1.0 for t in self.thetas):
            raise ConfigError(f"thetas must lie in (0, 1), got {self.thetas}")
        if not self.dimensions or any(d < 1 for d in self.dimensions):
            raise ConfigError(f"dimensions must be >= 1, got {self.dimensions}")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.patterns:
            raise ConfigError("at least one pattern is required")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.domain_low >= self.domain_high:
            raise ConfigError("domain_low must be below domain_high")
        if not self.n_targets or self.n_targets != sorted(self.n_targets):
            raise ConfigError("n_targets must be an ascending list")

    def domain(self, dimension: int) -> InputDomain:
        return InputDomain.cube(self.domain_low, self.domain_high, dimension)


def _parse_strategy(name: str) -> Strategy:
    try:
        return Strategy(name)
    except ValueError:
        valid = ", ".join(s.value for s in Strategy)
        raise ConfigError(f"unknown strategy {name!r}; pick from: {valid}") from None


def _parse_pattern(name: str) -> FailurePattern:
    try:
        return FailurePattern(name)
    except ValueError:
        valid = ", ".join(p.value for p in FailurePattern)
        raise ConfigError(f"unknown pattern {name!r}; pick from: {valid}") from None


def load_campaign(path: str | None, overrides: argparse.Namespace) -> CampaignConfig:
    cfg = CampaignConfig()
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a mapping")
        known = set(CampaignConfig.__dataclass_fields__)
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "strategies":
                value = [_parse_strategy(v) for v in value]
            elif key == "patterns":
                value = [_parse_pattern(v) for v in value]
            setattr(cfg, key, value)

    if overrides.out is not None:
        cfg.output_path = overrides.out
    if overrides.trials is not None:
        cfg.trials = overrides.trials
    if overrides.seed is not None:
        cfg.seed = overrides.seed
    elif path is None or "seed" not in (raw or {}):
        cfg.seed = int(os.environ.get("ART_SEED", cfg.seed))
    if overrides.jobs is not None:
        cfg.jobs = overrides.jobs
    if overrides.strategy:
        cfg.strategies = [_parse_strategy(s) for s in overrides.strategy.split(",")]
    if overrides.dims:
        cfg.dimensions = [int(d) for d in overrides.dims.split(",")]
    if overrides.thetas:
        cfg.thetas = [float(t) for t in overrides.thetas.split(",")]
    if overrides.pattern:
        cfg.patterns = [_parse_pattern(p) for p in overrides.pattern.split(",")]
    cfg.validate()
    return cfg


# -- simulate -----------------------------------------------------------


def _region_rng(cfg: CampaignConfig, pattern, d, theta, trial) -> np.random.Generator:
    # regions are shared across strategies: same cell + trial, same region
    return np.random.default_rng(
        [cfg.seed, trial, d, list(FailurePattern).index(pattern), int(theta * 10**9)]
    )


def _run_trial_cell(args) -> list[dict]:
    cfg, pattern, d, theta, trial = args
    domain = cfg.domain(d)
    region = make_region(pattern, domain, theta, _region_rng(cfg, pattern, d, theta, trial), seed=trial)
    max_tests = math.ceil(10.0 / theta)
    rows = []
    for strategy in cfg.strategies:
        gen = GeneratorConfig(strategy=strategy, domain=domain, k=cfg.k, seed=cfg.seed + trial)
        record = run_trial(gen, region, max_tests=max_tests)
        rows.append(
            {
                "strategy": strategy.value,
                "pattern": pattern.value,
                "d": d,
                "theta": theta,
                "seed": record.seed,
                "f_measure": record.f_measure,
                "censored": int(record.censored),
                "gen_time_ns": record.gen_time_ns,
            }
        )
    return rows


def cmd_simulate(cfg: CampaignConfig) -> list[Path]:
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (cfg, pattern, d, theta, trial)
        for pattern in cfg.patterns
        for d in cfg.dimensions
        for theta in cfg.thetas
        for trial in range(cfg.trials)
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_trial_cell, jobs, chunksize=4))
    else:
        results = [_run_trial_cell(job) for job in jobs]
    rows = [row for batch in results for row in batch]
    order = {s.value: i for i, s in enumerate(cfg.strategies)}
    rows.sort(
        key=lambda r: (r["pattern"], r["d"], r["theta"], r["seed"], order[r["strategy"]])
    )

    trials_path = out_dir / TRIALS_CSV
    with trials_path.open("w", newline="") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "strategy", "pattern", "d", "theta", "seed",
                "f_measure", "censored", "gen_time_ns",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)

    summary = {"seed": cfg.seed, "trials": cfg.trials, "cells": []}
    for pattern in cfg.patterns:
        for d in cfg.dimensions:
            for theta in cfg.thetas:
                cell_rows = [
                    r
                    for r in rows
                    if r["pattern"] == pattern.value and r["d"] == d and r["theta"] == theta
                ]
                samples = {
                    s.value: SampleSummary.from_values(
                        [r["f_measure"] for r in cell_rows if r["strategy"] == s.value]
                    )
                    for s in cfg.strategies
                }
                entry = {
                    "pattern": pattern.value,
                    "d": d,
                    "theta": theta,
                    "strategies": {},
                    "comparisons": {},
                }
                for s in cfg.strategies:
                    sample = samples[s.value]
                    entry["strategies"][s.value] = {
                        "mean_f_measure": sample.mean,
                        "std_f_measure": sample.std,
                        "f_ratio": f_ratio(sample.mean, theta),
                        "censored": int(
                            sum(
                                r["censored"]
                                for r in cell_rows
                                if r["strategy"] == s.value
                            )
                        ),
                    }
                for i, s1 in enumerate(cfg.strategies):
                    for s2 in cfg.strategies[i + 1 :]:
                        res = wilcoxon_rank_sum(
                            samples[s1.value].values, samples[s2.value].values
                        )
                        entry["comparisons"][f"{s1.value}_vs_{s2.value}"] = {
                            "z": res.z,
                            "p_value": res.p_value,
                            "effect_size_r": res.effect_size_r,
                        }
                summary["cells"].append(entry)
    summary_path = out_dir / SUMMARY_JSON
    summary_path.write_text(json.dumps(summary, indent=2) + "\n")
    return [trials_path, summary_path]


# -- bench --------------------------------------------------------------


def _fit_slope(ns, seconds) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(seconds, float)), 1)[0])


def cmd_bench(cfg: CampaignConfig) -> list[Path]:
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    bench_path = out_dir / BENCH_CSV
    with bench_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "d", "n", "mean_ms", "slope"])
        for strategy in cfg.strategies:
            for d in cfg.dimensions:
                gen = GeneratorConfig(
                    strategy=strategy, domain=cfg.domain(d), k=cfg.k, seed=cfg.seed
                )
                series = timing_harness(gen, cfg.n_targets, repeats=cfg.bench_repeats)
                slope = _fit_slope([r.n for r in series], [r.mean_seconds for r in series])
                for row in series:
                    writer.writerow(
                        [strategy.value, d, row.n, f"{row.mean_seconds * 1e3:.3f}", f"{slope:.4f}"]
                    )
    return [bench_path]


# -- discrepancy --------------------------------------------------------


def cmd_discrepancy(cfg: CampaignConfig) -> list[Path]:
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = sorted(cfg.discrepancy_counts)
    path = out_dir / DISCREPANCY_CSV
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "d", "n", "discrepancy"])
        for strategy in cfg.strategies:
            for d in cfg.dimensions:
                domain = cfg.domain(d)
                gen = GeneratorConfig(strategy=strategy, domain=domain, k=cfg.k, seed=cfg.seed)
                state = new_generator(gen)
                for n in counts:
                    while state.count < n:
                        point = next_test_case(state)
                        record_outcome(state, point, False)
                    boxes_rng = np.random.default_rng([cfg.seed, d, n])
                    value = discrepancy(
                        state.executed_matrix(), domain, cfg.discrepancy_m, boxes_rng
                    )
                    writer.writerow([strategy.value, d, n, f"{value:.6f}"])
    return [path]


# -- recall -------------------------------------------------------------


def _brute_nn_sqdist(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], 256):
        chunk = queries[start : start + 256]
        diff = points[np.newaxis, :, :] - chunk[:, np.newaxis, :]
        out[start : start + 256] = (diff * diff).sum(axis=-1).min(axis=1)
    return out


def cmd_recall(cfg: CampaignConfig) -> list[Path]:
    out_dir = Path(cfg.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RECALL_CSV
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "n", "ef", "recall_at_1"])
        for d in cfg.dimensions:
            domain = cfg.domain(d)
            rng = np.random.default_rng(cfg.seed)
            points = sample_many(domain, rng, cfg.recall_points)
            index = SmallWorldIndex(d, HnswParams.for_dimension(d, base_capacity=max(cfg.recall_points, 2)))
            for p in points:
                index.insert(p, rng)
            queries = sample_many(domain, rng, cfg.recall_queries)
            true_d2 = _brute_nn_sqdist(points, queries)
            for ef in cfg.recall_efs:
                _, dists = index.nearest_many(queries, ef=ef)
                hits = np.isclose(dists**2, true_d2, rtol=1e-9, atol=1e-12)
                writer.writerow(
                    [d, cfg.recall_points, ef, f"{hits.mean():.4f}"]
                )
    return [path]


# -- entry point --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; config errors are 1
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="artbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "failure-detection trials over the experiment grid"),
        ("bench", "generation-time scaling per strategy and dimension"),
        ("discrepancy", "test-case distribution uniformity"),
        ("recall", "graph search accuracy against brute force"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML campaign file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--strategy", help="comma-separated: rt,fscs-bf,fscs-kd,swfc")
        p.add_argument("--dims", help="comma-separated dimensions")
        p.add_argument("--thetas", help="comma-separated failure rates")
        p.add_argument("--pattern", help="comma-separated: block,strip,point")
    return parser


_COMMANDS = {
    "simulate": cmd_simulate,
    "bench": cmd_bench,
    "discrepancy": cmd_discrepancy,
    "recall": cmd_recall,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = load_campaign(args.config, args)
    except ConfigError as exc:
        print(f"artbench: config error: {exc}", file=sys.stderr)
        return 1
    try:
        written = _COMMANDS[args.command](cfg)
    except (CalibrationError, PlacementError, RuntimeError, OSError) as exc:
        print(f"artbench: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
