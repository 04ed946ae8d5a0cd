import csv
import json
import numpy as np
import pytest
import yaml

from artbench.cli import main
from artbench.metrics import f_ratio


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_cli(*argv):
    return main(list(argv))


# -- simulate ---------------------------------------------------------------


@pytest.fixture(scope="module")
def small_simulation(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = run_cli(
        "simulate",
        "--out", str(out),
        "--strategy", "rt,fscs-bf",
        "--dims", "2",
        "--thetas", "0.05",
        "--pattern", "block",
        "--trials", "10",
        "--seed", "5",
    )
    assert code == 0
    return out


def test_simulate_row_accounting(small_simulation):
    rows = read_csv(small_simulation / "trials.csv")
    assert len(rows) == 20  # 2 strategies x 10 trials
    summary = json.loads((small_simulation / "summary.json").read_text())
    assert len(summary["cells"]) == 1
    assert len(summary["cells"][0]["comparisons"]) == 1


def test_simulate_rows_have_unique_keys(small_simulation):
    rows = read_csv(small_simulation / "trials.csv")
    keys = [(r["strategy"], r["d"], r["theta"], r["pattern"], r["seed"]) for r in rows]
    assert len(set(keys)) == len(keys)


def test_simulate_summary_recomputable_from_rows(small_simulation):
    rows = read_csv(small_simulation / "trials.csv")
    summary = json.loads((small_simulation / "summary.json").read_text())
    cell = summary["cells"][0]
    for strategy, stats in cell["strategies"].items():
        fs = [int(r["f_measure"]) for r in rows if r["strategy"] == strategy]
        assert stats["mean_f_measure"] == pytest.approx(np.mean(fs))
        assert stats["f_ratio"] == pytest.approx(f_ratio(np.mean(fs), 0.05))


def test_simulate_replays_identically(small_simulation, tmp_path):
    out2 = tmp_path / "replay"
    code = run_cli(
        "simulate",
        "--out", str(out2),
        "--strategy", "rt,fscs-bf",
        "--dims", "2",
        "--thetas", "0.05",
        "--pattern", "block",
        "--trials", "10",
        "--seed", "5",
    )
    assert code == 0

    def stripped(path):
        return [
            {k: v for k, v in row.items() if k != "gen_time_ns"}
            for row in read_csv(path)
        ]

    assert stripped(small_simulation / "trials.csv") == stripped(out2 / "trials.csv")


def test_simulate_parallel_jobs_match_serial(small_simulation, tmp_path):
    out2 = tmp_path / "jobs"
    code = run_cli(
        "simulate",
        "--out", str(out2),
        "--strategy", "rt,fscs-bf",
        "--dims", "2",
        "--thetas", "0.05",
        "--pattern", "block",
        "--trials", "10",
        "--seed", "5",
        "--jobs", "3",
    )
    assert code == 0

    def stripped(path):
        return [
            {k: v for k, v in row.items() if k != "gen_time_ns"}
            for row in read_csv(path)
        ]

    assert stripped(small_simulation / "trials.csv") == stripped(out2 / "trials.csv")


# -- bench / discrepancy / recall --------------------------------------------


def test_bench_emits_series_with_slope(tmp_path):
    cfg = tmp_path / "bench.yaml"
    cfg.write_text(
        yaml.safe_dump(
            {
                "strategies": ["rt", "swfc"],
                "dimensions": [2],
                "n_targets": [20, 60, 120],
                "seed": 1,
            }
        )
    )
    out = tmp_path / "bench-out"
    assert run_cli("bench", "--config", str(cfg), "--out", str(out)) == 0
    rows = read_csv(out / "bench.csv")
    assert [(r["strategy"], int(r["n"])) for r in rows] == [
        ("rt", 20), ("rt", 60), ("rt", 120),
        ("swfc", 20), ("swfc", 60), ("swfc", 120),
    ]
    for row in rows:
        assert float(row["mean_ms"]) > 0.0
        float(row["slope"])  # parseable
    slopes = {r["strategy"]: r["slope"] for r in rows}
    assert len(set(slopes.values())) == 2  # one fit per series


def test_discrepancy_outputs_values_in_range(tmp_path):
    cfg = tmp_path / "disc.yaml"
    cfg.write_text(
        yaml.safe_dump(
            {
                "strategies": ["rt", "fscs-bf"],
                "dimensions": [1, 2],
                "discrepancy_counts": [50, 150],
                "discrepancy_m": 300,
                "seed": 7,
            }
        )
    )
    out = tmp_path / "disc-out"
    assert run_cli("discrepancy", "--config", str(cfg), "--out", str(out)) == 0
    rows = read_csv(out / "discrepancy.csv")
    assert len(rows) == 2 * 2 * 2
    for row in rows:
        assert 0.0 <= float(row["discrepancy"]) <= 1.0


def test_recall_sweep(tmp_path):
    cfg = tmp_path / "recall.yaml"
    cfg.write_text(
        yaml.safe_dump(
            {
                "dimensions": [2],
                "recall_points": 120,
                "recall_queries": 80,
                "recall_efs": [1, 2],
                "seed": 3,
            }
        )
    )
    out = tmp_path / "recall-out"
    assert run_cli("recall", "--config", str(cfg), "--out", str(out)) == 0
    rows = read_csv(out / "recall.csv")
    assert [int(r["ef"]) for r in rows] == [1, 2]
    values = [float(r["recall_at_1"]) for r in rows]
    assert all(0.0 <= v <= 1.0 for v in values)
    assert values[1] >= 0.8


# -- config handling ----------------------------------------------------------


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"trials": 3, "thetas": [0.2], "seed": 11}))
    out = tmp_path / "o"
    code = run_cli(
        "simulate",
        "--config", str(cfg),
        "--out", str(out),
        "--strategy", "rt",
        "--trials", "5",
    )
    assert code == 0
    assert len(read_csv(out / "trials.csv")) == 5


def test_seed_falls_back_to_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ART_SEED", "42")
    out = tmp_path / "env"
    code = run_cli(
        "simulate",
        "--out", str(out),
        "--strategy", "rt",
        "--thetas", "0.2",
        "--trials", "2",
    )
    assert code == 0
    rows = read_csv(out / "trials.csv")
    assert [r["seed"] for r in rows] == ["42", "43"]


def test_config_errors_exit_one(tmp_path, capsys):
    assert run_cli("simulate", "--trials", "0", "--out", str(tmp_path / "x")) == 1
    assert "trials" in capsys.readouterr().err
    assert run_cli("simulate", "--strategy", "warp-drive") == 1
    assert "warp-drive" in capsys.readouterr().err
    assert run_cli("no-such-command") == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump({"mystery_knob": 1}))
    assert run_cli("simulate", "--config", str(bad)) == 1


def test_runtime_errors_exit_two(tmp_path, capsys):
    # point blocks at theta=0.9 cannot be placed disjointly
    code = run_cli(
        "simulate",
        "--out", str(tmp_path / "r"),
        "--strategy", "rt",
        "--pattern", "point",
        "--thetas", "0.9",
        "--trials", "1",
        "--seed", "0",
    )
    assert code == 2
    assert "disjoint" in capsys.readouterr().err
