"""End-to-end tests for the command-line interface."""

import csv
import json

import pytest
import yaml

from cgpo.cli import main

SMALL_CONFIG = {
    "run": {
        "total_iterations": 25,
        "batch_size": 6,
        "group_size": 4,
        "seed": 0,
    },
    "environment": {
        "tiers": [
            {"count": 20, "low": -0.5, "high": 0.0, "category": 0},
            {"count": 20, "low": 0.3, "high": 0.9, "category": 0},
        ],
    },
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(SMALL_CONFIG))
    return str(path)


def run_simulate(tmp_path, config_path, *extra):
    out = tmp_path / "run"
    code = main(
        ["simulate", "--config", config_path, "--out", str(out), *extra]
    )
    return code, out


class TestSimulate:
    def test_writes_expected_artifacts(self, tmp_path, config_path, capsys):
        code, out = run_simulate(tmp_path, config_path)
        assert code == 0
        for name in (
            "metrics.jsonl",
            "summary.json",
            "config.yaml",
            "checkpoint_final.json",
            "probability_list.tsv",
            "reward_curve.png",
            "tier_occupancy.png",
        ):
            assert (out / name).exists(), name
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["iterations"] == 25
        assert summary["strategy"] == "cgpo"
        assert 0.0 < summary["final_eval_reward"] < 1.0

    def test_no_plot_skips_figures(self, tmp_path, config_path):
        code, out = run_simulate(tmp_path, config_path, "--no-plot")
        assert code == 0
        assert not (out / "reward_curve.png").exists()
        assert (out / "metrics.jsonl").exists()

    def test_override_changes_strategy(self, tmp_path, config_path, capsys):
        code, out = run_simulate(
            tmp_path, config_path, "--set", "run.strategy=uniform"
        )
        assert code == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["strategy"] == "uniform"
        saved = yaml.safe_load((out / "config.yaml").read_text())
        assert saved["run"]["strategy"] == "uniform"

    def test_seed_flag_overrides_config(self, tmp_path, config_path):
        code, out = run_simulate(tmp_path, config_path, "--seed", "7")
        assert code == 0
        saved = yaml.safe_load((out / "config.yaml").read_text())
        assert saved["run"]["seed"] == 7

    def test_bad_override_key_is_usage_error(self, tmp_path, config_path, capsys):
        code = main(
            [
                "simulate",
                "--config",
                config_path,
                "--out",
                str(tmp_path / "x"),
                "--set",
                "run.no_such_knob=3",
            ]
        )
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "no_such_knob" in err["message"]

    def test_bad_value_is_usage_error(self, tmp_path, config_path):
        code = main(
            [
                "simulate",
                "--config",
                config_path,
                "--out",
                str(tmp_path / "x"),
                "--set",
                "run.strategy=bogus",
            ]
        )
        assert code == 1


class TestSweep:
    def test_lambda_grid(self, tmp_path, config_path, capsys):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--config",
                config_path,
                "--out",
                str(out),
                "--grid",
                "calibration.lam=0,10",
                "--no-plot",
            ]
        )
        assert code == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["calibration.lam"] for r in rows] == ["0", "10"]
        assert all(r["status"] == "ok" for r in rows)
        assert all(0 < float(r["final_eval_reward"]) < 1 for r in rows)

    def test_empty_grid_rejected(self, tmp_path, config_path):
        code = main(
            [
                "sweep",
                "--config",
                config_path,
                "--out",
                str(tmp_path / "s"),
                "--grid",
                "calibration.lam=",
            ]
        )
        assert code == 1

    def test_bad_point_recorded_not_fatal(self, tmp_path, config_path):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--config",
                config_path,
                "--out",
                str(out),
                "--grid",
                "calibration.lam=-1,5",
                "--no-plot",
            ]
        )
        assert code == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["status"] == "failed"
        assert rows[1]["status"] == "ok"

    def test_plot_rendered(self, tmp_path, config_path):
        out = tmp_path / "sweep"
        code = main(
            [
                "sweep",
                "--config",
                config_path,
                "--out",
                str(out),
                "--grid",
                "run.seed=0,1",
            ]
        )
        assert code == 0
        assert (out / "sweep.png").exists()


class TestCalibrate:
    def test_worked_example(self, tmp_path, capsys):
        rewards = tmp_path / "rewards.txt"
        rewards.write_text("0.5 0.25\n")
        code = main(["calibrate", "--rewards", str(rewards), "--lam", "10"])
        assert code == 0
        text = capsys.readouterr().out
        # v = [1/3, 2/3] so w = [1 + 10/3, 1 + 20/3]
        assert "4.33333333" in text
        assert "7.66666667" in text
        deviation = float(text.strip().splitlines()[-1].split("=")[-1])
        assert deviation < 1e-6

    def test_missing_file_usage_error(self, tmp_path):
        code = main(
            ["calibrate", "--rewards", str(tmp_path / "nope.txt"), "--lam", "1"]
        )
        assert code == 1

    def test_negative_lambda_usage_error(self, tmp_path):
        rewards = tmp_path / "rewards.txt"
        rewards.write_text("0.5 0.5\n")
        code = main(["calibrate", "--rewards", str(rewards), "--lam", "-2"])
        assert code == 1


class TestInspect:
    def test_lists_extremes(self, tmp_path, config_path, capsys):
        _, out = run_simulate(tmp_path, config_path, "--no-plot")
        capsys.readouterr()
        code = main(
            [
                "inspect",
                "--checkpoint",
                str(out / "checkpoint_final.json"),
                "--top",
                "3",
            ]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "iteration 25, 40 prompts" in text
        assert "top 3 by probability:" in text
        assert "bottom 3 by probability:" in text

    def test_non_checkpoint_rejected(self, tmp_path, config_path):
        _, out = run_simulate(tmp_path, config_path, "--no-plot")
        code = main(
            ["inspect", "--checkpoint", str(out / "metrics.jsonl")]
        )
        assert code == 1


class TestExport:
    @pytest.fixture
    def metrics_log(self, tmp_path, config_path):
        _, out = run_simulate(tmp_path, config_path, "--no-plot")
        return str(out / "metrics.jsonl")

    def test_reward_curve_schema(self, tmp_path, metrics_log):
        dest = tmp_path / "curve.csv"
        code = main(
            [
                "export",
                "--log",
                metrics_log,
                "--kind",
                "reward-curve",
                "--out",
                str(dest),
                "--no-plot",
            ]
        )
        assert code == 0
        with open(dest, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0].keys() == {"iter", "reward_avg", "reward_std_mean"}
        # Initialization row has no batch statistics.
        assert rows[0]["reward_avg"] == ""
        assert len(rows) == 26
        for row in rows[1:]:
            assert 0.0 <= float(row["reward_avg"]) <= 1.0

    def test_tier_occupancy_initial_row_full(self, tmp_path, metrics_log):
        dest = tmp_path / "occ.csv"
        code = main(
            [
                "export",
                "--log",
                metrics_log,
                "--kind",
                "tier-occupancy",
                "--out",
                str(dest),
                "--no-plot",
            ]
        )
        assert code == 0
        with open(dest, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0] == {"iter": "0", "tier1": "20", "tier2": "20"}

    def test_category_weights_with_plot(self, tmp_path, metrics_log):
        dest = tmp_path / "weights.csv"
        code = main(
            [
                "export",
                "--log",
                metrics_log,
                "--kind",
                "category-weights",
                "--out",
                str(dest),
            ]
        )
        assert code == 0
        assert (tmp_path / "weights.png").exists()
        with open(dest, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0].keys() == {"iter", "w0"}

    def test_rejects_non_metrics_file(self, tmp_path, metrics_log):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"kind":"something-else"}\n')
        code = main(
            [
                "export",
                "--log",
                str(bad),
                "--kind",
                "reward-curve",
                "--out",
                str(tmp_path / "x.csv"),
            ]
        )
        assert code == 1
