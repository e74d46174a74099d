"""CLI: config schema, artifacts, exit codes, determinism."""

import json

import numpy as np
import pytest

from ambilearn.ambiguity import radius_epsilon
from ambilearn.cli import main
from ambilearn.config import ConfigError, config_to_dict, parse_config
from ambilearn.runlog import RunLogSchemaError, read_run_log, robot_columns


def unicycle_config(out_dir, **scenario_extra):
    scenario = {
        "kind": "unicycle",
        "steps": 260,
        "T0": 60,
        "sigma": 0.5,
        "zones": {"default_e": [0.0, 0.0],
                  "regions": [{"rect": [0.15, 60.0, -5.0, 5.0], "e": [4.0, 0.0]}]},
    }
    scenario.update(scenario_extra)
    return {"mode": "simulate", "out_dir": str(out_dir), "seed": 5,
            "scenario": scenario}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


class TestSimulate:
    def test_writes_expected_artifacts(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, unicycle_config(out))
        assert main(["--config", cfg, "--no-plots"]) == 0
        data = read_run_log(out / "run.csv", required=robot_columns(3))
        assert len(data["t"]) == 260
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["final_alpha"]) == 3
        records = [json.loads(line)
                   for line in (out / "ambiguity.jsonl").read_text().splitlines()]
        assert records[-1]["t"] == 260
        assert len(records[-1]["atoms"]) == 60

    def test_concentration_only_drops_higher_order_term(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path, unicycle_config(out))
        assert main(["--config", cfg, "--no-plots",
                     "--radius-mode", "concentration_only"]) == 0
        data = read_run_log(out / "run.csv")
        T = min(260, 60)
        expected = radius_epsilon(T, 0.05, 3, 0.5, include_higher_order=False)
        assert data["eps"][-1] == pytest.approx(expected, rel=1e-12)
        # Full mode is strictly larger by the higher-order term.
        assert data["eps"][-1] < radius_epsilon(T, 0.05, 3, 0.5)

    def test_seeded_runs_are_byte_identical(self, tmp_path):
        cfg_a = write_config(tmp_path, unicycle_config(tmp_path / "a"), "a.json")
        cfg_b = write_config(tmp_path, unicycle_config(tmp_path / "b"), "b.json")
        assert main(["--config", cfg_a, "--no-plots"]) == 0
        assert main(["--config", cfg_b, "--no-plots"]) == 0
        assert (tmp_path / "a" / "run.csv").read_bytes() == \
               (tmp_path / "b" / "run.csv").read_bytes()

    def test_generic_mixture_simulate(self, tmp_path):
        out = tmp_path / "gen"
        cfg = write_config(tmp_path, {
            "mode": "simulate", "out_dir": str(out), "seed": 1,
            "scenario": {
                "kind": "generic", "dim_state": 1, "dim_input": 1,
                "steps": 60, "T0": 20, "sigma": 0.2, "theta": 0.01,
                "truth": {"alpha_star": [0.7, 0.3]},
                "predictors": [
                    {"name": "scalar_linear", "params": {"a": 0.6, "b": 1.0}},
                    {"name": "affine", "params": {"A": [[0.3]], "B": [[0.0]],
                                                  "c": [0.5]}}],
                "noise": {"kind": "gaussian", "covariance": [[0.04]], "sigma": 0.2},
                "d_schedule": {"kind": "sine", "base": 1.0, "amp": 0.5, "period": 20},
            }})
        assert main(["--config", cfg, "--no-plots"]) == 0
        data = read_run_log(out / "run.csv")
        assert len(data["t"]) == 60
        assert "x_1" in data

    def test_known_f_simulate_is_usage_error(self, tmp_path):
        cfg = write_config(tmp_path, {
            "mode": "simulate", "out_dir": str(tmp_path / "x"),
            "scenario": {
                "kind": "generic", "dim_state": 1, "dim_input": 1,
                "steps": 10, "T0": 10, "sigma": 0.5,
                "truth": {"predictor": "scalar_linear", "params": {"a": 1.0, "b": 0.0}},
                "noise": {"kind": "gaussian", "covariance": [[0.25]], "sigma": 0.5},
            }})
        assert main(["--config", cfg, "--no-plots"]) == 2


class TestVerify:
    def scalar_config(self, out):
        return {
            "mode": "verify", "out_dir": str(out), "seed": 0, "seeds": 10,
            "scenario": {
                "kind": "generic", "dim_state": 1, "dim_input": 1,
                "steps": 50, "T0": 50, "beta": 0.05, "sigma": 0.5,
                "truth": {"predictor": "scalar_linear", "params": {"a": 0.8, "b": 1.0}},
                "noise": {"kind": "gaussian", "covariance": [[0.25]], "sigma": 0.5},
                "d_schedule": {"kind": "sine"},
            },
            "verify": {"n_reference_atoms": 2000},
        }

    def test_known_f_coverage_passes(self, tmp_path, capsys):
        out = tmp_path / "v"
        cfg = write_config(tmp_path, self.scalar_config(out))
        assert main(["--config", cfg]) == 0
        text = capsys.readouterr().out
        assert "coverage 1.0000" in text and "floor 0.9500" in text
        lines = (out / "verify.csv").read_text().splitlines()
        assert len(lines) == 11  # header + 10 seeds
        summary = json.loads((out / "verify_summary.json").read_text())
        assert summary["passed"] is True

    def test_zero_trials_is_usage_error(self, tmp_path):
        data = self.scalar_config(tmp_path / "v")
        data["seeds"] = 0
        cfg = write_config(tmp_path, data)
        assert main(["--config", cfg]) == 2

    def test_missing_seeds_is_usage_error(self, tmp_path):
        data = self.scalar_config(tmp_path / "v")
        del data["seeds"]
        cfg = write_config(tmp_path, data)
        assert main(["--config", cfg]) == 2


class TestSweep:
    def test_curves_monotone_and_ordered(self, tmp_path):
        out = tmp_path / "sw"
        data = unicycle_config(out, steps=420, T0=80)
        data["mode"] = "sweep"
        data["sweep"] = {"T0_grid": [50, 100, 300]}
        cfg = write_config(tmp_path, data)
        assert main(["--config", cfg, "--no-plots"]) == 0
        rows = (out / "sweep.csv").read_text().splitlines()
        header = rows[0].split(",")
        assert header[:4] == ["t", "conf_T0_50", "conf_T0_100", "conf_T0_300"]
        table = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        for j in (1, 2, 3):
            col = table[:, j]
            assert np.all(np.diff(col) >= -1e-12)       # monotone in t
            assert col[-1] < 0.95                        # asymptote below 1 - beta
        # Larger horizon cap gives higher steady confidence.
        assert table[-1, 1] < table[-1, 2] < table[-1, 3]

    def test_empty_grid_is_usage_error(self, tmp_path):
        data = unicycle_config(tmp_path / "sw")
        data["mode"] = "sweep"
        cfg = write_config(tmp_path, data)
        assert main(["--config", cfg]) == 2


class TestConfigSchema:
    def test_unknown_key_rejected_with_path(self, tmp_path):
        data = unicycle_config(tmp_path / "o")
        data["scenario"]["typo_key"] = 1
        with pytest.raises(ConfigError, match="typo_key"):
            parse_config(data)

    def test_unknown_top_level_key_exit_code(self, tmp_path, capsys):
        data = unicycle_config(tmp_path / "o")
        data["bogus"] = True
        cfg = write_config(tmp_path, data)
        assert main(["--config", cfg]) == 2
        assert "bogus" in capsys.readouterr().err

    def test_invalid_json_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.json")]) == 2

    def test_round_trip_identity(self, tmp_path):
        for builder in (unicycle_config(tmp_path / "o"),
                        TestVerify().scalar_config(tmp_path / "v")):
            rc1 = parse_config(builder)
            d1 = config_to_dict(rc1)
            rc2 = parse_config(d1)
            assert config_to_dict(rc2) == d1

    def test_bundled_configs_parse(self):
        from pathlib import Path
        from ambilearn.config import load_config
        for path in Path("configs").glob("*.json"):
            rc = load_config(path)
            assert rc.mode in ("simulate", "verify", "sweep")


class TestRunLogReader:
    def test_missing_required_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,alpha_1\n1,0.5\n")
        with pytest.raises(RunLogSchemaError, match="missing columns"):
            read_run_log(path, required=robot_columns(3))

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("t,gamma\n1,0.5\n2\n")
        with pytest.raises(RunLogSchemaError, match="row 3"):
            read_run_log(path)
