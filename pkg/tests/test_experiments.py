import json
import subprocess
import sys

import pytest

from cyclecast import experiments as ex

TINY = dict(
    epochs=6,
    seeds=(0, 1),
    baseline_kinds=("logistic", "dnn"),
    save_checkpoints=False,
)


def tiny_config(**overrides):
    return ex.ExperimentConfig(**{**TINY, **overrides})


@pytest.fixture(scope="module")
def main_report():
    return ex.run_main(tiny_config(kind="main"))


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        config = tiny_config(kind="sweep-w", sweep_windows=(2, 3))
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        again = ex.ExperimentConfig.from_json(str(path))
        assert again == config
        assert again.config_hash() == config.config_hash()

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError):
            ex.ExperimentConfig.from_dict({"bogus": 1})

    def test_empty_seeds_rejected(self):
        with pytest.raises(ValueError):
            ex.ExperimentConfig(seeds=())


class TestRunMain:
    def test_deterministic_kind_has_zero_std(self, main_report):
        logistic = next(m for m in main_report["models"] if m["model"] == "logistic")
        assert all(logistic["aggregate"][k]["std"] == 0.0 for k in logistic["aggregate"])

    def test_test_axis_is_2004_through_2020(self, main_report):
        months = main_report["probability_series"]["months"]
        assert months[0] == "2004-01"
        assert months[-1] == "2020-06"
        assert len(months) == 198

    def test_probability_series_aligns_with_test_windows(self, main_report):
        series = main_report["probability_series"]
        assert len(series["bilstm_aa_mean"]) == len(series["months"]) == len(series["labels"])

    def test_models_share_window_tensor(self, main_report):
        assert "window_tensor_sha256" in main_report
        for m in main_report["models"]:
            assert m["config_hash"] == main_report["config_hash"]

    def test_rerun_is_byte_identical(self, tmp_path, main_report):
        report2 = ex.run_main(tiny_config(kind="main"))
        p1 = tmp_path / "a"
        p2 = tmp_path / "b"
        files1 = ex.emit_report(main_report, str(p1))
        files2 = ex.emit_report(report2, str(p2))
        for f1, f2 in zip(files1, files2):
            assert open(f1, "rb").read() == open(f2, "rb").read()

    def test_emit_json_round_trips(self, tmp_path, main_report):
        paths = ex.emit_report(main_report, str(tmp_path))
        loaded = json.load(open(paths[0]))
        assert loaded == json.loads(json.dumps(main_report, sort_keys=True))

    def test_csv_has_one_row_per_model(self, tmp_path, main_report):
        paths = ex.emit_report(main_report, str(tmp_path), formats=("csv",))
        rows = open(paths[0]).read().splitlines()
        assert len(rows) == 1 + 1 + len(TINY["baseline_kinds"])  # header + ours + baselines


class TestFeatureAblation:
    def test_masks_and_dimensions(self):
        config = tiny_config(kind="ablate-features", seeds=(0,), epochs=2, baseline_kinds=())
        report = ex.run_feature_ablation(config)
        rows = report["models"]
        assert [tuple(r["feature_mask"]) for r in rows] == list(ex.FEATURE_MASKS)
        dims = {tuple(r["feature_mask"]): r["feature_dim"] for r in rows}
        assert dims[("raw",)] == 14
        assert dims[("d1", "d2")] == 28
        assert dims[("raw", "d1", "d2")] == 42


class TestComponentAblation:
    def test_variant_parameter_counts(self):
        config = tiny_config(kind="ablate-components", seeds=(0,), epochs=2, baseline_kinds=())
        report = ex.run_component_ablation(config)
        by_name = {r["model"]: r for r in report["models"]}
        assert set(by_name) == {"no_attention", "unidirectional_lstm", "no_autoencoder", "full"}
        assert by_name["unidirectional_lstm"]["parameter_count"] < by_name["full"]["parameter_count"]

    def test_full_variant_equals_main_model_row(self, main_report):
        config = tiny_config(kind="ablate-components", baseline_kinds=())
        report = ex.run_component_ablation(config)
        full = next(r for r in report["models"] if r["model"] == "full")
        ours = next(r for r in main_report["models"] if r["model"] == "bilstm_aa")
        assert full["per_run"] == ours["per_run"]

    def test_no_autoencoder_trains_without_reconstruction(self, windows_by_split):
        from cyclecast import bilstm_aa as m

        config = tiny_config(kind="main").train_config(0, use_autoencoder=False, epochs=2)
        _, hist = m.train(windows_by_split["train"][:40], config, None)
        assert all(e["reconstruction"] == 0.0 for e in hist["epochs"])


class TestTimestepSweep:
    def test_eleven_rows_with_shrinking_windows(self):
        config = tiny_config(kind="sweep-w", seeds=(0,), epochs=2, sweep_windows=(2, 6, 12))
        report = ex.run_timestep_sweep(config)
        rows = {r["w"]: r["n_windows"] for r in report["models"]}
        assert rows[6] == 731
        assert rows[12] == 731 - 6
        assert rows[2] == 731 + 4
        assert "best_accuracy_w" in report

    def test_default_covers_2_through_12(self):
        assert ex.ExperimentConfig().sweep_windows == (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12)


class TestEarlyPrediction:
    def test_k0_matches_main_per_seed(self, main_report):
        config = tiny_config(kind="early", early_offsets=(0,))
        report = ex.run_early_prediction(config)
        ours_main = next(m for m in main_report["models"] if m["model"] == "bilstm_aa")
        ours_k0 = report["models"][0]
        assert ours_k0["k"] == 0
        assert ours_k0["per_run"] == ours_main["per_run"]

    def test_each_offset_drops_one_trailing_window(self):
        config = tiny_config(kind="early", early_offsets=(1, 2, 3), epochs=2, seeds=(0,))
        report = ex.run_early_prediction(config)
        counts = {r["k"]: r["n_test_windows"] for r in report["models"]}
        assert counts == {1: 197, 2: 196, 3: 195}

    def test_k3_includes_all_baselines(self):
        config = tiny_config(
            kind="early", early_offsets=(3,), epochs=2, seeds=(0,), baseline_kinds=("logistic", "probit")
        )
        report = ex.run_early_prediction(config)
        rivals = report["models"][0]["baselines_at_k3"]
        assert [r["model"] for r in rivals] == ["logistic", "probit"]


@pytest.fixture(scope="module")
def sens_report():
    config = tiny_config(
        kind="sensitivity",
        seeds=(0,),
        epochs=4,
        sensitivity_factors=(0.9, 1.0, 1.1),
    )
    return ex.run_sensitivity(config)


class TestSensitivity:
    def test_grid_cardinality(self, sens_report):
        assert len(sens_report["grid"]) == 2 * 3
        for entry in sens_report["grid"]:
            assert set(entry["onsets"]) == {"2007-12", "2020-02"}

    def test_identity_factor_matches_baseline_run(self, sens_report):
        rows = {(e["series"], e["factor"]): e for e in sens_report["grid"]}
        assert rows[("BAA", 1.0)]["onsets"] == rows[("INDPRO", 1.0)]["onsets"]
        assert rows[("BAA", 1.0)]["positive_months"] == rows[("INDPRO", 1.0)]["positive_months"]

    def test_unknown_series_rejected(self):
        with pytest.raises(Exception):
            ex.run_sensitivity(tiny_config(kind="sensitivity", sensitivity_series=("NOPE",)))

    def test_csv_emission(self, tmp_path, sens_report):
        paths = ex.emit_report(sens_report, str(tmp_path))
        csv = [p for p in paths if p.endswith(".csv")][0]
        lines = open(csv).read().splitlines()
        assert lines[0].startswith("series,factor")
        assert len(lines) == 1 + 6


class TestParallelJobs:
    def test_jobs_do_not_change_results(self):
        seq = ex.run_main(tiny_config(kind="main", jobs=1))
        par = ex.run_main(tiny_config(kind="main", jobs=2))
        # the jobs knob appears in the config echo but must not change content
        seq["config"].pop("jobs")
        par["config"].pop("jobs")
        assert json.dumps(seq, sort_keys=True) == json.dumps(par, sort_keys=True)


class TestCli:
    def _run(self, *argv):
        return subprocess.run(
            [sys.executable, "-m", "cyclecast.cli", *argv],
            capture_output=True,
            text=True,
        )

    def test_run_main_via_cli(self, tmp_path):
        config = tiny_config(kind="main", out_dir=str(tmp_path / "out"))
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config.to_dict()))
        proc = self._run("run", "main", "--config", str(cfg_path))
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "out" / "main.json").exists()
        assert (tmp_path / "out" / "main.csv").exists()

    def test_failure_emits_machine_readable_record(self, tmp_path):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({"data_dir": str(tmp_path / "missing")}))
        proc = self._run("run", "main", "--config", str(cfg_path))
        assert proc.returncode == 1
        record = json.loads(proc.stderr.strip().splitlines()[-1])
        assert "error" in record and "message" in record

    def test_cli_flag_overrides(self, tmp_path):
        config = tiny_config(kind="main", seeds=(0,), epochs=2, baseline_kinds=())
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config.to_dict()))
        out = tmp_path / "flagged"
        proc = self._run("run", "main", "--config", str(cfg_path), "--out", str(out), "--jobs", "1")
        assert proc.returncode == 0, proc.stderr
        report = json.load(open(out / "main.json"))
        assert report["config"]["out_dir"] == str(out)
