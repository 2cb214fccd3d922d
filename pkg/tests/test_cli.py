"""Command line: end-to-end pipelines over temp files, plus error paths."""

import csv
import json

import numpy as np
import pytest

from chip.cli import main
from chip.network import EventLog
from chip.spectral import adjusted_rand


def run(*argv):
    return main([str(a) for a in argv])


SIM_ARGS = [
    "simulate",
    "--n", 36, "--k", 3,
    "--mu-diag", 0.02, "--mu-off", 0.002,
    "--alpha-diag", 0.5, "--alpha-off", 0.5,
    "--beta-diag", 1.0, "--beta-off", 1.0,
    "--horizon", 200, "--seed", 4,
]


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim")
    code = run(*SIM_ARGS, "--out", path / "events.csv", "--labels-out", path / "truth.csv")
    assert code == 0
    return path


def read_labels(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([int(r["label"]) for r in rows])


class TestSimulate:
    def test_writes_log_and_labels(self, sim_dir, capsys):
        log = EventLog.from_csv(sim_dir / "events.csv")
        assert log.n == 36
        assert log.horizon == 200.0
        assert len(log) > 100
        labels = read_labels(sim_dir / "truth.csv")
        assert labels.shape == (36,)
        assert set(labels) == {0, 1, 2}

    def test_same_seed_reproduces_bytes(self, tmp_path):
        run(*SIM_ARGS, "--out", tmp_path / "a.csv")
        run(*SIM_ARGS, "--out", tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_config_file_supplies_parameters(self, tmp_path):
        cfg = tmp_path / "model.yaml"
        cfg.write_text(
            "n: 12\nk: 2\nhorizon: 50\nmu_diag: 0.05\nmu_off: 0.01\n"
            "alpha_diag: 0.1\nalpha_off: 0.1\nbeta_diag: 0.5\nbeta_off: 0.5\n"
        )
        code = run("simulate", "--config", cfg, "--seed", 1, "--out", tmp_path / "e.csv")
        assert code == 0
        assert EventLog.from_csv(tmp_path / "e.csv").n == 12

    def test_matrix_config_uses_general_model(self, tmp_path):
        cfg = tmp_path / "model.json"
        cfg.write_text(json.dumps({
            "n": 10, "k": 2, "horizon": 40.0,
            "mu": [[0.08, 0.01], [0.01, 0.08]],
            "alpha": [[0.0, 0.0], [0.0, 0.0]],
            "beta": [[1.0, 1.0], [1.0, 1.0]],
        }))
        code = run("simulate", "--config", cfg, "--assignment", "sampled",
                   "--seed", 2, "--out", tmp_path / "e.csv")
        assert code == 0
        assert EventLog.from_csv(tmp_path / "e.csv").n == 10

    def test_missing_parameters_exit_with_usage_error(self, tmp_path):
        with pytest.raises(SystemExit):
            run("simulate", "--n", 10, "--k", 2, "--out", tmp_path / "e.csv")


class TestCluster:
    def test_recovers_planted_blocks(self, sim_dir, tmp_path):
        code = run("cluster", sim_dir / "events.csv", "--k", 3, "--seed", 1,
                   "--out", tmp_path / "labels.csv")
        assert code == 0
        truth = read_labels(sim_dir / "truth.csv")
        pred = read_labels(tmp_path / "labels.csv")
        assert adjusted_rand(truth, pred) > 0.9

    def test_auto_k_and_singular_values(self, sim_dir, tmp_path, capsys):
        code = run("cluster", sim_dir / "events.csv", "--k", "auto", "--k-max", 6,
                   "--seed", 1, "--out", tmp_path / "labels.csv",
                   "--singular-values", tmp_path / "sv.csv")
        assert code == 0
        out = capsys.readouterr().out
        assert "k=" in out
        with open(tmp_path / "sv.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 6
        values = [float(r["value"]) for r in rows]
        assert values == sorted(values, reverse=True)

    def test_undirected_mode_runs(self, sim_dir, tmp_path):
        code = run("cluster", sim_dir / "events.csv", "--k", 3, "--mode", "undirected",
                   "--seed", 1, "--out", tmp_path / "labels.csv")
        assert code == 0
        assert read_labels(tmp_path / "labels.csv").shape == (36,)

    def test_bad_k_token_is_an_argument_error(self, sim_dir, tmp_path):
        with pytest.raises(SystemExit):
            run("cluster", sim_dir / "events.csv", "--k", "three",
                "--out", tmp_path / "labels.csv")


class TestFit:
    def test_fit_writes_parameter_json(self, sim_dir, tmp_path):
        code = run("fit", sim_dir / "events.csv", "--k", 3, "--seed", 1,
                   "--ci", "--out", tmp_path / "fit.json")
        assert code == 0
        fit = json.loads((tmp_path / "fit.json").read_text())
        assert fit["k"] == 3
        assert len(fit["mu"]) == 3
        assert sum(fit["block_sizes"]) == 36
        assert fit["ci"]["theta"] == 0.05
        assert len(fit["ci"]["mu_differences"]) == 2 * 3 * 2
        mu = np.array(fit["mu"], dtype=np.float64)
        diag = np.trace(mu) / 3
        off = (mu.sum() - np.trace(mu)) / 6
        assert diag > 3 * off  # planted contrast 0.02 vs 0.002

    def test_fit_with_given_labels_skips_clustering(self, sim_dir, tmp_path):
        code = run("fit", sim_dir / "events.csv", "--labels", sim_dir / "truth.csv",
                   "--out", tmp_path / "fit.json")
        assert code == 0
        fit = json.loads((tmp_path / "fit.json").read_text())
        assert fit["block_sizes"] == [12, 12, 12]

    def test_fit_prints_json_without_out(self, sim_dir, capsys):
        assert run("fit", sim_dir / "events.csv", "--k", 3) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["n"] == 36

    def test_conflicting_k_and_labels_rejected(self, sim_dir, tmp_path):
        with pytest.raises(SystemExit):
            run("fit", sim_dir / "events.csv", "--k", 2,
                "--labels", sim_dir / "truth.csv")


class TestEval:
    def test_reports_both_models(self, sim_dir, tmp_path, capsys):
        code = run("eval", sim_dir / "events.csv", "--k", 3, "--test-fraction", 0.2,
                   "--seed", 1, "--out", tmp_path / "eval.json")
        assert code == 0
        out = capsys.readouterr().out
        assert "chip test LL per event" in out
        assert "poisson test LL per event" in out
        payload = json.loads((tmp_path / "eval.json").read_text())
        assert set(payload) == {"chip", "poisson"}
        assert payload["chip"]["n_test_events"] == payload["poisson"]["n_test_events"]

    def test_single_model_and_test_count(self, sim_dir, capsys):
        code = run("eval", sim_dir / "events.csv", "--k", 3, "--model", "poisson",
                   "--test-count", 40)
        assert code == 0
        assert "poisson" in capsys.readouterr().out

    def test_both_split_flags_rejected(self, sim_dir):
        with pytest.raises(SystemExit):
            run("eval", sim_dir / "events.csv", "--k", 3,
                "--test-fraction", 0.2, "--test-count", 40)

    def test_raw_pipeline_writes_report_directory(self, sim_dir, tmp_path):
        code = run("eval", sim_dir / "events.csv", "--raw", "--k", 3,
                   "--seed", 1, "--out", tmp_path / "report")
        assert code == 0
        report = json.loads((tmp_path / "report" / "report.json").read_text())
        assert report["k"] == 3
        assert (tmp_path / "report" / "ci_m.csv").exists()


class TestExperiment:
    def test_list_prints_registry(self, capsys):
        assert run("experiment", "--list") == 0
        out = capsys.readouterr().out
        assert "detection-rates" in out and "mse-decay" in out

    def test_run_with_grid_flags(self, tmp_path, capsys):
        code = run("experiment", "detection-rates", "--out", tmp_path,
                   "--grid", "n=24", "--replicates", 2, "--seed", 3)
        assert code == 0
        assert "4 rows" in capsys.readouterr().out
        assert (tmp_path / "detection-rates_replicates.csv").exists()

    def test_config_file_with_flag_overrides(self, tmp_path):
        cfg = tmp_path / "exp.yaml"
        cfg.write_text(
            "experiment: detection-rates\nreplicates: 1\nseed: 9\n"
            "grid:\n  n: [24]\n"
        )
        code = run("experiment", "--config", cfg, "--out", tmp_path / "a")
        assert code == 0
        code = run("experiment", "--config", cfg, "--out", tmp_path / "b",
                   "--replicates", 2)
        assert code == 0
        manifest = json.loads((tmp_path / "b" / "detection-rates_manifest.json").read_text())
        assert manifest["replicates"] == 2
        assert manifest["seed"] == 9

    def test_cli_rerun_is_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            run("experiment", "fig2a", "--out", tmp_path / sub,
                "--grid", "n=24", "--replicates", 1, "--seed", 5)
        name = "detection-rates_replicates.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unknown_name_fails_cleanly(self, tmp_path, capsys):
        code = run("experiment", "nope", "--out", tmp_path)
        assert code == 1
        assert "unknown experiment" in capsys.readouterr().err

    def test_malformed_grid_flag_rejected(self, tmp_path):
        with pytest.raises(SystemExit):
            run("experiment", "detection-rates", "--out", tmp_path, "--grid", "n")


class TestIngest:
    def test_normalizes_and_reports(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text(
            "sender,receiver,timestamp\n"
            "u,v,10\nv,w,20\nw,u,30\nu,u,35\nv,u,40\n"
        )
        code = run("ingest", raw, "--out", tmp_path / "clean.csv",
                   "--tokens", tmp_path / "tokens.csv")
        assert code == 0
        out = capsys.readouterr().out
        assert "self_edges_dropped=1" in out
        log = EventLog.from_csv(tmp_path / "clean.csv")
        assert log.n == 3
        assert log.times[0] == 0.0 and log.times[-1] == 1000.0
        with open(tmp_path / "tokens.csv", newline="") as fh:
            tokens = [r["token"] for r in csv.DictReader(fh)]
        assert tokens == ["u", "v", "w"]

    def test_malformed_file_exits_nonzero(self, tmp_path, capsys):
        raw = tmp_path / "raw.csv"
        raw.write_text("sender,receiver,timestamp\nu,v,not_a_number\n")
        code = run("ingest", raw, "--out", tmp_path / "clean.csv")
        assert code == 1
        assert ":2:" in capsys.readouterr().err

    def test_missing_file_exits_nonzero(self, tmp_path, capsys):
        code = run("ingest", tmp_path / "absent.csv", "--out", tmp_path / "c.csv")
        assert code == 1
        assert capsys.readouterr().err.startswith("error:")
