import json
from pathlib import Path

import pytest

from mexi.cli import main
from mexi.session import parse_reference, parse_session, parse_task


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    """A small generated population shared by the CLI tests."""
    out = tmp_path_factory.mktemp("pop")
    rc = main([
        "generate", "--seed", "5", "--out", str(out),
        "--n", "10", "--m", "10", "--density", "0.06", "--per-archetype", "4",
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def model_path(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model") / "model.json"
    rc = main([
        "train", "--seed", "0",
        "--sessions", str(data_dir / "sessions"),
        "--task", str(data_dir / "task.json"),
        "--ref", str(data_dir / "reference.csv"),
        "--out", str(out),
        "--variant", "mexi_base", "--epochs", "1",
        "--bins-x", "16", "--bins-y", "16",
    ])
    assert rc == 0
    return out


class TestGenerate:
    def test_layout_and_contents(self, data_dir):
        task = parse_task((data_dir / "task.json").read_bytes())
        assert task.n == 10 and task.m == 10
        ref = parse_reference((data_dir / "reference.csv").read_bytes(), task)
        assert len(ref) == 6
        session_files = sorted((data_dir / "sessions").glob("*.json"))
        assert len(session_files) == 16
        parse_session(session_files[0].read_bytes(), task)  # must validate
        manifest = json.loads((data_dir / "manifest.json").read_text())
        assert set(manifest["archetypes"].values()) == {"A", "B", "C", "D"}
        assert manifest["config"]["seed"] == 5

    def test_generation_reproducible(self, data_dir, tmp_path):
        rc = main([
            "generate", "--seed", "5", "--out", str(tmp_path),
            "--n", "10", "--m", "10", "--density", "0.06", "--per-archetype", "4",
        ])
        assert rc == 0
        for name in sorted(p.name for p in (data_dir / "sessions").iterdir()):
            assert (tmp_path / "sessions" / name).read_bytes() == (
                data_dir / "sessions" / name
            ).read_bytes()


class TestLabel:
    def test_label_csv(self, data_dir, tmp_path):
        out = tmp_path / "labels.csv"
        rc = main([
            "label", "--seed", "0",
            "--sessions", str(data_dir / "sessions"),
            "--task", str(data_dir / "task.json"),
            "--ref", str(data_dir / "reference.csv"),
            "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# seed=0 delta_p=0.5 delta_r=0.5")
        assert lines[1] == "matcher_id,P,R,Res,Res_p,Cal,precise,thorough,correlated,calibrated"
        assert len(lines) == 2 + 16
        row = lines[2].split(",")
        assert row[6] in ("1", "-1")  # label columns are signed


class TestTrainPredictFeatures:
    def test_model_artifact(self, model_path):
        doc = json.loads(model_path.read_text())
        assert doc["format"] == "mexi-model/1"
        assert len(doc["schema"]) == 54

    def test_predict_csv(self, data_dir, model_path, tmp_path):
        out = tmp_path / "preds.csv"
        rc = main([
            "predict", "--model", str(model_path),
            "--sessions", str(data_dir / "sessions"), "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[1].startswith("matcher_id,precise,thorough,correlated,calibrated")
        assert len(lines) == 2 + 16

    def test_features_csv(self, data_dir, model_path, tmp_path):
        out = tmp_path / "features.csv"
        rc = main([
            "features", "--model", str(model_path),
            "--sessions", str(data_dir / "sessions"), "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text().splitlines()
        header = lines[1].split(",")
        assert len(header) == 1 + 54
        assert header[1] == "lrsm.dominants"
        assert len(lines[2].split(",")) == 1 + 54


class TestEvaluate:
    def test_evaluate_outputs(self, data_dir, tmp_path):
        out = tmp_path / "eval"
        rc = main([
            "evaluate", "--seed", "0",
            "--sessions", str(data_dir / "sessions"),
            "--task", str(data_dir / "task.json"),
            "--ref", str(data_dir / "reference.csv"),
            "--out", str(out),
            "--variant", "mexi_base", "--epochs", "1",
            "--bins-x", "16", "--bins-y", "16",
            "--k", "3", "--baselines", "rand,conf", "--bootstrap", "200",
        ])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["k_folds"] == 3
        assert set(report["bootstrap_p"]) == {"mexi_vs_rand", "mexi_vs_conf"}
        acc_lines = (out / "accuracy.csv").read_text().splitlines()
        assert acc_lines[0] == "method,A_P,A_R,A_Res,A_Cal,A_ML"
        assert (out / "utilization.csv").exists()
        preds = (out / "predictions.csv").read_text().splitlines()
        assert preds[0] == "matcher_id,fold,method,precise,thorough,correlated,calibrated"
        # report subcommand renders it without error
        assert main(["report", "--report", str(out / "report.json")]) == 0


class TestHeatmap:
    def test_pgm_and_csv_outputs(self, data_dir, tmp_path):
        session = sorted((data_dir / "sessions").glob("*.json"))[0]
        out = tmp_path / "hm"
        rc = main([
            "heatmap", "--session", str(session),
            "--task", str(data_dir / "task.json"), "--out", str(out),
            "--bins-x", "32", "--bins-y", "24",
        ])
        assert rc == 0
        for name in ("move", "left_click", "right_click", "scroll"):
            pgm = (out / f"{name}.pgm").read_bytes()
            assert pgm.startswith(b"P5\n")
            csv = (out / f"{name}.csv").read_text().splitlines()
            assert len(csv) == 24
            assert len(csv[0].split(",")) == 32

    def test_heatmap_mass_in_comment(self, data_dir, tmp_path):
        session_path = sorted((data_dir / "sessions").glob("*.json"))[0]
        out = tmp_path / "hm"
        main([
            "heatmap", "--session", str(session_path),
            "--task", str(data_dir / "task.json"), "--out", str(out),
        ])
        task = parse_task((data_dir / "task.json").read_bytes())
        session = parse_session(session_path.read_bytes(), task)
        moves = sum(1 for ev in session.movement if ev.kind == "move")
        header = (out / "move.pgm").read_bytes().split(b"\n")[1]
        assert header == f"# kind=move events={moves}".encode()


class TestConfigAndErrors:
    def test_config_file_fills_defaults_flags_override(self, data_dir, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("per-archetype=2\nn=8\nm=8\ndensity=0.08\n")
        out = tmp_path / "pop"
        rc = main([
            "generate", "--seed", "1", "--config", str(cfg),
            "--out", str(out), "--n", "12",  # flag overrides config's n=8
        ])
        assert rc == 0
        task = parse_task((out / "task.json").read_bytes())
        assert task.n == 12  # flag wins
        assert task.m == 8  # config fills the default
        assert len(list((out / "sessions").glob("*.json"))) == 8

    def test_usage_error_exit_1(self):
        assert main(["label", "--seed", "0"]) == 1  # missing required flags
        assert main(["frobnicate"]) == 1

    def test_data_error_exit_2(self, data_dir, tmp_path):
        rc = main([
            "label", "--seed", "0",
            "--sessions", str(tmp_path),  # no session files
            "--task", str(data_dir / "task.json"),
            "--ref", str(data_dir / "reference.csv"),
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2

    def test_missing_task_file_exit_2(self, data_dir, tmp_path):
        rc = main([
            "label", "--seed", "0",
            "--sessions", str(data_dir / "sessions"),
            "--task", str(tmp_path / "nope.json"),
            "--ref", str(data_dir / "reference.csv"),
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == 2

    def test_malformed_config_line_exit_2(self, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("not a pair\n")
        rc = main(["generate", "--seed", "1", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 2
