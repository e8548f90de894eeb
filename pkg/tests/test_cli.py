"""End-to-end CLI tests on a tiny cohort: artifacts, hashes, exit codes."""
import hashlib
import json
from pathlib import Path

import pytest

from ecg_har.cli import main

FAST_CONFIG = {
    "subjects": 4,
    "duration_s": 10.0,
    "desk_scale": True,
    "batch_size": 16,
    "stages": [{"lr": 1e-3, "min_lr": 1e-6, "epochs": 2, "weight_decay": 0.0}],
}


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """A tiny synth -> preprocess -> split -> train -> evaluate run."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "config.json"
    config.write_text(json.dumps(FAST_CONFIG))
    out = root / "run"
    base = ["--config", str(config), "--seed", "5", "--out", str(out)]
    for command in ("synth", "preprocess", "split"):
        assert main([command, *base]) == 0
    assert main(["train", *base, "--model", "cnn"]) == 0
    assert main(["evaluate", *base, "--model", "cnn"]) == 0
    return config, out


def _tree_bytes(path: Path) -> dict:
    return {p.relative_to(path).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(path.rglob("*")) if p.is_file()}


def test_synth_deterministic(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(FAST_CONFIG))
    for out in ("a", "b"):
        assert main(["synth", "--config", str(config), "--seed", "7",
                     "--out", str(tmp_path / out)]) == 0
    assert _tree_bytes(tmp_path / "a" / "cohort") == _tree_bytes(tmp_path / "b" / "cohort")


def test_pipeline_artifacts(pipeline_dir):
    _, out = pipeline_dir
    for name in ("cohort/cohort.json", "windows.bin", "split.json",
                 "model_cnn.json", "model_cnn.bin", "train_report_cnn.json",
                 "metrics_cnn.json", "manifest.json"):
        assert (out / name).exists(), name
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["stages"]) >= {"synth", "preprocess", "split",
                                       "train:cnn", "evaluate:cnn"}
    metrics = json.loads((out / "metrics_cnn.json").read_text())
    assert 0.0 <= metrics["metrics"]["accuracy"] <= 1.0


def test_preprocess_window_count(pipeline_dir):
    _, out = pipeline_dir
    raw = (out / "windows.bin").read_bytes()
    header = json.loads(raw[: raw.index(b"\n")])
    # 4 subjects x 6 activities x 4 windows (10 s -> 500 samples -> 4 windows)
    assert len(header["windows"]) == 4 * 6 * 4


def test_rerun_is_idempotent(pipeline_dir):
    config, out = pipeline_dir
    before = (out / "split.json").read_bytes()
    assert main(["split", "--config", str(config), "--seed", "5",
                 "--out", str(out)]) == 0
    assert (out / "split.json").read_bytes() == before


def test_tamper_detection_and_force(pipeline_dir, capsys):
    config, out = pipeline_dir
    windows = out / "windows.bin"
    original = windows.read_bytes()
    try:
        windows.write_bytes(original[:-1] + bytes([original[-1] ^ 1]))
        base = ["--config", str(config), "--seed", "5", "--out", str(out)]
        assert main(["split", *base]) == 2
        assert "modified" in capsys.readouterr().err
        assert main(["split", *base, "--force"]) == 0
    finally:
        windows.write_bytes(original)
        assert main(["split", "--config", str(config), "--seed", "5",
                     "--out", str(out)]) == 0


def test_missing_artifact_names_prior_subcommand(tmp_path, capsys):
    assert main(["split", "--out", str(tmp_path / "empty")]) == 2
    assert "preprocess" in capsys.readouterr().err
    assert main(["report", "--out", str(tmp_path / "empty")]) == 2
    assert "scaling-study" in capsys.readouterr().err


def test_validation_exit_codes(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path), "--jobs", "0"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"model": "mlp"}))
    assert main(["synth", "--config", str(bad), "--out", str(tmp_path)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"frobnicate": 1}))
    assert main(["synth", "--config", str(unknown), "--out", str(tmp_path)]) == 2
