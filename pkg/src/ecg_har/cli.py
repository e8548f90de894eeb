"""Command-line pipeline: synth | preprocess | split | train | evaluate |
scaling-study | report.

Each subcommand reads the previous stage's artifacts from the output
directory and writes its own; `manifest.json` records input/output hashes,
the effective-config hash, the seed, and the tool version. A stage refuses
to run when an input artifact no longer matches the hash its producer
recorded (pass --force to override). Exit codes: 0 success, 2 validation
error, 1 runtime error.
"""
import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datamodel import Cohort, ScalingPlan, SplitSpec, subject_split
from .dataset import cohort_arrays, load_windows, read_cohort_dir, save_windows, write_cohort_dir
from .errors import EcgHarError, InvalidArgumentError
from .evaluate import (
    evaluate_model,
    points_from_audit,
    report_emit,
    scaling_study,
)
from .models import MODEL_BUILDERS, build_model
from .nn.checkpoint import load_checkpoint
from .preprocess import preprocess_recording
from .synth import generate_cohort
from .train import DEFAULT_STAGES, StageConfig, run_protocol

MANIFEST = "manifest.json"
COHORT_DIR = "cohort"
WINDOWS_FILE = "windows.bin"
SPLIT_FILE = "split.json"
SCALING_DIR = "scaling"

_UPSTREAM = {
    COHORT_DIR: "synth",
    WINDOWS_FILE: "preprocess",
    SPLIT_FILE: "split",
    SCALING_DIR: "scaling-study",
}


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _hash_artifact(path: Path) -> str:
    """Hash a file, or a directory as the hash of its sorted file hashes."""
    if path.is_dir():
        digest = hashlib.sha256()
        for child in sorted(p for p in path.rglob("*") if p.is_file()):
            digest.update(child.relative_to(path).as_posix().encode())
            digest.update(bytes.fromhex(_sha256_file(child)))
        return digest.hexdigest()
    return _sha256_file(path)


def _config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


class Manifest:
    """The per-output-directory record of stage inputs, outputs, and hashes."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / MANIFEST
        self.data = {"tool_version": __version__, "stages": {}}
        if self.path.exists():
            self.data = json.loads(self.path.read_text())

    def recorded_hash(self, name: str):
        for stage in self.data["stages"].values():
            if name in stage.get("outputs", {}):
                return stage["outputs"][name]
        return None

    def verify_input(self, out_dir: Path, name: str, force: bool) -> None:
        path = out_dir / name
        if not path.exists():
            producer = _UPSTREAM.get(name, "an earlier subcommand")
            raise InvalidArgumentError(
                f"missing artifact '{name}' in {out_dir}; run `ecg-har {producer}` first"
            )
        recorded = self.recorded_hash(name)
        if recorded is not None and recorded != _hash_artifact(path) and not force:
            raise InvalidArgumentError(
                f"artifact '{name}' does not match the hash recorded in {MANIFEST}; "
                "it was modified after being produced (use --force to proceed)"
            )

    def record(self, stage: str, seed: int, config: dict, out_dir: Path,
               inputs: list, outputs: list) -> None:
        self.data["tool_version"] = __version__
        self.data["stages"][stage] = {
            "seed": seed,
            "config_hash": _config_hash(config),
            "inputs": {n: _hash_artifact(out_dir / n) for n in inputs},
            "outputs": {n: _hash_artifact(out_dir / n) for n in outputs},
        }
        self.path.write_text(json.dumps(self.data, indent=1, sort_keys=True) + "\n")


# --------------------------------------------------------------- config

_CONFIG_DEFAULTS = {
    "seed": 0,
    "subjects": 12,
    "duration_s": 60.0,
    "model": "cnn",
    "desk_scale": False,
    "models": ["cnn", "resnet", "transformer"],
    "counts": [2, 4, 8],
    "trials": 5,
    "holdout_fraction": 0.2,
    "val_fraction": 0.15,
    "batch_size": 64,
    "stages": [
        {"lr": s.lr, "min_lr": s.min_lr, "epochs": s.epochs, "weight_decay": s.weight_decay}
        for s in DEFAULT_STAGES
    ],
}


def load_config(args) -> dict:
    config = dict(_CONFIG_DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise InvalidArgumentError(f"config file not found: {path}")
        overrides = json.loads(path.read_text())
        unknown = set(overrides) - set(config)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        config.update(overrides)
    # explicit flags override the config file
    for key in ("seed", "subjects", "duration_s", "model", "trials", "batch_size"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            config[key] = value
    if getattr(args, "desk_scale", False):
        config["desk_scale"] = True
    if getattr(args, "models", None):
        config["models"] = [m.strip() for m in args.models.split(",")]
    if getattr(args, "counts", None):
        config["counts"] = [int(c) for c in args.counts.split(",")]
    _validate_config(config)
    return config


def _validate_config(config: dict) -> None:
    if config["subjects"] < 3:
        raise InvalidArgumentError("subjects must be >= 3")
    if config["duration_s"] < 10:
        raise InvalidArgumentError("duration_s must be >= 10")
    for kind in [config["model"], *config["models"]]:
        if kind not in MODEL_BUILDERS:
            raise InvalidArgumentError(f"unknown model {kind!r}")
    if config["trials"] < 2:
        raise InvalidArgumentError("trials must be >= 2")
    for stage in config["stages"]:
        StageConfig(**stage)  # validates ranges


def _stages(config: dict) -> list:
    return [StageConfig(**s) for s in config["stages"]]


# --------------------------------------------------------------- subcommands

def cmd_synth(args, config, out_dir, manifest):
    _, recordings = generate_cohort(config["subjects"], config["duration_s"],
                                    seed=config["seed"])
    write_cohort_dir(out_dir / COHORT_DIR, recordings, seed=config["seed"])
    manifest.record("synth", config["seed"], config, out_dir, [], [COHORT_DIR])
    print(f"wrote {len(recordings)} recordings to {out_dir / COHORT_DIR}")


def cmd_preprocess(args, config, out_dir, manifest):
    manifest.verify_input(out_dir, COHORT_DIR, args.force)
    windows = []
    for rec in read_cohort_dir(out_dir / COHORT_DIR):
        windows.extend(preprocess_recording(rec))
    save_windows(out_dir / WINDOWS_FILE, windows)
    manifest.record("preprocess", config["seed"], config, out_dir,
                    [COHORT_DIR], [WINDOWS_FILE])
    print(f"wrote {len(windows)} windows to {out_dir / WINDOWS_FILE}")


def cmd_split(args, config, out_dir, manifest):
    manifest.verify_input(out_dir, WINDOWS_FILE, args.force)
    cohort = Cohort(load_windows(out_dir / WINDOWS_FILE))
    split = subject_split(cohort.subjects,
                          holdout_fraction=config["holdout_fraction"],
                          val_fraction=config["val_fraction"],
                          seed=config["seed"])
    (out_dir / SPLIT_FILE).write_text(split.to_json() + "\n")
    manifest.record("split", config["seed"], config, out_dir,
                    [WINDOWS_FILE], [SPLIT_FILE])
    print(f"split: {len(split.train_subjects)} train / {len(split.val_subjects)} val "
          f"/ {len(split.holdout_subjects)} holdout subjects")


def _load_split_inputs(args, config, out_dir, manifest):
    manifest.verify_input(out_dir, WINDOWS_FILE, args.force)
    manifest.verify_input(out_dir, SPLIT_FILE, args.force)
    cohort = Cohort(load_windows(out_dir / WINDOWS_FILE))
    split = SplitSpec.from_json((out_dir / SPLIT_FILE).read_text())
    return cohort, split


def cmd_train(args, config, out_dir, manifest):
    cohort, split = _load_split_inputs(args, config, out_dir, manifest)
    kind = config["model"]
    graph = build_model(kind, desk_scale=config["desk_scale"], seed=config["seed"])
    train_x, train_y = cohort_arrays(cohort, split.train_subjects)
    val_x, val_y = cohort_arrays(cohort, split.val_subjects or split.train_subjects)
    stem = out_dir / f"model_{kind}"
    report = run_protocol(graph, train_x, train_y, val_x, val_y, _stages(config),
                          seed=config["seed"], batch_size=config["batch_size"],
                          checkpoint_stem=stem)
    report_name = f"train_report_{kind}.json"
    (out_dir / report_name).write_text(report.to_json())
    manifest.record(f"train:{kind}", config["seed"], config, out_dir,
                    [WINDOWS_FILE, SPLIT_FILE],
                    [f"model_{kind}.json", f"model_{kind}.bin", report_name])
    final = report.epochs[-1]
    print(f"trained {kind}: final val accuracy {final['val_accuracy']:.3f} "
          f"({len(report.epochs)} epochs)")


def cmd_evaluate(args, config, out_dir, manifest):
    cohort, split = _load_split_inputs(args, config, out_dir, manifest)
    kind = config["model"]
    for name in (f"model_{kind}.json", f"model_{kind}.bin"):
        manifest.verify_input(out_dir, name, args.force)
    graph = build_model(kind, desk_scale=config["desk_scale"], seed=config["seed"])
    load_checkpoint(out_dir / f"model_{kind}", graph)
    hold_x, hold_y = cohort_arrays(cohort, split.holdout_subjects)
    report = evaluate_model(graph, hold_x, hold_y)
    out_name = f"metrics_{kind}.json"
    payload = {"model": kind, "mode": "holdout-subject", "seed": config["seed"],
               "metrics": report.to_dict()}
    (out_dir / out_name).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    manifest.record(f"evaluate:{kind}", config["seed"], config, out_dir,
                    [WINDOWS_FILE, SPLIT_FILE, f"model_{kind}.bin"], [out_name])
    print(f"{kind} holdout accuracy {report.accuracy:.3f} macro-F1 {report.macro_f1:.3f}")


def cmd_scaling_study(args, config, out_dir, manifest):
    manifest.verify_input(out_dir, WINDOWS_FILE, args.force)
    cohort = Cohort(load_windows(out_dir / WINDOWS_FILE))
    plan = ScalingPlan(tuple(config["counts"]), trials=config["trials"])
    points = []
    for kind in config["models"]:
        points.extend(scaling_study(cohort, plan, kind, seed=config["seed"],
                                    stages=_stages(config),
                                    desk_scale=config["desk_scale"],
                                    batch_size=config["batch_size"]))
    report_emit(points, out_dir / SCALING_DIR)
    manifest.record("scaling-study", config["seed"], config, out_dir,
                    [WINDOWS_FILE], [SCALING_DIR])
    print(f"scaling study over {config['models']} written to {out_dir / SCALING_DIR}")


def cmd_report(args, config, out_dir, manifest):
    manifest.verify_input(out_dir, SCALING_DIR, args.force)
    audit = json.loads((out_dir / SCALING_DIR / "scaling_trials.json").read_text())
    report_emit(points_from_audit(audit), out_dir / SCALING_DIR)
    manifest.record("report", config["seed"], config, out_dir,
                    [SCALING_DIR], [SCALING_DIR])
    print(f"re-rendered reports in {out_dir / SCALING_DIR}")


_COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "scaling-study": cmd_scaling_study,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecg-har",
        description="Deterministic ECG-only activity-recognition pipeline.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides config seed")
        p.add_argument("--out", default="runs", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker cap")
        p.add_argument("--model", choices=sorted(MODEL_BUILDERS), default=None)
        p.add_argument("--desk-scale", action="store_true",
                       help="use reduced model configurations")
        p.add_argument("--force", action="store_true",
                       help="ignore manifest hash mismatches")
        if name == "synth":
            p.add_argument("--subjects", type=int, default=None)
            p.add_argument("--duration-s", type=float, default=None, dest="duration_s")
        if name == "scaling-study":
            p.add_argument("--models", default=None, help="comma-separated model list")
            p.add_argument("--counts", default=None, help="comma-separated subject counts")
            p.add_argument("--trials", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise InvalidArgumentError("--jobs must be >= 1")
        config = load_config(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = Manifest(out_dir)
        _COMMANDS[args.command](args, config, out_dir, manifest)
        return 0
    except (InvalidArgumentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EcgHarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
