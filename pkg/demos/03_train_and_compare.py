"""Train the desk-scale CNN on a small cohort and compare against baselines.

Reproduces the qualitative ordering from the study this package follows:
deep models above classical baselines on holdout (unseen) subjects.
Takes about a minute on a laptop CPU.
"""
import numpy as np

from ecg_har.baselines import BASELINE_KINDS, fit_baseline, predict_baseline
from ecg_har.datamodel import Cohort, subject_split
from ecg_har.dataset import cohort_arrays
from ecg_har.evaluate import evaluate_model
from ecg_har.models import build_model, parameter_count
from ecg_har.preprocess import preprocess_recording
from ecg_har.synth import generate_cohort
from ecg_har.train import StageConfig, run_protocol


def main():
    _, recordings = generate_cohort(6, duration_s=60.0, seed=11)
    windows = []
    for rec in recordings:
        windows.extend(preprocess_recording(rec))
    cohort = Cohort(windows)
    split = subject_split(cohort.subjects, seed=11)
    train = cohort_arrays(cohort, split.train_subjects)
    val = cohort_arrays(cohort, split.val_subjects or split.train_subjects)
    hold_x, hold_y = cohort_arrays(cohort, split.holdout_subjects)
    print(f"{len(train[0])} train / {len(hold_x)} holdout windows")

    graph = build_model("cnn", desk_scale=True, seed=11)
    print(f"desk-scale CNN-SE: {parameter_count(graph)} parameters")
    stages = [StageConfig(4e-4, 1e-6, 15, 1e-4), StageConfig(1e-4, 1e-8, 5, 1e-3)]
    report = run_protocol(graph, *train, *val, stages, seed=11)
    print("val accuracy per epoch:",
          [round(e["val_accuracy"], 2) for e in report.epochs])

    deep = evaluate_model(graph, hold_x, hold_y)
    print(f"CNN-SE holdout: accuracy {deep.accuracy:.3f} macro-F1 {deep.macro_f1:.3f}")
    for kind in BASELINE_KINDS:
        scaler, model = fit_baseline(kind, train[0], train[1], seed=11)
        acc = float(np.mean(predict_baseline(scaler, model, hold_x) == hold_y))
        marker = "<-- beaten by CNN" if acc < deep.accuracy else ""
        print(f"  baseline {kind:20s} {acc:.3f} {marker}")


if __name__ == "__main__":
    main()
