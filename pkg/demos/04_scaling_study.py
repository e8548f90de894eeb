"""Run a miniature training-set-size scaling study and emit its reports.

For each trial the cohort is re-split subject-wise, the model is trained on
nested subject subsets, and holdout accuracy is aggregated (mean, std, IQR).
Writes the CSV table and SVG charts to ./scaling_demo/. Takes a few minutes.
"""
from pathlib import Path

from ecg_har.datamodel import Cohort, ScalingPlan
from ecg_har.evaluate import report_emit, scaling_study
from ecg_har.preprocess import preprocess_recording
from ecg_har.synth import generate_cohort
from ecg_har.train import StageConfig


def main():
    _, recordings = generate_cohort(8, duration_s=30.0, seed=21)
    windows = []
    for rec in recordings:
        windows.extend(preprocess_recording(rec))
    cohort = Cohort(windows)

    plan = ScalingPlan((1, 2, 4), trials=3)
    stages = [StageConfig(4e-4, 1e-6, 12, 1e-4)]
    points = scaling_study(cohort, plan, "cnn", seed=21, stages=stages,
                           desk_scale=True, trials=3)
    for p in points:
        print(f"{p.subjects} subjects ({p.percent}%): "
              f"accuracy {p.aggregate.accuracy} IQR {p.aggregate.accuracy.iqr:.3f}")

    out = Path("scaling_demo")
    for path in report_emit(points, out):
        print("wrote", path)


if __name__ == "__main__":
    main()
