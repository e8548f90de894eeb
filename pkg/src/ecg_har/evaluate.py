"""Metrics, confusion matrices, trial aggregation, and the scaling study.

Zero-division convention: a class with zero support and zero predictions
gets precision = recall = F1 = 0 and is excluded from the macro mean; a
class with support or predictions but a zero denominator contributes 0 to
the mean. IQR uses linear-interpolation quantiles (Q3 - Q1).
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .labels import LABEL_NAMES, NUM_CLASSES

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
CSV_HEADER = ("model,subjects,percent,accuracy_mean,accuracy_std,"
              "precision_mean,precision_std,recall_mean,recall_std,"
              "f1_mean,f1_std,accuracy_iqr")


@dataclass(frozen=True)
class ConfusionMatrix:
    """6x6 counts; rows are true labels, columns are predictions."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.shape != (NUM_CLASSES, NUM_CLASSES):
            raise InvalidArgumentError(f"expected {NUM_CLASSES}x{NUM_CLASSES} counts, got {c.shape}")
        if np.any(c < 0) or not np.issubdtype(c.dtype, np.integer):
            raise InvalidArgumentError("counts must be non-negative integers")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                LABEL_NAMES[i]: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                }
                for i in range(NUM_CLASSES)
            },
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }

    def summary(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.macro_precision,
                "recall": self.macro_recall, "f1": self.macro_f1}


def confusion(true_labels, predicted) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if true_labels.shape != predicted.shape or true_labels.ndim != 1:
        raise InvalidArgumentError(
            f"label arrays must be equal-length 1-D, got {true_labels.shape} vs {predicted.shape}"
        )
    for name, arr in (("true", true_labels), ("predicted", predicted)):
        if arr.size and (arr.min() < 0 or arr.max() >= NUM_CLASSES):
            raise InvalidArgumentError(f"{name} labels outside [0, {NUM_CLASSES})")
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    np.add.at(counts, (true_labels, predicted), 1)
    return ConfusionMatrix(counts)


def metrics(cm: ConfusionMatrix, average: str = "macro") -> MetricsReport:
    """Accuracy plus per-class and averaged precision/recall/F1."""
    if average not in ("macro", "weighted"):
        raise InvalidArgumentError(f"unknown average {average!r}")
    c = cm.counts.astype(np.float64)
    total = c.sum()
    if total <= 0:
        raise InvalidArgumentError("confusion matrix is empty")
    diag = np.diag(c)
    row = c.sum(axis=1)  # support
    col = c.sum(axis=0)  # predictions
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, diag / col, 0.0)
        recall = np.where(row > 0, diag / row, 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / np.where(pr > 0, pr, 1.0), 0.0)
    active = (row > 0) | (col > 0)
    if average == "macro":
        w = active.astype(np.float64)
    else:
        w = row
    wsum = w.sum()
    mean = lambda v: float((v * w).sum() / wsum) if wsum > 0 else 0.0
    return MetricsReport(
        accuracy=float(diag.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=mean(precision),
        macro_recall=mean(recall),
        macro_f1=mean(f1),
    )


@dataclass(frozen=True)
class AggregateStat:
    mean: float
    std: float
    iqr: float

    def __str__(self):
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class TrialAggregate:
    """Per-metric mean, sample std (n-1), and linear-interpolation IQR."""

    accuracy: AggregateStat
    precision: AggregateStat
    recall: AggregateStat
    f1: AggregateStat
    trials: int

    def stat(self, name: str) -> AggregateStat:
        return getattr(self, name)


def _aggregate_values(values) -> AggregateStat:
    v = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(v, [25, 75])  # linear interpolation (default)
    return AggregateStat(mean=float(v.mean()), std=float(v.std(ddof=1)), iqr=float(q3 - q1))


def aggregate(trial_reports) -> TrialAggregate:
    reports = list(trial_reports)
    if len(reports) < 2:
        raise InvalidArgumentError(f"aggregation needs >= 2 trials, got {len(reports)}")
    summaries = [r.summary() if isinstance(r, MetricsReport) else dict(r) for r in reports]
    stats = {name: _aggregate_values([s[name] for s in summaries]) for name in METRIC_NAMES}
    return TrialAggregate(trials=len(reports), **stats)


# --------------------------------------------------------------- scaling study

@dataclass(frozen=True)
class ScalingPoint:
    model: str
    subjects: int
    percent: int
    aggregate: TrialAggregate
    trial_accuracies: tuple  # per-trial holdout accuracy, for audit/medians

    @property
    def median_accuracy(self) -> float:
        return float(np.median(self.trial_accuracies))


def predict(graph, x, batch_size: int = 64) -> np.ndarray:
    """Eval-mode argmax predictions over a (N, C, T) array, batched."""
    out = []
    for start in range(0, len(x), batch_size):
        logits = graph.forward(x[start:start + batch_size])
        out.append(np.argmax(logits, axis=1))
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def evaluate_model(graph, x, labels, average: str = "macro") -> MetricsReport:
    return metrics(confusion(labels, predict(graph, x)), average=average)


def scaling_study(cohort, plan, model_kind: str, seed: int = 0, stages=None,
                  desk_scale: bool = True, trials: int | None = None,
                  batch_size: int = 64) -> list:
    """The training-set-size study: per trial, re-split subjects, train on
    nested subsets, and evaluate each model on that trial's fixed holdout.

    Returns one ScalingPoint per subset size, aggregated over trials.
    """
    # imported here because training itself reports metrics from this module
    from .dataset import cohort_arrays
    from .models import build_model
    from .train import DEFAULT_STAGES, run_protocol

    stages = stages or DEFAULT_STAGES
    n_trials = trials if trials is not None else plan.trials
    if n_trials < 2:
        raise InvalidArgumentError("scaling study needs >= 2 trials")
    counts = plan.subjects_per_activity
    per_count_acc = {c: [] for c in counts}
    per_count_reports = {c: [] for c in counts}
    percents = None
    for trial in range(n_trials):
        trial_seed = seed + 1000 * trial
        split = subject_split_for(cohort, trial_seed)
        if percents is None:
            percents = plan.percent_points(len(split.train_subjects))
        subsets = scaling_subsets_for(split.train_subjects, plan, trial_seed)
        hold_x, hold_y = cohort_arrays(cohort, split.holdout_subjects)
        for count, subset in zip(counts, subsets):
            graph = build_model(model_kind, desk_scale=desk_scale, seed=trial_seed)
            train_x, train_y = cohort_arrays(cohort, subset)
            # tiny cohorts can leave the val split empty; validate on train
            val_x, val_y = cohort_arrays(cohort, split.val_subjects or subset)
            run_protocol(graph, train_x, train_y, val_x, val_y, stages,
                         seed=trial_seed, batch_size=batch_size)
            report = evaluate_model(graph, hold_x, hold_y)
            per_count_acc[count].append(report.accuracy)
            per_count_reports[count].append(report)
    return [
        ScalingPoint(
            model=model_kind,
            subjects=count,
            percent=percent,
            aggregate=aggregate(per_count_reports[count]),
            trial_accuracies=tuple(per_count_acc[count]),
        )
        for count, percent in zip(counts, percents)
    ]


def subject_split_for(cohort, seed: int):
    from .datamodel import subject_split

    return subject_split(cohort.subjects, seed=seed)


def scaling_subsets_for(train_subjects, plan, seed: int):
    from .datamodel import scaling_subsets

    return scaling_subsets(train_subjects, plan, seed)


def points_from_audit(audit) -> list:
    """Rebuild ScalingPoints from the JSON audit dump written by report_emit."""
    points = []
    for rec in audit:
        stats = {
            name: AggregateStat(mean=rec["aggregate"][name]["mean"],
                                std=rec["aggregate"][name]["std"],
                                iqr=rec["aggregate"][name]["iqr"])
            for name in METRIC_NAMES
        }
        points.append(ScalingPoint(
            model=rec["model"],
            subjects=rec["subjects"],
            percent=rec["percent"],
            aggregate=TrialAggregate(trials=len(rec["trial_accuracies"]), **stats),
            trial_accuracies=tuple(rec["trial_accuracies"]),
        ))
    return points


# --------------------------------------------------------------- report emission

def _fmt(x: float) -> str:
    return f"{x:.6f}"


def results_csv(results) -> str:
    lines = [CSV_HEADER]
    for p in results:
        a = p.aggregate
        lines.append(",".join([
            p.model, str(p.subjects), str(p.percent),
            _fmt(a.accuracy.mean), _fmt(a.accuracy.std),
            _fmt(a.precision.mean), _fmt(a.precision.std),
            _fmt(a.recall.mean), _fmt(a.recall.std),
            _fmt(a.f1.mean), _fmt(a.f1.std),
            _fmt(a.accuracy.iqr),
        ]))
    return "\n".join(lines) + "\n"


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
_W, _H, _PAD = 640, 400, 60


def _svg_chart(title, ylabel, series) -> str:
    """One polyline per model over (subjects, value) points; deterministic."""
    xs = sorted({x for _, pts in series for x, _ in pts})
    ymax = max((y for _, pts in series for _, y in pts), default=1.0)
    ymax = max(ymax, 1e-9)
    x_lo, x_hi = min(xs), max(xs)
    span = max(x_hi - x_lo, 1)

    def sx(x):
        return _PAD + (x - x_lo) / span * (_W - 2 * _PAD)

    def sy(y):
        return _H - _PAD - (y / ymax) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W // 2}" y="{_H - 16}" text-anchor="middle" font-size="12">'
        "subjects per activity in training set</text>",
        f'<text x="18" y="{_H // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 18 {_H // 2})">{ylabel}</text>',
    ]
    for i, (name, pts) in enumerate(series):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in sorted(pts))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                     f'points="{coords}"/>')
        parts.append(f'<text x="{_W - _PAD + 4}" y="{_PAD + 16 * i + 12}" font-size="11" '
                     f'fill="{color}">{name}</text>')
    for x in xs:
        parts.append(f'<text x="{sx(x):.2f}" y="{_H - _PAD + 16}" text-anchor="middle" '
                     f'font-size="10">{x}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def report_emit(results, out_dir) -> list:
    """Write the CSV table, the two SVG charts, and a JSON audit dump.

    Returns the written paths.
    """
    results = list(results)
    if not results:
        raise InvalidArgumentError("no results to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    models = sorted({p.model for p in results})
    acc_series = [(m, [(p.subjects, p.aggregate.accuracy.mean) for p in results if p.model == m])
                  for m in models]
    iqr_series = [(m, [(p.subjects, p.aggregate.accuracy.iqr) for p in results if p.model == m])
                  for m in models]
    audit = [
        {
            "model": p.model,
            "subjects": p.subjects,
            "percent": p.percent,
            "trial_accuracies": list(p.trial_accuracies),
            "aggregate": {
                name: {"mean": p.aggregate.stat(name).mean,
                       "std": p.aggregate.stat(name).std,
                       "iqr": p.aggregate.stat(name).iqr}
                for name in METRIC_NAMES
            },
        }
        for p in results
    ]
    paths = {
        out / "scaling.csv": results_csv(results),
        out / "accuracy_vs_subjects.svg": _svg_chart(
            "Holdout accuracy vs training subjects", "accuracy (mean)", acc_series),
        out / "iqr_vs_subjects.svg": _svg_chart(
            "Accuracy IQR vs training subjects", "accuracy IQR", iqr_series),
        out / "scaling_trials.json": json.dumps(audit, indent=1, sort_keys=True) + "\n",
    }
    for path, text in paths.items():
        path.write_text(text)
    return sorted(paths)
