import numpy as np
import pytest

from ecg_har.datamodel import (
    Cohort,
    ScalingPlan,
    SplitSpec,
    class_weights,
    scaling_subsets,
    seen_subject_split,
    subject_split,
)
from ecg_har.errors import InvalidArgumentError
from ecg_har.labels import ActivityLabel
from ecg_har.preprocess import WindowSample


def tiny_cohort(n_subjects=6, windows_per=3):
    ws = []
    for s in range(n_subjects):
        for act in ActivityLabel:
            for k in range(windows_per):
                ws.append(
                    WindowSample(
                        data=np.zeros((18, 256), dtype=np.float32),
                        activity=act,
                        subject_id=f"s{s:02d}",
                        offset=k * 64,
                    )
                )
    return Cohort(ws)


def test_split_sizes_47_subjects():
    spec = subject_split([f"s{i}" for i in range(47)], holdout_fraction=0.2, seed=1)
    assert len(spec.holdout_subjects) == 10


def test_split_sizes_50_subjects():
    spec = subject_split([f"s{i}" for i in range(50)], 0.2, 0.175, seed=3)
    assert (len(spec.train_subjects), len(spec.val_subjects), len(spec.holdout_subjects)) == (
        33,
        7,
        10,
    )


def test_split_disjoint_and_complete_many_seeds():
    subjects = [f"s{i}" for i in range(23)]
    for seed in range(1000):
        spec = subject_split(subjects, seed=seed)
        groups = [set(spec.train_subjects), set(spec.val_subjects), set(spec.holdout_subjects)]
        assert groups[0] | groups[1] | groups[2] == set(subjects)
        assert not (groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2])


def test_split_deterministic_serialization():
    subjects = [f"s{i}" for i in range(12)]
    a = subject_split(subjects, seed=9).to_json()
    b = subject_split(subjects, seed=9).to_json()
    assert a == b
    assert SplitSpec.from_json(a) == subject_split(subjects, seed=9)


def test_split_validation():
    with pytest.raises(InvalidArgumentError):
        subject_split(["a", "b"], seed=0)
    with pytest.raises(InvalidArgumentError):
        subject_split([f"s{i}" for i in range(10)], 0.6, 0.5, seed=0)


def test_no_window_leakage():
    cohort = tiny_cohort(10)
    spec = subject_split(cohort, seed=4)
    seen = {}
    for name, subs in (
        ("train", spec.train_subjects),
        ("val", spec.val_subjects),
        ("holdout", spec.holdout_subjects),
    ):
        for i in cohort.windows_for_subjects(subs):
            assert i not in seen
            seen[i] = name
    assert len(seen) == len(cohort.windows)


def test_seen_subject_split_partitions_windows():
    cohort = tiny_cohort(5)
    train_idx, test_idx = seen_subject_split(cohort, cohort.subjects, 0.25, seed=0)
    assert set(train_idx) | set(test_idx) == set(range(len(cohort.windows)))
    assert not set(train_idx) & set(test_idx)


def test_scaling_plan_percent_points():
    plan = ScalingPlan((1, 2, 3, 4, 7, 11, 18, 29, 37))
    assert plan.percent_points(37) == [3, 6, 9, 11, 19, 30, 49, 79, 100]


def test_scaling_subsets_nested():
    plan = ScalingPlan((2, 4, 8))
    subs = [f"s{i}" for i in range(10)]
    subsets = scaling_subsets(subs, plan, seed=5)
    assert [len(s) for s in subsets] == [2, 4, 8]
    for small, big in zip(subsets, subsets[1:]):
        assert set(small) <= set(big)


def test_scaling_subsets_full_set():
    plan = ScalingPlan((37,))
    subs = [f"s{i}" for i in range(37)]
    assert set(scaling_subsets(subs, plan, seed=0)[0]) == set(subs)


def test_scaling_subsets_too_large():
    with pytest.raises(InvalidArgumentError):
        scaling_subsets(["a", "b"], ScalingPlan((3,)), seed=0)


def test_class_weights_balanced():
    labels = [a for a in ActivityLabel for _ in range(5)]
    assert np.allclose(class_weights(labels), 1.0)


def test_class_weights_imbalanced_with_zeros():
    labels = [ActivityLabel.SITTING] * 75 + [ActivityLabel.STANDING] * 25
    with pytest.warns(UserWarning):
        w = class_weights(labels)
    assert w[0] == pytest.approx(100 / (6 * 75))
    assert w[1] == pytest.approx(100 / (6 * 25))
    assert np.all(w[2:] == 0.0)


def test_class_weights_scale_invariant():
    labels = [ActivityLabel.SITTING] * 3 + [ActivityLabel.RUNNING] * 9
    doubled = labels * 2
    with pytest.warns(UserWarning):
        w1 = class_weights(labels)
    with pytest.warns(UserWarning):
        w2 = class_weights(doubled)
    assert np.allclose(w1, w2)
