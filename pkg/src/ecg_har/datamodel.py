"""Cohort containers, subject-wise splitting, scaling subsets, class weights."""
import json
import warnings
from dataclasses import dataclass, field
from math import ceil, floor

import numpy as np

from .errors import InvalidArgumentError
from .labels import NUM_CLASSES, ActivityLabel
from .preprocess import WindowSample


@dataclass
class Cohort:
    """An immutable collection of preprocessed windows."""

    windows: list
    subjects: frozenset = field(init=False)
    index: dict = field(init=False)  # (subject_id, activity) -> window indices

    def __post_init__(self):
        idx = {}
        for i, w in enumerate(self.windows):
            idx.setdefault((w.subject_id, w.activity), []).append(i)
        self.index = idx
        self.subjects = frozenset(w.subject_id for w in self.windows)

    def windows_for_subjects(self, subjects) -> list:
        subjects = set(subjects)
        return [i for i, w in enumerate(self.windows) if w.subject_id in subjects]

    def labels(self) -> np.ndarray:
        return np.array([int(w.activity) for w in self.windows], dtype=np.int64)


@dataclass(frozen=True)
class SplitSpec:
    train_subjects: tuple
    val_subjects: tuple
    holdout_subjects: tuple
    seed: int

    def __post_init__(self):
        groups = [set(self.train_subjects), set(self.val_subjects), set(self.holdout_subjects)]
        for i in range(3):
            for j in range(i + 1, 3):
                if groups[i] & groups[j]:
                    raise InvalidArgumentError("split subject sets must be pairwise disjoint")
        if not self.holdout_subjects:
            raise InvalidArgumentError("holdout set must be non-empty")

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "train": list(self.train_subjects),
                "val": list(self.val_subjects),
                "holdout": list(self.holdout_subjects),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitSpec":
        d = json.loads(text)
        return cls(
            train_subjects=tuple(d["train"]),
            val_subjects=tuple(d["val"]),
            holdout_subjects=tuple(d["holdout"]),
            seed=int(d["seed"]),
        )


@dataclass(frozen=True)
class ScalingPlan:
    subjects_per_activity: tuple
    trials: int = 10

    def __post_init__(self):
        counts = tuple(self.subjects_per_activity)
        if not counts or any(b <= a for a, b in zip(counts, counts[1:])):
            raise InvalidArgumentError("counts must be strictly increasing and non-empty")
        if counts[0] < 1 or self.trials < 1:
            raise InvalidArgumentError("counts and trials must be positive")
        object.__setattr__(self, "subjects_per_activity", counts)

    def percent_points(self, total_train_subjects: int) -> list:
        """Counts as percentages of the available training subjects.

        Ceiling rounding reproduces the published percent labels
        (1..37 of 37 -> 3, 6, 9, 11, 19, 30, 49, 79, 100).
        """
        return [ceil(100 * c / total_train_subjects) for c in self.subjects_per_activity]


def subject_split(subjects, holdout_fraction: float = 0.2, val_fraction: float = 0.15,
                  seed: int = 0) -> SplitSpec:
    """Shuffle subjects with a seeded PRNG and carve holdout / val / train.

    holdout = first ceil(holdout_fraction * N) subjects of the shuffle;
    val = floor(val_fraction * remaining); the rest train.
    """
    if hasattr(subjects, "subjects"):
        subjects = subjects.subjects
    ids = sorted(subjects)
    n = len(ids)
    if n < 3:
        raise InvalidArgumentError(f"need at least 3 subjects, got {n}")
    if holdout_fraction <= 0 or val_fraction < 0 or holdout_fraction + val_fraction >= 1:
        raise InvalidArgumentError("fractions must be positive and sum below 1")
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(n)]
    n_hold = ceil(holdout_fraction * n)
    n_val = floor(val_fraction * (n - n_hold))
    return SplitSpec(
        train_subjects=tuple(order[n_hold + n_val :]),
        val_subjects=tuple(order[n_hold : n_hold + n_val]),
        holdout_subjects=tuple(order[:n_hold]),
        seed=seed,
    )


def seen_subject_split(cohort: Cohort, subjects, test_fraction: float = 0.2, seed: int = 0):
    """Hold out windows (not subjects) from the given subjects' data.

    Returns (train_indices, test_indices) into cohort.windows; used for the
    seen-subject evaluation mode where test windows come from subjects the
    model was trained on.
    """
    if not (0 < test_fraction < 1):
        raise InvalidArgumentError("test_fraction must be in (0, 1)")
    idx = cohort.windows_for_subjects(subjects)
    rng = np.random.default_rng(seed)
    perm = [idx[i] for i in rng.permutation(len(idx))]
    n_test = max(1, floor(test_fraction * len(perm)))
    return sorted(perm[n_test:]), sorted(perm[:n_test])


def scaling_subsets(train_subjects, plan: ScalingPlan, seed: int) -> list:
    """Nested subject subsets: each larger count contains all smaller ones."""
    ids = sorted(train_subjects)
    counts = plan.subjects_per_activity
    if counts[-1] > len(ids):
        raise InvalidArgumentError(
            f"largest count {counts[-1]} exceeds available training subjects ({len(ids)})"
        )
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    return [tuple(order[:c]) for c in counts]


def class_weights(labels) -> np.ndarray:
    """Inverse-frequency weights w_c = N_total / (K * N_c); empty classes -> 0."""
    if len(labels) == 0:
        return np.zeros(NUM_CLASSES)
    arr = np.array(
        [int(w.activity) if isinstance(w, WindowSample) else int(w) for w in labels]
    )
    counts = np.bincount(arr, minlength=NUM_CLASSES).astype(np.float64)
    weights = np.zeros(NUM_CLASSES)
    nonzero = counts > 0
    weights[nonzero] = arr.size / (NUM_CLASSES * counts[nonzero])
    if not nonzero.all():
        missing = [ActivityLabel(i).label_name for i in np.flatnonzero(~nonzero)]
        warnings.warn(f"classes with no windows get weight 0: {missing}", stacklevel=2)
    return weights
