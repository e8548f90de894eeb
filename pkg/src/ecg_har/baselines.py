"""Classical baselines over hand-crafted per-window features.

Feature vector: for each of the 18 channels, in channel order —
mean, std, min, max, RMS, zero-crossing count — 108 reals total.
Zero-crossings count sign changes with zeros treated as positive.

All five classifiers implement fit / predict / to_dict / from_dict and are
deterministic for a fixed seed. Features are z-scored with training-set
statistics only (see Standardizer).
"""
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .labels import NUM_CLASSES
from .preprocess import WindowSample

FEATURE_STATS = ("mean", "std", "min", "max", "rms", "zero_crossings")
NUM_FEATURES = 18 * len(FEATURE_STATS)


# --------------------------------------------------------------- features

def extract_features(window) -> np.ndarray:
    """One 108-vector for a WindowSample or a raw (18, T) array."""
    data = np.asarray(window.data if isinstance(window, WindowSample) else window)
    if data.ndim != 2:
        raise InvalidArgumentError(f"expected a (channels, time) array, got {data.shape}")
    signs = np.where(data >= 0, 1, -1)
    crossings = (np.diff(signs, axis=1) != 0).sum(axis=1)
    stats = np.stack([
        data.mean(axis=1),
        data.std(axis=1),
        data.min(axis=1),
        data.max(axis=1),
        np.sqrt(np.mean(data ** 2, axis=1)),
        crossings.astype(np.float64),
    ], axis=1)
    return stats.reshape(-1)


def feature_matrix(windows) -> np.ndarray:
    return np.stack([extract_features(w) for w in windows])


@dataclass
class Standardizer:
    """Per-feature z-scoring with training statistics only."""

    mean: np.ndarray = None
    std: np.ndarray = None

    def fit(self, x) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.std = np.where(std > 1e-12, std, 1.0)  # constant features pass through
        return self

    def transform(self, x) -> np.ndarray:
        if self.mean is None:
            raise InvalidArgumentError("standardizer is not fitted")
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(mean=np.array(d["mean"]), std=np.array(d["std"]))


def _check_training_set(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(x) == 0:
        raise InvalidArgumentError("training set is empty")
    if len(x) != len(y):
        raise InvalidArgumentError("feature/label lengths differ")
    return x, y


# --------------------------------------------------------------- linear models

class LinearSVM:
    """One-vs-rest linear SVM trained by primal subgradient descent on the
    hinge loss with C = 1.0 (an approximation of an exact solver)."""

    name = "linear_svm"

    def __init__(self, c: float = 1.0, iterations: int = 500, lr: float = 0.1):
        self.c = c
        self.iterations = iterations
        self.lr = lr
        self.weights = None  # (classes, d)
        self.biases = None

    def fit(self, x, y) -> "LinearSVM":
        x, y = _check_training_set(x, y)
        n, d = x.shape
        self.weights = np.zeros((NUM_CLASSES, d))
        self.biases = np.zeros(NUM_CLASSES)
        for cls in range(NUM_CLASSES):
            t = np.where(y == cls, 1.0, -1.0)
            w = np.zeros(d)
            b = 0.0
            for it in range(1, self.iterations + 1):
                margin = t * (x @ w + b)
                active = margin < 1.0
                # d/dw [ ||w||^2/(2C) + mean hinge ]
                gw = w / (self.c * n) - (t[active, None] * x[active]).sum(axis=0) / n
                gb = -t[active].sum() / n
                step = self.lr / (1.0 + it / 50.0)
                w -= step * gw
                b -= step * gb
            self.weights[cls] = w
            self.biases[cls] = b
        return self

    def decision(self, x) -> np.ndarray:
        return np.asarray(x) @ self.weights.T + self.biases

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.decision(x), axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.name, "c": self.c, "weights": self.weights.tolist(),
                "biases": self.biases.tolist()}

    @classmethod
    def from_dict(cls, d) -> "LinearSVM":
        model = cls(c=d["c"])
        model.weights = np.array(d["weights"])
        model.biases = np.array(d["biases"])
        return model


class LogisticRegression:
    """One-vs-rest logistic regression, full-batch gradient descent,
    at most 300 iterations."""

    name = "logistic_regression"

    def __init__(self, max_iter: int = 300, lr: float = 0.5, tol: float = 1e-6):
        self.max_iter = max_iter
        self.lr = lr
        self.tol = tol
        self.weights = None
        self.biases = None

    def fit(self, x, y) -> "LogisticRegression":
        x, y = _check_training_set(x, y)
        n, d = x.shape
        self.weights = np.zeros((NUM_CLASSES, d))
        self.biases = np.zeros(NUM_CLASSES)
        for cls in range(NUM_CLASSES):
            t = (y == cls).astype(np.float64)
            w = np.zeros(d)
            b = 0.0
            for _ in range(self.max_iter):
                p = 1.0 / (1.0 + np.exp(-(x @ w + b)))
                err = p - t
                gw = x.T @ err / n
                gb = err.mean()
                w -= self.lr * gw
                b -= self.lr * gb
                if max(np.abs(gw).max(), abs(gb)) < self.tol:
                    break
            self.weights[cls] = w
            self.biases[cls] = b
        return self

    def predict(self, x) -> np.ndarray:
        return np.argmax(np.asarray(x) @ self.weights.T + self.biases, axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.name, "weights": self.weights.tolist(),
                "biases": self.biases.tolist()}

    @classmethod
    def from_dict(cls, d) -> "LogisticRegression":
        model = cls()
        model.weights = np.array(d["weights"])
        model.biases = np.array(d["biases"])
        return model


# --------------------------------------------------------------- kNN

class KNearestNeighbors:
    """Euclidean kNN with majority vote; ties go to the class of the
    nearest neighbor among the tied classes."""

    name = "knn"

    def __init__(self, k: int = 5):
        self.k = k
        self.x = None
        self.y = None

    def fit(self, x, y) -> "KNearestNeighbors":
        self.x, self.y = _check_training_set(x, y)
        return self

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = min(self.k, len(self.y))
        d2 = ((x[:, None, :] - self.x[None, :, :]) ** 2).sum(axis=2)
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out = np.empty(len(x), dtype=np.int64)
        for i, neighbors in enumerate(order):
            votes = np.bincount(self.y[neighbors], minlength=NUM_CLASSES)
            top = votes.max()
            tied = set(np.flatnonzero(votes == top))
            # neighbors are sorted by distance: first hit breaks the tie
            out[i] = next(int(self.y[j]) for j in neighbors if int(self.y[j]) in tied)
        return out

    def to_dict(self) -> dict:
        return {"kind": self.name, "k": self.k, "x": self.x.tolist(),
                "y": self.y.tolist()}

    @classmethod
    def from_dict(cls, d) -> "KNearestNeighbors":
        model = cls(k=d["k"])
        model.x = np.array(d["x"])
        model.y = np.array(d["y"], dtype=np.int64)
        return model


# --------------------------------------------------------------- trees

def _gini_best_split(x, y, feature_idx):
    """Best (feature, threshold, weighted Gini) over the given features.

    Thresholds are midpoints between distinct consecutive sorted values.
    Returns None when no split separates the node.
    """
    n = len(y)
    onehot = np.zeros((n, NUM_CLASSES))
    onehot[np.arange(n), y] = 1.0
    best = None
    for f in feature_idx:
        order = np.argsort(x[:, f], kind="stable")
        xv = x[order, f]
        left = np.cumsum(onehot[order], axis=0)  # class counts left of each cut
        total = left[-1]
        cut = np.flatnonzero(xv[:-1] < xv[1:])  # split after position i
        if cut.size == 0:
            continue
        nl = (cut + 1).astype(np.float64)
        nr = n - nl
        lc = left[cut]
        rc = total - lc
        gini_l = 1.0 - ((lc / nl[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((rc / nr[:, None]) ** 2).sum(axis=1)
        weighted = (nl * gini_l + nr * gini_r) / n
        j = int(np.argmin(weighted))
        if best is None or weighted[j] < best[2]:
            threshold = 0.5 * (xv[cut[j]] + xv[cut[j] + 1])
            best = (int(f), float(threshold), float(weighted[j]))
    return best


def _grow_tree(x, y, feature_sampler, min_samples_split=2):
    counts = np.bincount(y, minlength=NUM_CLASSES)
    majority = int(np.argmax(counts))
    if len(y) < min_samples_split or counts.max() == len(y):
        return {"leaf": majority}
    parent_gini = 1.0 - ((counts / len(y)) ** 2).sum()
    best = _gini_best_split(x, y, feature_sampler(x.shape[1]))
    if best is None or best[2] >= parent_gini - 1e-12:
        return {"leaf": majority}
    f, threshold, _ = best
    mask = x[:, f] <= threshold
    return {
        "feature": f,
        "threshold": threshold,
        "left": _grow_tree(x[mask], y[mask], feature_sampler, min_samples_split),
        "right": _grow_tree(x[~mask], y[~mask], feature_sampler, min_samples_split),
    }


def _tree_predict_one(node, row):
    while "leaf" not in node:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    return node["leaf"]


class DecisionTree:
    """CART with Gini impurity, unlimited depth, min-samples-split 2."""

    name = "decision_tree"

    def __init__(self, min_samples_split: int = 2):
        self.min_samples_split = min_samples_split
        self.root = None

    def fit(self, x, y) -> "DecisionTree":
        x, y = _check_training_set(x, y)
        self.root = _grow_tree(x, y, lambda d: range(d), self.min_samples_split)
        return self

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return np.array([_tree_predict_one(self.root, row) for row in x], dtype=np.int64)

    def to_dict(self) -> dict:
        return {"kind": self.name, "root": self.root}

    @classmethod
    def from_dict(cls, d) -> "DecisionTree":
        model = cls()
        model.root = d["root"]
        return model


class RandomForest:
    """100 bootstrapped Gini trees, sqrt(d) features per split, majority
    vote with count-based (tree-order-independent) aggregation."""

    name = "random_forest"

    def __init__(self, n_trees: int = 100, seed: int = 0):
        self.n_trees = n_trees
        self.seed = seed
        self.trees = None

    def fit(self, x, y) -> "RandomForest":
        x, y = _check_training_set(x, y)
        n, d = x.shape
        m = max(1, int(np.sqrt(d)))
        rng = np.random.default_rng(self.seed)
        self.trees = []
        for _ in range(self.n_trees):
            sample = rng.integers(0, n, size=n)
            tree_rng = np.random.default_rng(rng.integers(2**63))
            sampler = lambda dim, r=tree_rng: r.choice(dim, size=min(m, dim), replace=False)
            self.trees.append(_grow_tree(x[sample], y[sample], sampler))
        return self

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        votes = np.zeros((len(x), NUM_CLASSES), dtype=np.int64)
        for tree in self.trees:
            for i, row in enumerate(x):
                votes[i, _tree_predict_one(tree, row)] += 1
        return np.argmax(votes, axis=1)  # ties -> lowest label, order-free

    def to_dict(self) -> dict:
        return {"kind": self.name, "n_trees": self.n_trees, "seed": self.seed,
                "trees": self.trees}

    @classmethod
    def from_dict(cls, d) -> "RandomForest":
        model = cls(n_trees=d["n_trees"], seed=d["seed"])
        model.trees = d["trees"]
        return model


# --------------------------------------------------------------- registry

BASELINE_KINDS = {
    LinearSVM.name: LinearSVM,
    RandomForest.name: RandomForest,
    KNearestNeighbors.name: KNearestNeighbors,
    DecisionTree.name: DecisionTree,
    LogisticRegression.name: LogisticRegression,
}


def build_baseline(kind: str, seed: int = 0):
    if kind not in BASELINE_KINDS:
        raise InvalidArgumentError(f"unknown baseline {kind!r}")
    if kind == RandomForest.name:
        return RandomForest(seed=seed)
    return BASELINE_KINDS[kind]()


def baseline_to_json(standardizer: Standardizer, model) -> str:
    return json.dumps({"standardizer": standardizer.to_dict(),
                       "model": model.to_dict()}, sort_keys=True)


def baseline_from_json(text: str):
    d = json.loads(text)
    model_dict = d["model"]
    model = BASELINE_KINDS[model_dict["kind"]].from_dict(model_dict)
    return Standardizer.from_dict(d["standardizer"]), model


def fit_baseline(kind: str, train_windows_x, train_y, seed: int = 0):
    """Features -> standardize -> fit; returns (standardizer, model)."""
    feats = feature_matrix(train_windows_x)
    scaler = Standardizer().fit(feats)
    model = build_baseline(kind, seed=seed).fit(scaler.transform(feats), train_y)
    return scaler, model


def predict_baseline(standardizer: Standardizer, model, windows_x) -> np.ndarray:
    return model.predict(standardizer.transform(feature_matrix(windows_x)))
