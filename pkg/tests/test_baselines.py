"""Feature extraction and classical-classifier tests."""
import numpy as np
import pytest

from ecg_har.baselines import (
    NUM_FEATURES,
    DecisionTree,
    KNearestNeighbors,
    LinearSVM,
    LogisticRegression,
    RandomForest,
    Standardizer,
    baseline_from_json,
    baseline_to_json,
    build_baseline,
    extract_features,
    feature_matrix,
    fit_baseline,
    predict_baseline,
)
from ecg_har.errors import InvalidArgumentError


# ------------------------------------------------------------ features

def test_feature_vector_length_and_order():
    data = np.zeros((18, 256))
    data[0] = 2.0  # constant channel
    f = extract_features(data)
    assert f.shape == (NUM_FEATURES,)
    # channel 0: mean, std, min, max, rms, zero-crossings
    np.testing.assert_allclose(f[:6], [2.0, 0.0, 2.0, 2.0, 2.0, 0.0])


def test_constant_negative_channel():
    data = np.zeros((2, 8))
    data[0] = -3.0
    f = extract_features(data)
    np.testing.assert_allclose(f[:6], [-3.0, 0.0, -3.0, -3.0, 3.0, 0.0])


def test_zero_crossings_alternating():
    data = np.zeros((1, 4))
    data[0] = [-1, 1, -1, 1]
    assert extract_features(data)[5] == 3


def test_zeros_count_as_positive():
    data = np.zeros((1, 5))
    data[0] = [-1, 0, -1, 0, 0]  # -,+,-,+,+ -> 3 changes
    assert extract_features(data)[5] == 3


def test_rms_hand_value():
    data = np.zeros((1, 2))
    data[0] = [3, 4]
    assert extract_features(data)[4] == pytest.approx(3.5355339, abs=1e-6)


def test_standardizer_training_stats_only():
    rng = np.random.default_rng(0)
    train = rng.normal(loc=5.0, scale=2.0, size=(200, 7))
    scaler = Standardizer().fit(train)
    z = scaler.transform(train)
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)
    other = rng.normal(loc=9.0, size=(50, 7))
    assert abs(scaler.transform(other).mean()) > 0.5  # not re-centred


def _blobs(n_per_class=30, classes=6, d=8, spread=0.3, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=3.0, size=(classes, d))
    x = np.concatenate([centers[c] + rng.normal(scale=spread, size=(n_per_class, d))
                        for c in range(classes)])
    y = np.repeat(np.arange(classes), n_per_class)
    return x, y


# ------------------------------------------------------------ classifiers

@pytest.mark.parametrize("kind", ["linear_svm", "random_forest", "knn",
                                  "decision_tree", "logistic_regression"])
def test_all_baselines_fit_separable_blobs(kind):
    x, y = _blobs()
    model = build_baseline(kind, seed=1).fit(x, y)
    assert np.mean(model.predict(x) == y) >= 0.95


@pytest.mark.parametrize("kind", ["linear_svm", "random_forest", "knn",
                                  "decision_tree", "logistic_regression"])
def test_empty_training_set_rejected(kind):
    with pytest.raises(InvalidArgumentError):
        build_baseline(kind).fit(np.zeros((0, 4)), np.zeros(0, dtype=int))


def test_unknown_baseline_rejected():
    with pytest.raises(InvalidArgumentError):
        build_baseline("naive_bayes")


def test_knn_k1_returns_own_label():
    x, y = _blobs(n_per_class=5)
    model = KNearestNeighbors(k=1).fit(x, y)
    np.testing.assert_array_equal(model.predict(x), y)


def test_knn_tie_breaks_to_nearest():
    # query at 0; two class-0 points and two class-1 points, nearest is class 1
    x = np.array([[1.0], [4.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    model = KNearestNeighbors(k=4).fit(x, y)
    assert model.predict(np.array([[0.0]]))[0] == 0  # nearest overall is class 0
    assert model.predict(np.array([[2.4]]))[0] == 1  # nearest overall is class 1


def test_decision_tree_perfect_on_consistent_data():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(80, 5))
    y = rng.integers(0, 6, size=80)
    model = DecisionTree().fit(x, y)
    np.testing.assert_array_equal(model.predict(x), y)


def test_logistic_regression_separable_toy():
    # 2 classes, 2 features, margin >= 1
    x = np.array([[2.0, 0.0], [3.0, 1.0], [2.5, -1.0],
                  [-2.0, 0.0], [-3.0, 1.0], [-2.5, -1.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = LogisticRegression().fit(x, y)
    np.testing.assert_array_equal(model.predict(x), y)


def test_forest_vote_is_tree_order_invariant():
    x, y = _blobs(n_per_class=10)
    model = RandomForest(n_trees=20, seed=4).fit(x, y)
    pred = model.predict(x)
    model.trees = list(reversed(model.trees))
    np.testing.assert_array_equal(model.predict(x), pred)


def test_forest_deterministic_for_seed():
    x, y = _blobs(n_per_class=10, seed=5)
    a = RandomForest(n_trees=10, seed=9).fit(x, y).predict(x)
    b = RandomForest(n_trees=10, seed=9).fit(x, y).predict(x)
    np.testing.assert_array_equal(a, b)


# ------------------------------------------------------------ serialization

@pytest.mark.parametrize("kind", ["linear_svm", "random_forest", "knn",
                                  "decision_tree", "logistic_regression"])
def test_json_round_trip(kind):
    x, y = _blobs(n_per_class=8, seed=6)
    scaler = Standardizer().fit(x)
    model = build_baseline(kind, seed=2).fit(scaler.transform(x), y)
    text = baseline_to_json(scaler, model)
    scaler2, model2 = baseline_from_json(text)
    np.testing.assert_array_equal(model2.predict(scaler2.transform(x)),
                                  model.predict(scaler.transform(x)))


# ------------------------------------------------------------ window pipeline

def test_fit_and_predict_on_windows():
    rng = np.random.default_rng(7)
    x, y = [], []
    for c in range(6):
        for _ in range(4):
            x.append(rng.normal(loc=c, scale=0.1, size=(18, 256)))
            y.append(c)
    x, y = np.array(x), np.array(y)
    scaler, model = fit_baseline("knn", x, y, seed=0)
    assert np.mean(predict_baseline(scaler, model, x) == y) == 1.0
    assert feature_matrix(x).shape == (24, NUM_FEATURES)
