"""Downstream classifier panel: sanity on learnable problems, determinism."""

import numpy as np
import pytest

import embedadapt as ea
from embedadapt.classifiers import CartClassifier, RandomForestClassifier


def blobs(n=80, d=5, gap=4.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    X = rng.normal(size=(n, d))
    X[:, 0] += np.where(y == 1, gap, -gap)
    return X, y.astype(np.int64)


def xor_grid():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0])
    return X, y


@pytest.mark.parametrize("kind", ea.CLASSIFIER_KINDS)
def test_separable_blobs_fit_well(kind):
    X, y = blobs()
    clf = ea.make_classifier(kind, seed=3).fit(X, y)
    assert ea.accuracy_score(y, clf.predict(X)) >= 0.95
    assert ea.auc_score(y, clf.predict_score(X)) >= 0.99


@pytest.mark.parametrize("kind", ea.CLASSIFIER_KINDS)
def test_deterministic_given_seed(kind):
    X, y = blobs(seed=1)
    Xt = blobs(n=20, seed=2)[0]
    a = ea.make_classifier(kind, seed=7).fit(X, y).predict_score(Xt)
    b = ea.make_classifier(kind, seed=7).fit(X, y).predict_score(Xt)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", ea.CLASSIFIER_KINDS)
def test_single_class_training_rejected(kind):
    X = np.random.default_rng(0).normal(size=(10, 3))
    with pytest.raises(ValueError, match="both classes"):
        ea.make_classifier(kind).fit(X, np.zeros(10, dtype=int))


@pytest.mark.parametrize("kind", ea.CLASSIFIER_KINDS)
def test_predict_rejects_wrong_width(kind):
    X, y = blobs(n=30)
    clf = ea.make_classifier(kind, seed=0).fit(X, y)
    with pytest.raises(ValueError, match="features"):
        clf.predict(np.zeros((4, X.shape[1] + 1)))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown classifier kind"):
        ea.make_classifier("nearest_centroid")


def test_cart_solves_xor_exactly():
    # splitting must proceed at zero immediate gini gain for XOR to work
    X, y = xor_grid()
    clf = ea.make_classifier("cart", min_leaf=1).fit(X, y)
    assert np.array_equal(clf.predict(X), y)


def test_cart_respects_max_depth():
    X, y = xor_grid()
    stump = CartClassifier(max_depth=1, min_leaf=1).fit(X, y)
    # depth 1 cannot express XOR
    assert not np.array_equal(stump.predict(X), y)


def test_cart_scores_are_leaf_fractions():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    clf = CartClassifier(max_depth=1, min_leaf=2).fit(X, y)
    scores = clf.predict_score(X)
    assert set(np.round(scores, 12)) <= {0.0, 1.0}
    assert np.array_equal(clf.predict(X), y)


def test_forest_with_one_plain_tree_equals_cart():
    X, y = blobs(n=50, gap=1.0, seed=4)
    forest = RandomForestClassifier(
        seed=0, n_trees=1, max_depth=None, min_leaf=1, max_features=None, bootstrap=False
    ).fit(X, y)
    cart = CartClassifier(max_depth=None, min_leaf=1).fit(X, y)
    assert np.array_equal(forest.predict_score(X), cart.predict_score(X))


def test_forest_insensitive_to_tree_count_beyond_averaging():
    # same seed, more trees: the first tree's bootstrap sample is unchanged
    X, y = blobs(n=40, seed=5)
    f1 = RandomForestClassifier(seed=9, n_trees=1).fit(X, y)
    f3 = RandomForestClassifier(seed=9, n_trees=3).fit(X, y)
    t1 = f1.trees[0]
    t3 = f3.trees[0]
    for a, b in zip(t1, t3):
        assert np.array_equal(a, b)


def test_forest_learns_xor_with_noise_dims():
    # rotated-xor harder variant solved by depth but not by any linear model
    rng = np.random.default_rng(11)
    n = 200
    h = rng.integers(0, 2, n)
    y = rng.integers(0, 2, n)
    a = 2.0 * h - 1.0
    b = 2.0 * (h ^ y) - 1.0
    X = np.column_stack([a, b, rng.normal(size=n), rng.normal(size=n)])
    forest = RandomForestClassifier(seed=1, n_trees=30).fit(X, y)
    assert ea.accuracy_score(y, forest.predict(X)) > 0.95

    lr = ea.make_classifier("logistic_regression").fit(X, y)
    assert ea.accuracy_score(y, lr.predict(X)) < 0.7


def test_svm_margin_signs_and_hard_labels():
    X, y = blobs(n=60, seed=6)
    svm = ea.make_classifier("linear_svm", seed=2).fit(X, y)
    margins = svm.predict_score(X)
    assert np.array_equal(svm.predict(X), (margins > 0).astype(int))
    assert margins.max() > 0 > margins.min()


def test_mlp_interpolates_separable_training_data():
    X, y = blobs(n=40, seed=8)
    clf = ea.make_classifier("mlp", seed=0).fit(X, y)
    assert ea.accuracy_score(y, clf.predict(X)) == 1.0


def test_predict_before_fit_raises():
    clf = ea.make_classifier("cart")
    with pytest.raises(RuntimeError, match="not fitted"):
        clf.predict(np.zeros((2, 2)))


def test_logistic_regression_matches_closed_form_direction():
    # on symmetric data the learned boundary normal aligns with the class axis
    X, y = blobs(n=200, d=3, gap=2.0, seed=12)
    lr = ea.make_classifier("logistic_regression").fit(X, y)
    w = lr.w / np.linalg.norm(lr.w)
    assert abs(w[0]) > 0.95
