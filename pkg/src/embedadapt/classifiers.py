"""From-scratch downstream classifiers with frozen default hyperparameters.

Five kinds: logistic_regression, cart, random_forest, linear_svm, mlp. The
defaults below are the benchmark settings and are never tuned per arm; every
classifier exposes fit(X, y), predict_score(X) (a real-valued score usable
for ROC analysis) and predict(X) (hard 0/1 labels). Hard labels come from
score > 0.5 for probability models, margin > 0 for the SVM, and leaf
majority for trees; exact ties fall to class 0.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .data import require_both_classes
from .network import (
    _INIT_STREAM,
    _SHUFFLE_STREAM,
    AdamState,
    TrainingDiverged,
    adam_step,
    init_mlp_params,
    mlp_backward,
    mlp_forward,
)

CLASSIFIER_KINDS = (
    "logistic_regression",
    "cart",
    "random_forest",
    "linear_svm",
    "mlp",
)

# per-kind RNG stream tags (keep bootstrap and feature streams apart)
_BOOTSTRAP_STREAM = 101
_FEATURE_STREAM = 202
_SVM_SHUFFLE_STREAM = 303


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _as_features(X) -> np.ndarray:
    X = np.ascontiguousarray(X, np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    return X


def _check_fitted_width(X: np.ndarray, n_features: int | None):
    if n_features is None:
        raise RuntimeError("classifier is not fitted")
    if X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, classifier expects {n_features}")


class LogisticRegressionClassifier:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Deterministic (zero init, no sampling); the seed argument is accepted
    for interface uniformity and unused.
    """

    def __init__(self, seed: int = 0, epochs: int = 500, lr: float = 0.1, l2: float = 1e-4):
        self.epochs = epochs
        self.lr = lr
        self.l2 = l2
        self.w: np.ndarray | None = None
        self.b = 0.0
        self.n_features: int | None = None

    def fit(self, X, y):
        X = _as_features(X)
        y = np.asarray(y, np.int64)
        require_both_classes(y)
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        yf = y.astype(np.float64)
        for _ in range(self.epochs):
            p = _sigmoid(X @ w + b)
            err = p - yf
            w -= self.lr * (X.T @ err / n + self.l2 * w)
            b -= self.lr * float(err.mean())
        self.w, self.b, self.n_features = w, b, d
        return self

    def predict_score(self, X):
        X = _as_features(X)
        _check_fitted_width(X, self.n_features)
        return _sigmoid(X @ self.w + self.b)

    def predict(self, X):
        return (self.predict_score(X) > 0.5).astype(np.int64)


class CartClassifier:
    """Single gini decision tree (all features considered at every node)."""

    def __init__(self, seed: int = 0, max_depth: int | None = 10, min_leaf: int = 2):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.tree = None
        self.n_features: int | None = None

    def fit(self, X, y):
        X = _as_features(X)
        y = np.asarray(y, np.int64)
        require_both_classes(y)
        n, d = X.shape
        self.tree = kernels.grow_tree(
            X, y, np.arange(n), max_depth=self.max_depth, min_leaf=self.min_leaf
        )
        self.n_features = d
        return self

    def predict_score(self, X):
        X = _as_features(X)
        _check_fitted_width(X, self.n_features)
        return kernels.tree_predict_value(*self.tree, X)

    def predict(self, X):
        return (self.predict_score(X) > 0.5).astype(np.int64)


def _resolve_mtry(max_features, d: int) -> int:
    if max_features is None:
        return d
    if max_features == "sqrt":
        return max(1, int(np.sqrt(d)))
    return max(1, min(int(max_features), d))


class RandomForestClassifier:
    """Bagged gini trees with per-node sqrt-feature subsampling.

    Scores are the mean class-1 leaf fraction across trees. Trees are seeded
    independently per (seed, tree index), so the forest is deterministic and
    schedule-independent.
    """

    def __init__(
        self,
        seed: int = 0,
        n_trees: int = 100,
        max_depth: int | None = None,
        min_leaf: int = 1,
        max_features="sqrt",
        bootstrap: bool = True,
    ):
        self.seed = int(seed)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.trees: list[tuple] | None = None
        self.n_features: int | None = None

    def fit(self, X, y):
        X = _as_features(X)
        y = np.asarray(y, np.int64)
        require_both_classes(y)
        n, d = X.shape
        mtry = _resolve_mtry(self.max_features, d)
        trees = []
        for t in range(self.n_trees):
            if self.bootstrap:
                rng = np.random.default_rng([self.seed, _BOOTSTRAP_STREAM, t])
                sample_idx = rng.integers(0, n, size=n)
            else:
                sample_idx = np.arange(n)
            feat_seed = np.random.SeedSequence([self.seed, _FEATURE_STREAM, t])
            rng_seed = int(feat_seed.generate_state(1, np.uint64)[0])
            trees.append(
                kernels.grow_tree(
                    X,
                    y,
                    sample_idx,
                    max_depth=self.max_depth,
                    min_leaf=self.min_leaf,
                    mtry=mtry,
                    rng_seed=rng_seed,
                )
            )
        self.trees = trees
        self.n_features = d
        return self

    def predict_score(self, X):
        X = _as_features(X)
        _check_fitted_width(X, self.n_features)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += kernels.tree_predict_value(*tree, X)
        return total / len(self.trees)

    def predict(self, X):
        return (self.predict_score(X) > 0.5).astype(np.int64)


class LinearSvmClassifier:
    """Pegasos-style linear SVM (hinge subgradient, lr 1/(lambda*t)).

    The bias rides along as an appended constant feature. Scores are raw
    margins; hard labels are margin > 0.
    """

    def __init__(self, seed: int = 0, lam: float = 1e-4, epochs: int = 20):
        self.seed = int(seed)
        self.lam = lam
        self.epochs = epochs
        self.w: np.ndarray | None = None
        self.n_features: int | None = None

    def fit(self, X, y):
        X = _as_features(X)
        y = np.asarray(y, np.int64)
        require_both_classes(y)
        n, d = X.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        y_signed = np.where(y == 1, 1.0, -1.0)
        order = np.concatenate(
            [
                np.random.default_rng([self.seed, _SVM_SHUFFLE_STREAM, e]).permutation(n)
                for e in range(self.epochs)
            ]
        )
        self.w = kernels.pegasos_train(Xa, y_signed, self.lam, order)
        self.n_features = d
        return self

    def predict_score(self, X):
        X = _as_features(X)
        _check_fitted_width(X, self.n_features)
        return X @ self.w[:-1] + self.w[-1]

    def predict(self, X):
        return (self.predict_score(X) > 0.0).astype(np.int64)


class MlpClassifier:
    """One-hidden-layer ReLU MLP head on sigmoid BCE, Adam, early stopping.

    Stops when the epoch mean loss has not improved on its best by more than
    tol for patience consecutive epochs (mirrors common MLP defaults).
    """

    def __init__(
        self,
        seed: int = 0,
        hidden: int = 100,
        max_epochs: int = 200,
        batch_size: int = 200,
        lr: float = 1e-3,
        l2: float = 1e-4,
        tol: float = 1e-4,
        patience: int = 10,
    ):
        self.seed = int(seed)
        self.hidden = hidden
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.lr = lr
        self.l2 = l2
        self.tol = tol
        self.patience = patience
        self.weights: list[np.ndarray] | None = None
        self.biases: list[np.ndarray] | None = None
        self.n_features: int | None = None

    def fit(self, X, y):
        X = _as_features(X)
        y = np.asarray(y, np.int64)
        require_both_classes(y)
        n, d = X.shape
        rng = np.random.default_rng([self.seed, _INIT_STREAM])
        weights, biases = init_mlp_params([d, self.hidden, 1], rng)
        state = AdamState.for_params(weights, biases)
        yf = y.astype(np.float64)

        best = np.inf
        stale = 0
        for epoch in range(self.max_epochs):
            shuffle = np.random.default_rng([self.seed, _SHUFFLE_STREAM, epoch])
            order = shuffle.permutation(n)
            loss_sum = 0.0
            for start in range(0, n, self.batch_size):
                chunk = order[start : start + self.batch_size]
                Xb, yb = X[chunk], yf[chunk]
                z, acts = mlp_forward(weights, biases, Xb)
                z = z[:, 0]
                loss = float(np.sum(np.logaddexp(0.0, z) - yb * z))
                if not np.isfinite(loss):
                    raise TrainingDiverged(f"non-finite MLP loss at epoch {epoch}")
                loss_sum += loss
                dz = (_sigmoid(z) - yb)[:, None] / chunk.shape[0]
                dWs, dbs = mlp_backward(weights, acts, dz)
                if self.l2 > 0.0:
                    dWs = [dW + self.l2 * W for dW, W in zip(dWs, weights)]
                adam_step(weights, biases, dWs, dbs, state, self.lr)
            mean_loss = loss_sum / n
            if mean_loss < best - self.tol:
                best = mean_loss
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break
        self.weights, self.biases, self.n_features = weights, biases, d
        return self

    def _logits(self, X):
        z, _ = mlp_forward(self.weights, self.biases, X)
        return z[:, 0]

    def predict_score(self, X):
        X = _as_features(X)
        _check_fitted_width(X, self.n_features)
        return _sigmoid(self._logits(X))

    def predict(self, X):
        return (self.predict_score(X) > 0.5).astype(np.int64)


_REGISTRY = {
    "logistic_regression": LogisticRegressionClassifier,
    "cart": CartClassifier,
    "random_forest": RandomForestClassifier,
    "linear_svm": LinearSvmClassifier,
    "mlp": MlpClassifier,
}


def make_classifier(kind: str, seed: int = 0, **overrides):
    """Instantiate a classifier by kind name with the frozen defaults."""
    if kind not in _REGISTRY:
        raise ValueError(f"unknown classifier kind {kind!r}; choose from {CLASSIFIER_KINDS}")
    return _REGISTRY[kind](seed=seed, **overrides)
