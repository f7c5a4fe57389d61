"""Chronological split, the two from-scratch classifiers, and F1 evaluation.

Both classifiers follow the scikit-learn estimator API (``fit``,
``predict``, ``predict_proba``, ``get_params``) so they can sit in a
``Pipeline`` after :class:`~tempinfluence.features.TemporalFeatureExtractor`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "DegenerateDataError",
    "LabeledMatrix",
    "chronological_order",
    "chronological_split",
    "logistic_loss",
    "logistic_gradient",
    "GradientLogisticRegression",
    "GiniRandomForestClassifier",
    "Metrics",
    "confusion_counts",
    "evaluate",
    "model_from_json",
]

SCHEMA_VERSION = 1


class DegenerateDataError(ValueError):
    """The data cannot support the requested split or fit (e.g. one class only)."""


@dataclass
class LabeledMatrix:
    X: np.ndarray
    y: np.ndarray
    times: np.ndarray
    feature_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1)
        self.y = np.asarray(self.y, dtype=int)
        self.times = np.asarray(self.times, dtype=np.int64)
        n = len(self.X)
        if len(self.y) != n or len(self.times) != n:
            raise ValueError("X, y and times must have the same number of rows")
        if self.feature_names and len(self.feature_names) != self.X.shape[1]:
            raise ValueError("feature_names does not match the column count")
        if not set(np.unique(self.y)) <= {0, 1}:
            raise ValueError("labels must be 0/1")

    def __len__(self):
        return len(self.y)

    def take(self, idx) -> "LabeledMatrix":
        return LabeledMatrix(self.X[idx], self.y[idx], self.times[idx], list(self.feature_names))

    def columns(self, names) -> "LabeledMatrix":
        cols = [self.feature_names.index(n) for n in names]
        return LabeledMatrix(self.X[:, cols], self.y, self.times, list(names))


def chronological_order(times, ratio: float, tiebreak=None) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the train and test parts.

    Rows are sorted by time (then by ``tiebreak`` columns, if given); the
    first ``ceil(ratio * n)`` go to training and any rows sharing the last
    training timestamp are pulled into training too.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    times = np.asarray(times)
    n = len(times)
    if n < 2:
        raise DegenerateDataError(f"need at least 2 rows to split, got {n}")
    if tiebreak is None:
        order = np.argsort(times, kind="stable")
    else:
        keys = [np.asarray(c) for c in reversed(list(tiebreak))]
        order = np.lexsort(keys + [times])
    sorted_times = times[order]
    cut = math.ceil(ratio * n)
    while cut < n and sorted_times[cut] == sorted_times[cut - 1]:
        cut += 1
    if cut >= n:
        raise DegenerateDataError("empty test split: every row shares the training period's last timestamp")
    return order[:cut], order[cut:]


def chronological_split(matrix: LabeledMatrix, ratio: float = 0.9) -> tuple[LabeledMatrix, LabeledMatrix]:
    """Train on the earliest ``ratio`` of rows, test on the rest (ties stay in train).

    Row content breaks time ties, so the split does not depend on input order.
    """
    tiebreak = [matrix.y] + [matrix.X[:, j] for j in range(matrix.X.shape[1])]
    train, test = chronological_order(matrix.times, ratio, tiebreak)
    return matrix.take(train), matrix.take(test)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def logistic_loss(w, b, X, y, l2=0.0) -> float:
    """Mean log-loss plus ``l2 / 2 * ||w||^2``."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(w, b, X, y, l2=0.0):
    """Gradient of :func:`logistic_loss` as ``(dw, db)``."""
    r = _sigmoid(X @ w + b) - y
    return X.T @ r / len(y) + l2 * w, float(np.mean(r))


class GradientLogisticRegression(ClassifierMixin, BaseEstimator):
    """L2-regularised logistic regression fitted by full-batch gradient descent.

    Features are standardised with the training mean and standard
    deviation; constant columns get weight 0 and are listed in
    ``dropped_features_``.  ``loss_history_`` holds the training loss before
    the first step and after every epoch.
    """

    def __init__(self, learning_rate=0.1, epochs=1000, l2=1e-4, standardize=True):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.standardize = standardize

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        self.classes_ = np.unique(y)
        if len(self.classes_) != 2:
            raise DegenerateDataError(f"logistic regression needs two classes, got {list(self.classes_)}")
        target = (y == self.classes_[1]).astype(float)
        self.n_features_in_ = X.shape[1]
        if self.standardize:
            mean = X.mean(axis=0)
            std = X.std(axis=0)
        else:
            mean = np.zeros(X.shape[1])
            std = np.ones(X.shape[1])
        keep = std > 0
        self.mean_ = mean
        self.scale_ = np.where(keep, std, 1.0)
        self.dropped_features_ = [int(j) for j in np.flatnonzero(~keep)]
        Z = ((X - self.mean_) / self.scale_)[:, keep]

        w = np.zeros(Z.shape[1])
        b = 0.0
        history = [logistic_loss(w, b, Z, target, self.l2)]
        for _ in range(int(self.epochs)):
            gw, gb = logistic_gradient(w, b, Z, target, self.l2)
            w = w - self.learning_rate * gw
            b = b - self.learning_rate * gb
            history.append(logistic_loss(w, b, Z, target, self.l2))
        self.loss_history_ = history
        full = np.zeros(X.shape[1])
        full[keep] = w
        self.coef_ = full
        self.intercept_ = b
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=float)
        return ((X - self.mean_) / self.scale_) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        p = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return np.where(self.predict_proba(X)[:, 1] > 0.5, self.classes_[1], self.classes_[0])

    def to_dict(self) -> dict:
        check_is_fitted(self, "coef_")
        return {
            "schema": "logistic",
            "version": SCHEMA_VERSION,
            "params": self.get_params(),
            "classes": [int(c) for c in self.classes_],
            "coef": [float(v) for v in self.coef_],
            "intercept": float(self.intercept_),
            "mean": [float(v) for v in self.mean_],
            "scale": [float(v) for v in self.scale_],
            "dropped_features": self.dropped_features_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GradientLogisticRegression":
        _check_schema(d, "logistic")
        model = cls(**d["params"])
        model.classes_ = np.array(d["classes"])
        model.coef_ = np.array(d["coef"], dtype=float)
        model.intercept_ = float(d["intercept"])
        model.mean_ = np.array(d["mean"], dtype=float)
        model.scale_ = np.array(d["scale"], dtype=float)
        model.dropped_features_ = list(d["dropped_features"])
        model.n_features_in_ = len(model.coef_)
        return model


def _check_schema(d, kind):
    if d.get("schema") != kind:
        raise ValueError(f"expected a {kind!r} model document, got {d.get('schema')!r}")
    if d.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {d.get('version')!r}")


def _gini_split(x, y):
    """Best threshold on one column: ``(weighted gini, threshold)`` or None if x is constant."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    pos_left = np.cumsum(ys)[:-1]
    n_left = np.arange(1, n)
    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    total_pos = ys.sum()
    n_right = n - n_left
    pos_right = total_pos - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    gini = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
    gini = np.where(valid, gini, np.inf)
    k = int(np.argmin(gini))
    return float(gini[k]), float((xs[k] + xs[k + 1]) / 2)


class _Tree:
    """Array-backed binary tree; ``value[i]`` is the class-1 share at node i."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.count: list[int] = []

    def _add(self, value, count):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        self.count.append(count)
        return len(self.value) - 1

    def grow(self, X, y, rng, max_depth, n_sub, min_samples_leaf):
        stack = [(np.arange(len(y)), 0, None, False)]
        while stack:
            idx, depth, parent, is_right = stack.pop()
            ys = y[idx]
            node = self._add(float(ys.mean()), len(idx))
            if parent is not None:
                (self.right if is_right else self.left)[parent] = node
            if depth >= max_depth or len(idx) < 2 * min_samples_leaf or ys.min() == ys.max():
                continue
            best = None
            for f in np.sort(rng.choice(X.shape[1], size=n_sub, replace=False)):
                found = _gini_split(X[idx, f], ys)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], int(f), found[1])
            if best is None:
                continue
            _, f, thr = best
            go_left = X[idx, f] <= thr
            left, right = idx[go_left], idx[~go_left]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            self.feature[node] = f
            self.threshold[node] = thr
            stack.append((right, depth + 1, node, True))
            stack.append((left, depth + 1, node, False))
        return self

    def predict_value(self, X):
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.value[node]
        return out

    def to_dict(self):
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, d):
        t = cls()
        for k in ("feature", "threshold", "left", "right", "value", "count"):
            setattr(t, k, list(d[k]))
        return t


def _fit_tree(X, y, seed_seq, max_depth, n_sub, bootstrap, min_samples_leaf):
    rng = np.random.default_rng(seed_seq)
    n = len(y)
    if bootstrap:
        rows = rng.integers(0, n, size=n)
        oob = np.setdiff1d(np.arange(n), rows)
    else:
        rows = np.arange(n)
        oob = np.array([], dtype=int)
    tree = _Tree().grow(X[rows], y[rows], rng, max_depth, n_sub, min_samples_leaf)
    return tree, [int(i) for i in oob]


class GiniRandomForestClassifier(ClassifierMixin, BaseEstimator):
    """Bagged Gini decision trees with per-split feature subsampling.

    Each tree gets its own seed spawned from ``random_state``, so the model
    is identical for any ``n_jobs``.  ``predict_proba`` is the share of
    trees voting for the positive class; ``predict`` is the majority vote.
    """

    def __init__(
        self,
        n_estimators=100,
        max_depth=8,
        max_features="sqrt",
        bootstrap=True,
        min_samples_leaf=1,
        random_state=0,
        n_jobs=1,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _n_sub(self, d):
        mf = self.max_features
        if mf == "sqrt":
            k = int(math.sqrt(d))
        elif mf is None or mf == "all":
            k = d
        elif isinstance(mf, float):
            k = int(mf * d)
        else:
            k = int(mf)
        return max(1, min(d, k))

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        if len(self.classes_) > 2:
            raise ValueError("only binary classification is supported")
        target = (y == self.classes_[-1]).astype(float)
        children = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        n_sub = self._n_sub(X.shape[1])
        args = (self.max_depth, n_sub, self.bootstrap, self.min_samples_leaf)
        if self.n_jobs == 1:
            fitted = [_fit_tree(X, target, c, *args) for c in children]
        else:
            fitted = Parallel(n_jobs=self.n_jobs)(delayed(_fit_tree)(X, target, c, *args) for c in children)
        self.estimators_ = [t for t, _ in fitted]
        self.oob_indices_ = [o for _, o in fitted]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=float)
        if len(self.classes_) == 1:
            return np.ones((len(X), 1))
        votes = np.zeros(len(X))
        for tree in self.estimators_:
            votes += tree.predict_value(X) > 0.5
        p = votes / len(self.estimators_)
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        proba = self.predict_proba(X)
        if len(self.classes_) == 1:
            return np.full(len(proba), self.classes_[0])
        return np.where(proba[:, 1] > 0.5, self.classes_[1], self.classes_[0])

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimators_")
        return {
            "schema": "forest",
            "version": SCHEMA_VERSION,
            # worker count is a runtime choice and must not change the artifact
            "params": {k: v for k, v in self.get_params().items() if k != "n_jobs"},
            "classes": [int(c) for c in self.classes_],
            "n_features": self.n_features_in_,
            "trees": [t.to_dict() for t in self.estimators_],
            "oob_indices": self.oob_indices_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GiniRandomForestClassifier":
        _check_schema(d, "forest")
        model = cls(**d["params"])
        model.classes_ = np.array(d["classes"])
        model.n_features_in_ = d["n_features"]
        model.estimators_ = [_Tree.from_dict(t) for t in d["trees"]]
        model.oob_indices_ = [list(o) for o in d["oob_indices"]]
        return model


def model_to_json(model) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_json(text: str):
    d = json.loads(text)
    kinds = {"logistic": GradientLogisticRegression, "forest": GiniRandomForestClassifier}
    if d.get("schema") not in kinds:
        raise ValueError(f"unknown model schema {d.get('schema')!r}")
    return kinds[d["schema"]].from_dict(d)


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @classmethod
    def from_confusion(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(precision, recall, f1, tp, fp, tn, fn)

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_counts(y_true, y_pred, pos_label=1) -> tuple[int, int, int, int]:
    t = np.asarray(y_true) == pos_label
    p = np.asarray(y_pred) == pos_label
    return int(np.sum(t & p)), int(np.sum(~t & p)), int(np.sum(~t & ~p)), int(np.sum(t & ~p))


def evaluate(model, X, y=None) -> Metrics:
    """Metrics of ``model`` on a test set (a LabeledMatrix or ``X, y``)."""
    if isinstance(X, LabeledMatrix):
        X, y = X.X, X.y
    if len(y) == 0:
        raise DegenerateDataError("empty test set")
    return Metrics.from_confusion(*confusion_counts(y, model.predict(X)))
