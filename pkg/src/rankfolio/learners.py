"""Deterministic base learners every ranking strategy delegates to.

Four families: k-nearest-neighbours (classification and regression),
CART-style trees (Gini / variance reduction), ridge-regularized linear
regression, and constant baselines (majority label / global mean). All
models z-score their inputs with a scaler fitted on the training rows and
impute missing values with the training mean, are immutable once fitted,
and predict as pure functions, so fitted models can be shared freely
across threads.

Tie conventions: neighbour ties go to the smaller training-row index,
label-vote ties to the lexicographically smallest label. kNN uses
``min(k, n_train)`` neighbours when the training set is smaller than k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ArityMismatch, EmptyInput, InvalidSpec, SingularSystem

KINDS = ("knn", "tree", "linear", "baseline")


@dataclass(frozen=True)
class Dataset:
    """Training rows: a feature matrix (NaN = missing) and aligned targets."""

    X: np.ndarray
    y: tuple

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidSpec("feature matrix must be 2-dimensional")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", tuple(self.y))
        if X.shape[0] != len(self.y):
            raise InvalidSpec(
                f"{X.shape[0]} feature rows but {len(self.y)} targets"
            )

    def __len__(self):
        return len(self.y)


@dataclass(frozen=True)
class LearnerSpec:
    """Configuration of one base learner.

    k applies to knn (the registry exposes 1, 3, 5 and 10); max_depth and
    min_leaf to trees; ridge_lambda to the linear regressor.
    """

    kind: str
    k: int = 5
    max_depth: int = 8
    min_leaf: int = 5
    ridge_lambda: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown learner kind {self.kind!r}")
        if self.k < 1:
            raise InvalidSpec("k must be >= 1")
        if self.max_depth < 1:
            raise InvalidSpec("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise InvalidSpec("min_leaf must be >= 1")
        if self.ridge_lambda < 0:
            raise InvalidSpec("ridge_lambda must be >= 0")


CLASSIFIER_REGISTRY = {
    "knn1": LearnerSpec("knn", k=1),
    "knn3": LearnerSpec("knn", k=3),
    "knn5": LearnerSpec("knn", k=5),
    "knn10": LearnerSpec("knn", k=10),
    "tree": LearnerSpec("tree"),
    "baseline": LearnerSpec("baseline"),
}

REGRESSOR_REGISTRY = dict(CLASSIFIER_REGISTRY, linear=LearnerSpec("linear"))


def classifier_spec(name: str) -> LearnerSpec:
    if name not in CLASSIFIER_REGISTRY:
        raise InvalidSpec(
            f"unknown classifier {name!r}; choose from {sorted(CLASSIFIER_REGISTRY)}"
        )
    return CLASSIFIER_REGISTRY[name]


def regressor_spec(name: str) -> LearnerSpec:
    if name not in REGRESSOR_REGISTRY:
        raise InvalidSpec(
            f"unknown regressor {name!r}; choose from {sorted(REGRESSOR_REGISTRY)}"
        )
    return REGRESSOR_REGISTRY[name]


# -- feature scaling -------------------------------------------------------


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature z-scoring with training-mean imputation of missing values.

    Uses the population standard deviation; constant (or all-missing)
    features map to 0.
    """

    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.mean.shape[0]:
            raise ArityMismatch(
                f"expected {self.mean.shape[0]} features, got {X.shape[1]}"
            )
        filled = np.where(np.isnan(X), self.mean[None, :], X)
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = np.where(self.std[None, :] > 0, (filled - self.mean[None, :]) / safe[None, :], 0.0)
        return Z[0] if single else Z


def standardize_fit(rows) -> FeatureScaler:
    """Fit a FeatureScaler on training rows, ignoring missing values."""
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise EmptyInput("need at least one feature row")
    present = ~np.isnan(X)
    count = present.sum(axis=0)
    total = np.where(present, X, 0.0).sum(axis=0)
    mean = np.where(count > 0, total / np.maximum(count, 1), 0.0)
    sq = np.where(present, (X - mean[None, :]) ** 2, 0.0).sum(axis=0)
    std = np.sqrt(np.where(count > 0, sq / np.maximum(count, 1), 0.0))
    return FeatureScaler(mean, std)


# -- models ----------------------------------------------------------------


def _check_arity(model, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.n_features:
        raise ArityMismatch(
            f"expected a feature vector of length {model.n_features}, got shape {x.shape}"
        )
    return x


@dataclass(frozen=True)
class MajorityClassifier:
    n_features: int
    label: str

    def predict(self, features) -> str:
        _check_arity(self, features)
        return self.label


@dataclass(frozen=True)
class KnnClassifier:
    n_features: int
    scaler: FeatureScaler
    Z: np.ndarray
    codes: np.ndarray
    classes: tuple
    k: int

    def predict(self, features) -> str:
        z = self.scaler.apply(_check_arity(self, features))
        k = min(self.k, self.Z.shape[0])
        idx = _kernels.knn_query(self.Z, z[None, :], k)[0]
        votes = np.bincount(self.codes[idx], minlength=len(self.classes))
        return self.classes[int(np.argmax(votes))]


@dataclass(frozen=True)
class TreeClassifier:
    n_features: int
    scaler: FeatureScaler
    nodes: tuple  # (feature, threshold, left, right); feature -1 marks a leaf
    classes: tuple

    def predict(self, features) -> str:
        z = self.scaler.apply(_check_arity(self, features))
        return self.classes[_descend(self.nodes, z)]


@dataclass(frozen=True)
class MeanRegressor:
    n_features: int
    value: float

    def predict(self, features) -> float:
        _check_arity(self, features)
        return self.value


@dataclass(frozen=True)
class KnnRegressor:
    n_features: int
    scaler: FeatureScaler
    Z: np.ndarray
    targets: np.ndarray
    k: int

    def predict(self, features) -> float:
        z = self.scaler.apply(_check_arity(self, features))
        k = min(self.k, self.Z.shape[0])
        idx = _kernels.knn_query(self.Z, z[None, :], k)[0]
        return float(np.mean(self.targets[idx]))


@dataclass(frozen=True)
class TreeRegressor:
    n_features: int
    scaler: FeatureScaler
    nodes: tuple  # (feature, threshold, left, right); feature -1 marks a leaf
    values: tuple

    def predict(self, features) -> float:
        z = self.scaler.apply(_check_arity(self, features))
        return self.values[_descend(self.nodes, z)]


@dataclass(frozen=True)
class RidgeRegressor:
    n_features: int
    scaler: FeatureScaler
    weights: np.ndarray
    intercept: float

    def predict(self, features) -> float:
        z = self.scaler.apply(_check_arity(self, features))
        return float(self.intercept + z @ self.weights)


def _descend(nodes, z) -> int:
    """Walk a tree to its leaf; returns the leaf payload (stored in 'left')."""
    node = 0
    while True:
        feature, threshold, left, right = nodes[node]
        if feature < 0:
            return left
        node = left if z[feature] <= threshold else right


def _grow_tree(Z, target, max_depth, min_leaf, split_fn, leaf_fn):
    """Depth-first tree construction shared by both tree models.

    split_fn(Zsub, tsub) -> (found, feature, threshold); leaf_fn(tsub) ->
    leaf payload index. Rows go left when value <= threshold.
    """
    nodes = []

    def build(rows, depth):
        sub_t = target[rows]
        node_id = len(nodes)
        nodes.append(None)
        if (
            depth >= max_depth
            or rows.shape[0] < 2 * min_leaf
            or np.all(sub_t == sub_t[0])
        ):
            nodes[node_id] = (-1, 0.0, leaf_fn(sub_t), -1)
            return node_id
        found, feature, threshold = split_fn(Z[rows], sub_t)
        if not found:
            nodes[node_id] = (-1, 0.0, leaf_fn(sub_t), -1)
            return node_id
        mask = Z[rows, feature] <= threshold
        left = build(rows[mask], depth + 1)
        right = build(rows[~mask], depth + 1)
        nodes[node_id] = (feature, float(threshold), left, right)
        return node_id

    build(np.arange(Z.shape[0]), 0)
    return tuple(nodes)


# -- fitting ---------------------------------------------------------------


def fit_classifier(spec: LearnerSpec, data: Dataset):
    """Fit a deterministic classifier; labels are arbitrary strings."""
    if spec.kind == "linear":
        raise InvalidSpec("no linear classifier; use knn, tree or baseline")
    if len(data) < 1:
        raise EmptyInput("need at least one training row")
    labels = [str(v) for v in data.y]
    classes = tuple(sorted(set(labels)))
    lookup = {c: i for i, c in enumerate(classes)}
    codes = np.array([lookup[v] for v in labels], dtype=np.int64)
    n_features = data.X.shape[1]

    if spec.kind == "baseline":
        counts = np.bincount(codes, minlength=len(classes))
        return MajorityClassifier(n_features, classes[int(np.argmax(counts))])

    scaler = standardize_fit(data.X)
    Z = scaler.apply(data.X)
    if spec.kind == "knn":
        return KnnClassifier(n_features, scaler, Z, codes, classes, spec.k)

    def leaf(sub_codes):
        counts = np.bincount(sub_codes, minlength=len(classes))
        return int(np.argmax(counts))

    nodes = _grow_tree(
        Z,
        codes,
        spec.max_depth,
        spec.min_leaf,
        lambda Zs, cs: _kernels.best_split_classification(Zs, cs, len(classes), spec.min_leaf),
        leaf,
    )
    return TreeClassifier(n_features, scaler, nodes, classes)


def fit_regressor(spec: LearnerSpec, data: Dataset):
    """Fit a deterministic regressor on real-valued targets."""
    if len(data) < 1:
        raise EmptyInput("need at least one training row")
    targets = np.array([float(v) for v in data.y])
    n_features = data.X.shape[1]

    if spec.kind == "baseline":
        return MeanRegressor(n_features, float(np.mean(targets)))

    scaler = standardize_fit(data.X)
    Z = scaler.apply(data.X)
    if spec.kind == "knn":
        return KnnRegressor(n_features, scaler, Z, targets, spec.k)

    if spec.kind == "linear":
        yc = targets - np.mean(targets)
        gram = Z.T @ Z + spec.ridge_lambda * np.eye(n_features)
        try:
            weights = np.linalg.solve(gram, Z.T @ yc)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(
                "normal equations are singular; use ridge_lambda > 0"
            ) from exc
        return RidgeRegressor(n_features, scaler, weights, float(np.mean(targets)))

    values = []

    def leaf(sub_t):
        values.append(float(np.mean(sub_t)))
        return len(values) - 1

    nodes = _grow_tree(
        Z,
        targets,
        spec.max_depth,
        spec.min_leaf,
        lambda Zs, ts: _kernels.best_split_regression(Zs, ts, spec.min_leaf),
        leaf,
    )
    return TreeRegressor(n_features, scaler, nodes, tuple(values))


def predict_label(model, features) -> str:
    """Predict a class label; pure and total for any finite feature vector."""
    return model.predict(features)


def predict_value(model, features) -> float:
    """Predict a real value; pure, finite for finite input."""
    return float(model.predict(features))
