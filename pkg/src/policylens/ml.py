"""From-scratch classifiers, resampling, cross-validation and metrics."""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

MODEL_FORMAT_VERSION = 1


class NotTrainedError(RuntimeError):
    pass


class DegenerateDataError(ValueError):
    pass


class AmbiguityLabel(str, Enum):
    NOT_AMBIGUOUS = "NotAmbiguous"
    SOMEWHAT_AMBIGUOUS = "SomewhatAmbiguous"
    VERY_AMBIGUOUS = "VeryAmbiguous"


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels).astype(str)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if len(self.features) != len(self.labels):
            raise ValueError("features and labels differ in length")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature_names does not match the feature count")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain NaN or Inf")

    @property
    def classes(self) -> list[str]:
        return sorted(set(self.labels.tolist()))

    def subset(self, idx: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], list(self.feature_names))

    def class_counts(self) -> dict[str, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}


def load_dataset_csv(path: str | Path, label_column: str = "label") -> Dataset:
    """Read a CSV whose header is the feature names followed by the label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = [c for c in reader.fieldnames or [] if c != label_column]
        if label_column not in (reader.fieldnames or []):
            raise ValueError(f"missing label column {label_column!r}")
        rows = list(reader)
    x = np.array([[float(r[n]) for n in names] for r in rows], dtype=float).reshape(len(rows), len(names))
    y = np.array([r[label_column] for r in rows])
    return Dataset(x, y, names)


def save_dataset_csv(ds: Dataset, path: str | Path, label_column: str = "label") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.feature_names, label_column])
        for row, lab in zip(ds.features, ds.labels):
            writer.writerow([repr(float(v)) for v in row] + [lab])


# -- linear models -----------------------------------------------------------

def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def logistic_loss_grad(w: np.ndarray, b: float, x: np.ndarray, y: np.ndarray, l2: float):
    """Mean binary cross-entropy plus ``l2/2 * |w|^2``; ``y`` holds 0/1."""
    z = x @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    r = sigmoid(z) - y
    gw = x.T @ r / len(y) + l2 * w
    gb = float(np.mean(r))
    return loss, gw, gb


def softmax_loss_grad(w: np.ndarray, b: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float):
    """Multinomial cross-entropy; ``w`` is classes x features, ``y`` holds class indices."""
    z = x @ w.T + b
    zmax = z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z - zmax).sum(axis=1)) + zmax[:, 0]
    n = len(y)
    loss = float(np.mean(logsum - z[np.arange(n), y]) + 0.5 * l2 * np.sum(w * w))
    p = softmax(z)
    p[np.arange(n), y] -= 1.0
    gw = p.T @ x / n + l2 * w
    gb = p.mean(axis=0)
    return loss, gw, gb


@dataclass
class LinearModel:
    kind: str  # "logistic" | "softmax" | "svm"
    classes: list[str]
    weights: np.ndarray
    bias: np.ndarray
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    feature_names: list[str] = field(default_factory=list)

    def _prep(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.mean is not None:
            x = (x - self.mean) / self.scale
        return x

    def decision(self, x) -> np.ndarray:
        x = self._prep(x)
        if self.kind == "softmax":
            return x @ self.weights.T + self.bias
        return x @ self.weights + float(self.bias[0])

    def predict_proba(self, x) -> np.ndarray:
        """Class probabilities in ``self.classes`` order; SVM margins go through a logistic link."""
        z = self.decision(x)
        if self.kind == "softmax":
            return softmax(z)
        p = sigmoid(z)
        return np.column_stack([1.0 - p, p])

    def predict(self, x) -> list[str]:
        proba = self.predict_proba(x)
        return [self.classes[i] for i in np.argmax(proba, axis=1)]

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "type": "linear",
            "kind": self.kind,
            "classes": list(self.classes),
            "weights": np.asarray(self.weights).tolist(),
            "bias": np.asarray(self.bias).tolist(),
            "mean": None if self.mean is None else self.mean.tolist(),
            "scale": None if self.scale is None else self.scale.tolist(),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(
            kind=d["kind"],
            classes=list(d["classes"]),
            weights=np.asarray(d["weights"], dtype=float),
            bias=np.asarray(d["bias"], dtype=float),
            mean=None if d.get("mean") is None else np.asarray(d["mean"], dtype=float),
            scale=None if d.get("scale") is None else np.asarray(d["scale"], dtype=float),
            feature_names=list(d.get("feature_names", [])),
        )


def _standardizer(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return mean, scale


def _require_classes(ds: Dataset) -> list[str]:
    classes = ds.classes
    if len(classes) < 2:
        raise DegenerateDataError("training data contains a single class")
    return classes


def logreg_train(
    ds: Dataset,
    l2: float = 0.01,
    lr: float = 0.5,
    epochs: int = 500,
    standardize: bool = False,
) -> LinearModel:
    """Full-batch gradient descent from zero weights (logistic for 2 classes, softmax above)."""
    classes = _require_classes(ds)
    x = ds.features
    mean = scale = None
    if standardize:
        mean, scale = _standardizer(x)
        x = (x - mean) / scale
    y = np.array([classes.index(c) for c in ds.labels])
    f = x.shape[1]
    if len(classes) == 2:
        w, b = np.zeros(f), 0.0
        for _ in range(epochs):
            _, gw, gb = logistic_loss_grad(w, b, x, y.astype(float), l2)
            w -= lr * gw
            b -= lr * gb
        return LinearModel("logistic", classes, w, np.array([b]), mean, scale, list(ds.feature_names))
    w = np.zeros((len(classes), f))
    bias = np.zeros(len(classes))
    for _ in range(epochs):
        _, gw, gb = softmax_loss_grad(w, bias, x, y, l2)
        w -= lr * gw
        bias -= lr * gb
    return LinearModel("softmax", classes, w, bias, mean, scale, list(ds.feature_names))


def logreg_predict(model: LinearModel, x) -> np.ndarray:
    return model.predict_proba(x)


def hinge_loss(model: LinearModel, ds: Dataset) -> float:
    y = np.where(ds.labels == model.classes[1], 1.0, -1.0)
    return float(np.mean(np.maximum(0.0, 1.0 - y * model.decision(ds.features))))


def linear_svm_train(
    ds: Dataset,
    c: float = 10.0,
    epochs: int = 300,
    lr: float = 0.01,
    seed: int = 0,
    standardize: bool = False,
) -> LinearModel:
    """Binary linear SVM by stochastic subgradient descent on the hinge loss.

    Objective: ``0.5 |w|^2 + c * mean(max(0, 1 - y (w.x + b)))``; samples are
    visited in a seeded random order each epoch.
    """
    classes = _require_classes(ds)
    if len(classes) != 2:
        raise ValueError("linear_svm_train is binary only")
    x = ds.features
    mean = scale = None
    if standardize:
        mean, scale = _standardizer(x)
        x = (x - mean) / scale
    y = np.where(ds.labels == classes[1], 1.0, -1.0)
    n, f = x.shape
    w, b = np.zeros(f), 0.0
    rng = np.random.default_rng(seed)
    reg = 1.0 / (c * n)
    for _ in range(epochs):
        for i in rng.permutation(n):
            margin = y[i] * (x[i] @ w + b)
            if margin < 1.0:
                w -= lr * (reg * w - y[i] * x[i])
                b += lr * y[i]
            else:
                w -= lr * reg * w
    return LinearModel("svm", classes, w, np.array([b]), mean, scale, list(ds.feature_names))


# -- random forest -----------------------------------------------------------

@dataclass
class DecisionTree:
    # node arrays; leaf when feature == -1
    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    value: list[list[float]]

    def leaf_distribution(self, row: np.ndarray) -> list[float]:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.value[node]

    def to_dict(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold, "left": self.left,
                "right": self.right, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(list(d["feature"]), [float(t) for t in d["threshold"]], list(d["left"]),
                   list(d["right"]), [list(map(float, v)) for v in d["value"]])


def _gini_from_counts(counts: np.ndarray) -> np.ndarray:
    totals = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / totals[..., None]
    g = 1.0 - np.nansum(p * p, axis=-1)
    return np.where(totals > 0, g, 0.0)


def _best_split(x: np.ndarray, y: np.ndarray, n_classes: int, features: np.ndarray):
    """Return (gain, feature, threshold) of the best Gini split or None."""
    n = len(y)
    parent = np.bincount(y, minlength=n_classes).astype(float)
    parent_gini = float(_gini_from_counts(parent))
    best = None
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs, ys = x[order, f], y[order]
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        left = np.cumsum(onehot, axis=0)[:-1]
        right = parent - left
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        nl = np.arange(1, n)
        weighted = (nl * _gini_from_counts(left) + (n - nl) * _gini_from_counts(right)) / n
        weighted = np.where(valid, weighted, np.inf)
        pos = int(np.argmin(weighted))
        gain = parent_gini - float(weighted[pos])
        if best is None or gain > best[0] + 1e-12:
            best = (gain, int(f), float((xs[pos] + xs[pos + 1]) / 2.0))
    return best


def _grow_tree(x, y, n_classes, max_depth, min_samples_split, n_sub, rng) -> DecisionTree:
    tree = DecisionTree([], [], [], [], [])

    def add_leaf(ys):
        counts = np.bincount(ys, minlength=n_classes).astype(float)
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.value.append((counts / counts.sum()).tolist())
        return len(tree.feature) - 1

    def build(idx, depth):
        ys = y[idx]
        pure = np.all(ys == ys[0])
        if pure or len(idx) < min_samples_split or (max_depth is not None and depth >= max_depth):
            return add_leaf(ys)
        feats = np.sort(rng.choice(x.shape[1], size=n_sub, replace=False))
        split = _best_split(x[idx], ys, n_classes, feats)
        if split is None:
            return add_leaf(ys)
        _, f, thr = split
        node = len(tree.feature)
        tree.feature.append(f)
        tree.threshold.append(thr)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.value.append([])
        mask = x[idx, f] <= thr
        tree.left[node] = build(idx[mask], depth + 1)
        tree.right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return tree


@dataclass
class ForestModel:
    classes: list[str]
    trees: list[DecisionTree]
    feature_names: list[str] = field(default_factory=list)

    def predict_proba(self, x) -> np.ndarray:
        """Fraction of trees voting for each class."""
        if not self.trees:
            raise NotTrainedError("forest has no trees")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        votes = np.zeros((len(x), len(self.classes)))
        for tree in self.trees:
            for r, row in enumerate(x):
                votes[r, int(np.argmax(tree.leaf_distribution(row)))] += 1
        return votes / len(self.trees)

    def predict(self, x) -> list[str]:
        return [self.classes[i] for i in np.argmax(self.predict_proba(x), axis=1)]

    def to_dict(self) -> dict:
        return {"format_version": MODEL_FORMAT_VERSION, "type": "forest",
                "classes": list(self.classes), "feature_names": list(self.feature_names),
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(list(d["classes"]), [DecisionTree.from_dict(t) for t in d["trees"]],
                   list(d.get("feature_names", [])))


def forest_train(
    ds: Dataset,
    n_trees: int = 50,
    max_depth: int | None = None,
    seed: int = 0,
    min_samples_split: int = 2,
    n_jobs: int = 1,
) -> ForestModel:
    """Bootstrap-aggregated CART trees with sqrt(F) feature subsampling per split.

    Every tree gets its own generator spawned from ``seed``, so the result does
    not depend on ``n_jobs``.
    """
    classes = ds.classes
    if not classes:
        raise DegenerateDataError("empty dataset")
    y = np.array([classes.index(c) for c in ds.labels])
    x = ds.features
    n_sub = max(1, int(math.sqrt(x.shape[1])))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)

    def one(ss):
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, len(y), size=len(y))
        return _grow_tree(x[idx], y[idx], len(classes), max_depth, min_samples_split, n_sub, rng)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(one, seeds))
    else:
        trees = [one(ss) for ss in seeds]
    return ForestModel(classes, trees, list(ds.feature_names))


def forest_predict(model: ForestModel, x) -> np.ndarray:
    return model.predict_proba(x)


def model_from_dict(d: dict):
    if d.get("type") == "forest":
        return ForestModel.from_dict(d)
    return LinearModel.from_dict(d)


# -- resampling and evaluation -----------------------------------------------

def random_oversample(ds: Dataset, seed: int = 0) -> Dataset:
    """Duplicate minority-class rows (with replacement) up to the majority count.

    Original rows keep their positions; synthesized copies are appended class by
    class in sorted class order.
    """
    counts = ds.class_counts()
    if not counts:
        return ds
    target = max(counts.values())
    rng = np.random.default_rng(seed)
    extra = []
    for cls in sorted(counts):
        need = target - counts[cls]
        if need > 0:
            rows = np.flatnonzero(ds.labels == cls)
            extra.append(rng.choice(rows, size=need, replace=True))
    if not extra:
        return Dataset(ds.features.copy(), ds.labels.copy(), list(ds.feature_names))
    idx = np.concatenate([np.arange(len(ds.labels)), *extra])
    return ds.subset(idx)


def stratified_folds(labels: Sequence[str], k: int, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays of ``k`` stratified folds (each class dealt round-robin)."""
    labels = np.asarray(labels).astype(str)
    classes, counts = np.unique(labels, return_counts=True)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > counts.min():
        raise ValueError(f"k={k} exceeds the smallest class count {int(counts.min())}")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in classes:
        idx = rng.permutation(np.flatnonzero(labels == cls))
        for pos, i in enumerate(idx):
            folds[(pos + offset) % k].append(int(i))
        offset += len(idx)
    return [np.array(sorted(f), dtype=int) for f in folds]


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    per_class: dict[str, ClassMetrics]
    weighted: ClassMetrics
    accuracy: float
    zero_division: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_class": {k: vars(v) for k, v in self.per_class.items()},
            "weighted": vars(self.weighted),
            "accuracy": self.accuracy,
            "zero_division": list(self.zero_division),
        }


def classification_metrics(y_true: Sequence[str], y_pred: Sequence[str],
                           labels: Sequence[str] | None = None) -> MetricsReport:
    y_true = [str(v) for v in y_true]
    y_pred = [str(v) for v in y_pred]
    if len(y_true) != len(y_pred):
        raise ValueError("length mismatch")
    labels = sorted(set(y_true) | set(y_pred)) if labels is None else list(labels)
    per: dict[str, ClassMetrics] = {}
    flags = []
    for lab in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == lab and p == lab)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != lab and p == lab)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == lab and p != lab)
        if tp + fp == 0:
            flags.append(f"{lab}:precision")
        if tp + fn == 0:
            flags.append(f"{lab}:recall")
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per[lab] = ClassMetrics(prec, rec, f1, tp + fn)
    total = sum(m.support for m in per.values())
    if total:
        weighted = ClassMetrics(
            sum(m.precision * m.support for m in per.values()) / total,
            sum(m.recall * m.support for m in per.values()) / total,
            sum(m.f1 * m.support for m in per.values()) / total,
            total,
        )
    else:
        weighted = ClassMetrics(0.0, 0.0, 0.0, 0)
    acc = sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true) if y_true else 0.0
    return MetricsReport(per, weighted, acc, flags)


TRAINERS: dict[str, Callable[..., Any]] = {
    "logreg": logreg_train,
    "forest": forest_train,
    "svm": linear_svm_train,
}


@dataclass
class GridSearchResult:
    best_params: dict
    best_score: float
    results: list[tuple[dict, list[float]]]


def grid_search_cv(
    ds: Dataset,
    model_family: str,
    grid: dict[str, Sequence[Any]],
    k_folds: int = 5,
    seed: int = 0,
    oversample: bool = True,
) -> GridSearchResult:
    """Exhaustive search scored by mean weighted F1 over stratified folds.

    Oversampling is applied to each training fold only. Ties keep the earliest
    grid point.
    """
    trainer = TRAINERS[model_family]
    folds = stratified_folds(ds.labels, k_folds, seed)
    keys = list(grid)
    results = []
    best: tuple[float, dict] | None = None
    for values in itertools.product(*(grid[k] for k in keys)):
        params = dict(zip(keys, values))
        scores = []
        for f, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(np.arange(len(ds.labels)), test_idx)
            train = ds.subset(train_idx)
            if oversample:
                train = random_oversample(train, seed + f)
            model = trainer(train, **params)
            pred = model.predict(ds.features[test_idx])
            scores.append(classification_metrics(ds.labels[test_idx], pred).weighted.f1)
        mean = float(np.mean(scores))
        results.append((params, scores))
        if best is None or mean > best[0]:
            best = (mean, params)
    assert best is not None
    return GridSearchResult(best[1], best[0], results)


# -- task models -------------------------------------------------------------

READABILITY_FEATURES = [
    "entropy_bits_per_word", "reading_time_minutes", "unique_word_ratio", "coherence",
    "imprecise_freq", "connective_freq", "grammar_error_rate", "fkgl",
]


@dataclass
class AmbiguityModels:
    forest: ForestModel | None = None
    logreg: LinearModel | None = None

    def to_dict(self) -> dict:
        if self.forest is None or self.logreg is None:
            raise NotTrainedError("ambiguity models are not trained")
        return {"format_version": MODEL_FORMAT_VERSION, "type": "ambiguity",
                "forest": self.forest.to_dict(), "logreg": self.logreg.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "AmbiguityModels":
        return cls(ForestModel.from_dict(d["forest"]), LinearModel.from_dict(d["logreg"]))


def train_ambiguity(ds: Dataset, seed: int = 0, n_trees: int = 50) -> AmbiguityModels:
    return AmbiguityModels(
        forest=forest_train(ds, n_trees=n_trees, seed=seed),
        logreg=logreg_train(ds, l2=0.01, lr=0.5, epochs=500, standardize=True),
    )


def classify_ambiguity(models: AmbiguityModels | None, features) -> dict[str, AmbiguityLabel]:
    """Label from each model; disagreements are kept as-is."""
    if models is None or models.forest is None or models.logreg is None:
        raise NotTrainedError("ambiguity models are not trained")
    x = np.atleast_2d(np.asarray(features, dtype=float))
    return {
        "forest": AmbiguityLabel(models.forest.predict(x)[0]),
        "logreg": AmbiguityLabel(models.logreg.predict(x)[0]),
    }


@dataclass
class OverallModel:
    model: LinearModel
    best_params: dict
    cv_score: float

    @property
    def feature_importances(self) -> dict[str, float]:
        """Signed coefficients on standardized features (positive favours the second class)."""
        return {n: float(w) for n, w in zip(self.model.feature_names, self.model.weights)}

    def to_dict(self) -> dict:
        return {"format_version": MODEL_FORMAT_VERSION, "type": "overall",
                "model": self.model.to_dict(), "best_params": self.best_params,
                "cv_score": self.cv_score}

    @classmethod
    def from_dict(cls, d: dict) -> "OverallModel":
        return cls(LinearModel.from_dict(d["model"]), dict(d["best_params"]), float(d["cv_score"]))


DEFAULT_OVERALL_GRID = {"l2": [0.001, 0.01, 0.1, 1.0], "lr": [0.5], "epochs": [300]}


def train_overall(
    ds: Dataset,
    seed: int = 0,
    grid: dict[str, Sequence[Any]] | None = None,
    k_folds: int = 5,
    oversample: bool = True,
) -> OverallModel:
    """Acceptable/unacceptable classifier: tuned logistic regression on standardized features."""
    grid = dict(grid or DEFAULT_OVERALL_GRID)
    grid.setdefault("standardize", [True])
    search = grid_search_cv(ds, "logreg", grid, k_folds=k_folds, seed=seed, oversample=oversample)
    train = random_oversample(ds, seed) if oversample else ds
    model = logreg_train(train, **search.best_params)
    return OverallModel(model, search.best_params, search.best_score)


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), sort_keys=True, indent=1), encoding="utf-8")
