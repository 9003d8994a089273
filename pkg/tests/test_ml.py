from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from policylens.ml import (
    AmbiguityLabel,
    AmbiguityModels,
    Dataset,
    DegenerateDataError,
    ForestModel,
    LinearModel,
    NotTrainedError,
    classification_metrics,
    classify_ambiguity,
    forest_train,
    grid_search_cv,
    hinge_loss,
    linear_svm_train,
    load_dataset_csv,
    logistic_loss_grad,
    logreg_predict,
    logreg_train,
    model_from_dict,
    random_oversample,
    save_dataset_csv,
    softmax_loss_grad,
    stratified_folds,
    train_ambiguity,
    train_overall,
)

from helpers import FIXTURES


def make_ds(x, y) -> Dataset:
    x = np.asarray(x, dtype=float)
    return Dataset(x, np.asarray(y), [f"f{i}" for i in range(x.shape[1])])


def separable(n: int = 200, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    x[:, 0] = np.where(rng.random(n) < 0.5, -1, 1) * (1 + rng.random(n))  # |x0| >= 1
    return make_ds(x, np.where(x[:, 0] > 0, "pos", "neg"))


def xor(n: int = 200, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(n, 2))
    x = signs * 2 + rng.normal(scale=0.4, size=(n, 2))
    return make_ds(x, np.where(signs[:, 0] * signs[:, 1] > 0, "same", "diff"))


def imbalanced(seed: int, n_major: int = 135, n_minor: int = 17) -> Dataset:
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.normal(0.0, 1.0, size=(n_major, 2)), rng.normal(1.2, 1.0, size=(n_minor, 2))])
    return make_ds(x, ["acceptable"] * n_major + ["unacceptable"] * n_minor)


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(1e-8, abs(a), abs(b))


# -- gradients ---------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_logistic_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(12, 4))
    y = (rng.random(12) < 0.5).astype(float)
    w, b, l2, h = rng.normal(size=4), float(rng.normal()), 0.1, 1e-6
    _, gw, gb = logistic_loss_grad(w, b, x, y, l2)
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        num = (logistic_loss_grad(w + e, b, x, y, l2)[0] - logistic_loss_grad(w - e, b, x, y, l2)[0]) / (2 * h)
        assert rel_err(num, gw[j]) <= 1e-5
    num_b = (logistic_loss_grad(w, b + h, x, y, l2)[0] - logistic_loss_grad(w, b - h, x, y, l2)[0]) / (2 * h)
    assert rel_err(num_b, gb) <= 1e-5


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_softmax_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(10, 3))
    y = rng.integers(0, 3, size=10)
    w, b, l2, h = rng.normal(size=(3, 3)), rng.normal(size=3), 0.05, 1e-6
    _, gw, gb = softmax_loss_grad(w, b, x, y, l2)
    for idx in np.ndindex(w.shape):
        e = np.zeros_like(w)
        e[idx] = h
        num = (softmax_loss_grad(w + e, b, x, y, l2)[0] - softmax_loss_grad(w - e, b, x, y, l2)[0]) / (2 * h)
        assert rel_err(num, gw[idx]) <= 1e-5
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        num = (softmax_loss_grad(w, b + e, x, y, l2)[0] - softmax_loss_grad(w, b - e, x, y, l2)[0]) / (2 * h)
        assert rel_err(num, gb[k]) <= 1e-5


# -- linear models -----------------------------------------------------------

def test_zero_weight_model_is_half():
    model = LinearModel("logistic", ["a", "b"], np.zeros(2), np.zeros(1))
    assert logreg_predict(model, [[3.0, -1.0]]).tolist() == [[0.5, 0.5]]


def test_logreg_separable_accuracy():
    train, test = separable(200, 0), separable(200, 1)
    model = logreg_train(train)
    acc = np.mean(np.array(model.predict(test.features)) == test.labels)
    assert acc >= 0.95


def test_logreg_multiclass_and_errors():
    rng = np.random.default_rng(0)
    centers = np.array([[0, 4], [4, 0], [-4, -4]])
    y = np.repeat([0, 1, 2], 30)
    ds = make_ds(centers[y] + rng.normal(size=(90, 2)), np.array(["a", "b", "c"])[y])
    model = logreg_train(ds)
    assert model.kind == "softmax"
    assert np.allclose(model.predict_proba(ds.features).sum(axis=1), 1.0)
    assert np.mean(np.array(model.predict(ds.features)) == ds.labels) >= 0.95
    with pytest.raises(DegenerateDataError):
        logreg_train(make_ds([[1.0], [2.0]], ["a", "a"]))


def test_logreg_deterministic_and_round_trip():
    ds = separable(50)
    a, b = logreg_train(ds, standardize=True), logreg_train(ds, standardize=True)
    assert np.array_equal(a.weights, b.weights)
    back = model_from_dict(a.to_dict())
    assert np.array_equal(back.predict_proba(ds.features), a.predict_proba(ds.features))


def test_duplicate_features_split_evenly():
    rng = np.random.default_rng(2)
    base = rng.normal(size=(80, 1))
    ds = make_ds(np.hstack([base, base]), np.where(base[:, 0] > 0, "y", "n"))
    w = logreg_train(ds, l2=0.1).weights
    assert w[0] == pytest.approx(w[1], rel=1e-9)


def test_single_informative_feature_dominates():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(150, 5))
    ds = make_ds(x, np.where(x[:, 2] > 0, "Unacceptable", "Acceptable"))
    model = train_overall(ds, seed=0, k_folds=3)
    imp = model.feature_importances
    assert max(imp, key=lambda k: abs(imp[k])) == "f2"


def perceptron(x: np.ndarray, y: np.ndarray, epochs: int = 1000) -> np.ndarray:
    xb = np.hstack([x, np.ones((len(x), 1))])
    w = np.zeros(xb.shape[1])
    for _ in range(epochs):
        errors = 0
        for xi, yi in zip(xb, y):
            if yi * (xi @ w) <= 0:
                w += yi * xi
                errors += 1
        if errors == 0:
            break
    return xb @ w


def test_svm_matches_perceptron_and_hinge_vanishes():
    ds = separable(60, 3)
    model = linear_svm_train(ds, c=100.0, epochs=300, lr=0.01)
    assert hinge_loss(model, ds) == pytest.approx(0.0, abs=1e-3)
    y = np.where(ds.labels == model.classes[1], 1.0, -1.0)
    assert np.array_equal(np.sign(model.decision(ds.features)), np.sign(perceptron(ds.features, y)))


def test_svm_scale_invariance_of_predictions():
    ds = separable(60, 4)
    scaled = make_ds(ds.features * 10.0, ds.labels)
    a = linear_svm_train(ds, epochs=100, lr=0.01)
    b = linear_svm_train(scaled, epochs=100, lr=0.01 / 100)
    assert a.predict(ds.features) == b.predict(scaled.features)


# -- forest ------------------------------------------------------------------

def test_forest_pure_and_deterministic():
    pure = make_ds([[0.0], [1.0], [2.0]], ["x", "x", "x"])
    assert forest_train(pure, n_trees=3).predict_proba([[5.0]]).tolist() == [[1.0]]
    ds = xor(80)
    a = forest_train(ds, n_trees=10, seed=9)
    b = forest_train(ds, n_trees=10, seed=9, n_jobs=4)
    assert a.to_dict() == b.to_dict()
    assert ForestModel.from_dict(a.to_dict()).to_dict() == a.to_dict()


def test_forest_xor():
    train, test = xor(200, 0), xor(200, 1)
    model = forest_train(train, n_trees=25, max_depth=4, seed=0)
    acc = np.mean(np.array(model.predict(test.features)) == test.labels)
    assert acc >= 0.9


# -- resampling and evaluation -----------------------------------------------

def test_oversample_135_17_counts():
    ds = imbalanced(0)
    assert ds.class_counts() == {"acceptable": 135, "unacceptable": 17}
    out = random_oversample(ds, seed=1)
    assert out.class_counts() == {"acceptable": 135, "unacceptable": 135}
    # originals untouched, synthesized rows copy minority rows
    assert np.array_equal(out.features[:152], ds.features)
    minority = {tuple(r) for r in ds.features[ds.labels == "unacceptable"]}
    assert all(tuple(r) in minority for r in out.features[152:])
    assert set(out.labels[152:].tolist()) == {"unacceptable"}


def test_oversample_balanced_unchanged():
    ds = make_ds([[1.0], [2.0], [3.0], [4.0]], ["a", "b", "a", "b"])
    out = random_oversample(ds, seed=3)
    assert sorted(map(tuple, out.features)) == sorted(map(tuple, ds.features))


def test_oversampling_improves_minority_recall():
    for seed in range(5):
        train, test = imbalanced(seed), imbalanced(100 + seed, 135, 135)
        base = logreg_train(train, l2=0.01, standardize=True)
        over = logreg_train(random_oversample(train, seed), l2=0.01, standardize=True)
        r_base = classification_metrics(test.labels, base.predict(test.features)).per_class["unacceptable"].recall
        r_over = classification_metrics(test.labels, over.predict(test.features)).per_class["unacceptable"].recall
        assert r_over > r_base, seed


@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=9, max_size=40), st.integers(2, 3),
       st.integers(0, 100))
def test_stratified_folds_partition_and_ratio(labels, k, seed):
    counts = {c: labels.count(c) for c in set(labels)}
    if min(counts.values()) < k:
        with pytest.raises(ValueError):
            stratified_folds(labels, k, seed)
        return
    folds = stratified_folds(labels, k, seed)
    flat = np.concatenate(folds)
    assert sorted(flat.tolist()) == list(range(len(labels)))
    for c, n in counts.items():
        per_fold = [sum(labels[i] == c for i in f) for f in folds]
        assert max(per_fold) - min(per_fold) <= 1
        assert all(abs(p - n / k) <= 1 for p in per_fold)


def test_metrics_examples():
    perfect = classification_metrics(["a", "b", "a"], ["a", "b", "a"])
    assert perfect.weighted.f1 == 1.0 and perfect.accuracy == 1.0
    one_class = classification_metrics(["a", "b", "b"], ["a", "a", "a"])
    assert one_class.per_class["b"].recall == 0.0
    assert "b:precision" in one_class.zero_division
    # TP=2 FP=1 FN=1 for class "p"
    m = classification_metrics(["p", "p", "p", "n", "n"], ["p", "p", "n", "p", "n"])
    assert m.per_class["p"].precision == pytest.approx(2 / 3)
    assert m.per_class["p"].recall == pytest.approx(2 / 3)
    assert m.per_class["p"].f1 == pytest.approx(2 / 3)


def test_grid_search_examples():
    ds = separable(40, 7)
    single = grid_search_cv(ds, "logreg", {"l2": [0.1]}, k_folds=4, seed=0)
    assert single.best_params == {"l2": 0.1}
    grid = {"l2": [10.0, 0.01], "epochs": [20]}
    result = grid_search_cv(ds, "logreg", grid, k_folds=4, seed=2)
    folds = stratified_folds(ds.labels, 4, 2)
    manual = []
    for l2 in grid["l2"]:
        scores = []
        for f, test_idx in enumerate(folds):
            train = random_oversample(ds.subset(np.setdiff1d(np.arange(40), test_idx)), 2 + f)
            pred = logreg_train(train, l2=l2, epochs=20).predict(ds.features[test_idx])
            scores.append(classification_metrics(ds.labels[test_idx], pred).weighted.f1)
        manual.append(scores)
    assert [s for _, s in result.results] == manual
    means = [np.mean(s) for s in manual]
    assert result.best_params["l2"] == grid["l2"][int(np.argmax(means))]
    with pytest.raises(ValueError):
        grid_search_cv(ds, "logreg", {"l2": [0.1]}, k_folds=100)


# -- ambiguity ---------------------------------------------------------------

def test_ambiguity_fixture_models():
    ds = load_dataset_csv(FIXTURES / "models" / "ambiguity.csv")
    assert len(ds.labels) == 30
    models = train_ambiguity(ds, seed=0, n_trees=15)
    labels = classify_ambiguity(models, ds.features[0])
    assert set(labels) == {"forest", "logreg"}
    assert all(isinstance(v, AmbiguityLabel) for v in labels.values())
    back = AmbiguityModels.from_dict(models.to_dict())
    assert classify_ambiguity(back, ds.features[0]) == labels
    folds = stratified_folds(ds.labels, 3, 0)
    f1s = []
    for test_idx in folds:
        m = train_ambiguity(ds.subset(np.setdiff1d(np.arange(30), test_idx)), seed=0, n_trees=15)
        pred = m.forest.predict(ds.features[test_idx])
        f1s.append(classification_metrics(ds.labels[test_idx], pred).weighted.f1)
    print(f"ambiguity fixture 3-fold forest weighted F1: {np.mean(f1s):.3f}")
    with pytest.raises(NotTrainedError):
        classify_ambiguity(None, ds.features[0])
    with pytest.raises(NotTrainedError):
        AmbiguityModels().to_dict()


def test_dataset_validation_and_csv(tmp_path):
    with pytest.raises(ValueError):
        make_ds([[float("nan")]], ["a"])
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 2)), np.array(["a", "b"]), ["only"])
    ds = separable(5)
    save_dataset_csv(ds, tmp_path / "d.csv")
    back = load_dataset_csv(tmp_path / "d.csv")
    assert np.array_equal(back.features, ds.features) and back.labels.tolist() == ds.labels.tolist()
