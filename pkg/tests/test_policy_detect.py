from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from policylens.ml import DegenerateDataError, NotTrainedError
from policylens.policy_detect import (
    KeyphraseFeatureSpace,
    PolicyDetector,
    anova_f,
    anova_f_select,
    binary_feature_matrix,
    extract_keyphrases,
    predict_is_policy,
    score_keyphrases,
    shipped_corpus,
    train_policy_detector,
)


def brute_f(column, labels):
    """Textbook one-way ANOVA F with exact rationals: (SSB / (k-1)) / (SSW / (n-k))."""
    groups = {}
    for v, lab in zip(column, labels):
        groups.setdefault(lab, []).append(Fraction(int(v)))
    values = [v for g in groups.values() for v in g]
    n, k = len(values), len(groups)
    grand = sum(values) / n
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups.values())
    ssw = sum((v - sum(g) / len(g)) ** 2 for g in groups.values() for v in g)
    if ssw == 0:
        return float("inf") if ssb > 0 else Fraction(0)
    return (ssb / (k - 1)) / (ssw / (n - k))


def brute_rank(matrix, labels, k):
    scores = [brute_f(matrix[:, j], labels) for j in range(matrix.shape[1])]
    return sorted(range(len(scores)), key=lambda j: (-scores[j], j))[:k]


def test_keyphrase_run_splitting():
    assert extract_keyphrases("we collect personal data") == ["collect personal data"]
    # "data" occurs twice: 2 occurrences x deg/freq 1 = 2; the others score 1
    assert extract_keyphrases("The data we collect, and the data we share.") == ["data", "collect", "share"]


def test_all_stopwords_give_nothing():
    assert extract_keyphrases("the of and to it is") == []


def test_repeated_phrase_scores_higher():
    scores = score_keyphrases("cookie banner. cookie banner. privacy notice.")
    assert scores["cookie banner"] > scores["privacy notice"]


def test_plural_folding_and_long_runs_are_chunked():
    phrases = extract_keyphrases("smart cameras record encrypted video clips")
    assert all(len(p.split()) <= 3 for p in phrases)
    assert "smart camera record" in phrases


def test_binary_matrix_examples():
    m = binary_feature_matrix(["we collect personal data", ""], ["personal data", "cookie"])
    assert m.tolist() == [[1, 0], [0, 0]]
    assert m.dtype == np.uint8


def test_binary_matrix_matches_naive_scan():
    docs = ["Cookies are small files.", "We share data with partners.", "Weather today is sunny.",
            "Personal data and cookies.", "Partners process personal data for us."]
    phrases = ["cookie", "personal data", "partner", "sunny", "share data", "us"]
    def naive(doc, phrase):
        toks = [t[:-1] if t.endswith("s") and len(t) > 3 and not t.endswith("ss") else t
                for t in doc.lower().replace(".", " ").split()]
        p = phrase.split()
        return int(any(toks[i:i + len(p)] == p for i in range(len(toks))))
    expected = [[naive(d, p) for p in phrases] for d in docs]
    assert binary_feature_matrix(docs, phrases).tolist() == expected


@given(st.permutations(list(range(5))))
def test_matrix_invariant_to_vocabulary_order(perm):
    docs = ["we collect personal data", "cookie banner text", "personal data sale", "nothing here"]
    phrases = ["personal data", "cookie", "sale", "collect", "nothing"]
    base = binary_feature_matrix(docs, phrases)
    shuffled = binary_feature_matrix(docs, [phrases[i] for i in perm])
    assert np.array_equal(shuffled, base[:, perm])


def test_feature_space_invariants():
    with pytest.raises(ValueError):
        KeyphraseFeatureSpace(["a", "a"])
    with pytest.raises(ValueError):
        KeyphraseFeatureSpace(["a"], [3])


def test_anova_examples():
    labels = ["0", "0", "0", "1", "1", "1"]
    m = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 0], [1, 0, 1], [1, 1, 1], [1, 0, 1]])
    f = anova_f(m, labels)
    assert f[0] == 0 and f[2] == float("inf")
    assert anova_f_select(m, labels, 3) == [2, 1, 0]


def test_anova_six_doc_toy_matches_oracle():
    m = np.array([[1, 0, 1, 1], [1, 1, 0, 1], [0, 0, 1, 1], [0, 1, 0, 0], [1, 1, 0, 0], [0, 1, 1, 0]])
    labels = [1, 1, 1, 0, 0, 0]
    assert anova_f_select(m, labels, 4) == brute_rank(m, labels, 4)
    # feature 0: group means 2/3 vs 1/3, SSB = 1/6, SSW = 4/3, F = (1/6)/(4/3/4) = 1/2
    assert anova_f(m, labels)[0] == Fraction(1, 2)


def test_anova_errors():
    with pytest.raises(DegenerateDataError):
        anova_f_select(np.ones((3, 2)), ["1", "1", "1"], 1)
    with pytest.raises(ValueError):
        anova_f_select(np.ones((2, 2)), ["0", "1"], 3)


@settings(max_examples=100, deadline=None)
@given(arrays(np.uint8, (8, 5), elements=st.integers(0, 1)),
       st.lists(st.integers(0, 1), min_size=8, max_size=8).filter(lambda ls: 0 < sum(ls) < 8),
       st.integers(0, 5))
def test_anova_select_equals_brute_force(matrix, labels, k):
    assert anova_f_select(matrix, labels, k) == brute_rank(matrix, labels, k)


def test_anova_float_matrix():
    x = np.array([[0.5, 1.0], [0.7, 1.0], [2.5, 1.0], [2.9, 1.0]])
    f = anova_f(x, ["a", "a", "b", "b"])
    assert f[0] == pytest.approx(float(brute_f([5, 7, 25, 29], ["a", "a", "b", "b"])))
    assert f[1] == 0.0


class _Stub:
    classes = ["0", "1"]

    def __init__(self, p):
        self.p = p

    def predict_proba(self, x):
        n = len(x)
        return np.column_stack([np.full(n, 1 - self.p), np.full(n, self.p)])


def test_soft_vote_is_member_mean():
    space = KeyphraseFeatureSpace(["privacy"], [0])
    det = PolicyDetector(space, {"a": _Stub(0.2), "b": _Stub(0.5), "c": _Stub(0.8)})
    assert predict_is_policy(det, "text") == pytest.approx(0.5)
    ones = PolicyDetector(space, {k: _Stub(1.0) for k in "abc"})
    assert predict_is_policy(ones, "text") == 1.0


def test_untrained_detector():
    with pytest.raises(NotTrainedError):
        predict_is_policy(None, "text")
    with pytest.raises(NotTrainedError):
        predict_is_policy(PolicyDetector(KeyphraseFeatureSpace([]), {}), "text")


@pytest.fixture(scope="module")
def split_corpus():
    docs, labels = shipped_corpus()
    pos = [d for d, l in zip(docs, labels) if l]
    neg = [d for d, l in zip(docs, labels) if not l]
    train_docs = pos[:10] + neg[:10]
    train_labels = [1] * 10 + [0] * 10
    model = train_policy_detector(train_docs, train_labels, seed=0)
    return model, pos[10:], neg[10:], train_docs


def test_held_out_policies(split_corpus):
    model, held_pos, held_neg, _ = split_corpus
    for doc in held_pos:
        assert predict_is_policy(model, doc) > 0.5
    for doc in held_neg:
        assert predict_is_policy(model, doc) < 0.5


def test_training_duplicate_is_positive(split_corpus):
    model, _, _, train_docs = split_corpus
    assert predict_is_policy(model, train_docs[0]) > 0.5


def test_probabilities_bounded(split_corpus):
    model, *_ = split_corpus
    probs = model.predict_proba(["", "privacy policy personal data", "football scores"])
    assert np.all((probs >= 0) & (probs <= 1))
    assert set(model.members) == {"logistic", "svm", "forest"}


def test_model_json_round_trip(tmp_path, split_corpus):
    model, held_pos, *_ = split_corpus
    model.save(tmp_path / "m.json")
    loaded = PolicyDetector.load(tmp_path / "m.json")
    doc = loaded.to_dict()
    assert doc["type"] == "policy_detector" and doc["format_version"] >= 1
    assert sum(doc["member_weights"].values()) == pytest.approx(1.0)
    assert predict_is_policy(loaded, held_pos[0]) == pytest.approx(predict_is_policy(model, held_pos[0]), abs=1e-12)


def test_training_is_seed_deterministic():
    docs, labels = shipped_corpus()
    a = train_policy_detector(docs, labels, seed=3).to_dict()
    b = train_policy_detector(docs, labels, seed=3).to_dict()
    assert a == b


def test_training_needs_two_per_class():
    with pytest.raises(DegenerateDataError):
        train_policy_detector(["privacy policy", "cookie notice", "news"], [1, 1, 0])


def test_brute_force_helper_sanity():
    # all-constant column has zero between-group variance
    for combo in itertools.product([0, 1], repeat=3):
        col = list(combo) * 2
        assert brute_f(col, [0, 0, 0, 1, 1, 1]) == 0
