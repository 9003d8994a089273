"""Binary policy / non-policy page classifier over keyphrase presence features."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .ml import (
    MODEL_FORMAT_VERSION,
    Dataset,
    DegenerateDataError,
    NotTrainedError,
    forest_train,
    linear_svm_train,
    logreg_train,
    model_from_dict,
)
from .text import fold_plural, stopwords, tokenize

log = logging.getLogger(__name__)

DEFAULT_PHRASE_THRESHOLD = 1.0
MAX_PHRASE_LEN = 3
DEFAULT_SELECT_K = 200
MAX_VOCAB = 3000
DECISION_THRESHOLD = 0.5
POSITIVE, NEGATIVE = "1", "0"

_FRAGMENT_RE = re.compile(r"[.,;:!?()\[\]{}\"“”|•·/\n]+")


def _folded(tokens: Sequence[str]) -> list[str]:
    return [fold_plural(t) for t in tokens]


def candidate_runs(text: str, max_len: int = MAX_PHRASE_LEN) -> list[tuple[str, ...]]:
    """Stopword- and punctuation-delimited token runs, long runs cut into chunks of ``max_len``."""
    stop = stopwords("en")
    runs: list[tuple[str, ...]] = []
    for fragment in _FRAGMENT_RE.split(text):
        run: list[str] = []
        for tok in tokenize(fragment) + [None]:
            if tok is None or tok in stop or any(c.isdigit() for c in tok):
                for i in range(0, len(run), max_len):
                    runs.append(tuple(_folded(run[i : i + max_len])))
                run = []
            else:
                run.append(tok)
    return runs


def score_keyphrases(text: str, max_len: int = MAX_PHRASE_LEN) -> dict[str, float]:
    """RAKE-style scores: occurrences times the sum of member-word degree/frequency."""
    runs = candidate_runs(text, max_len)
    freq: Counter = Counter()
    degree: Counter = Counter()
    for run in runs:
        for w in run:
            freq[w] += 1
            degree[w] += len(run)
    occurrences = Counter(runs)
    return {
        " ".join(run): occ * sum(degree[w] / freq[w] for w in run)
        for run, occ in occurrences.items()
    }


def extract_keyphrases(text: str, threshold: float = DEFAULT_PHRASE_THRESHOLD) -> list[str]:
    """Keyphrases scoring at least ``threshold``, best first (ties lexicographic)."""
    scores = score_keyphrases(text)
    kept = [(s, p) for p, s in scores.items() if s >= threshold]
    return [p for s, p in sorted(kept, key=lambda sp: (-sp[0], sp[1]))]


@dataclass
class KeyphraseFeatureSpace:
    phrases: list[str]
    selected_indices: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.phrases)) != len(self.phrases):
            raise ValueError("duplicate phrases in feature space")
        if any(not 0 <= i < len(self.phrases) for i in self.selected_indices):
            raise ValueError("selected index out of range")

    @property
    def selected_phrases(self) -> list[str]:
        return [self.phrases[i] for i in self.selected_indices]


def build_feature_space(docs: Sequence[str], max_vocab: int = MAX_VOCAB,
                        threshold: float = DEFAULT_PHRASE_THRESHOLD) -> KeyphraseFeatureSpace:
    """Vocabulary of keyphrases ranked by document frequency (ties lexicographic)."""
    df: Counter = Counter()
    for doc in docs:
        df.update(set(extract_keyphrases(doc, threshold)))
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_vocab]
    return KeyphraseFeatureSpace([p for p, _ in ranked])


def _doc_ngrams(text: str, lengths: set[int]) -> set[str]:
    toks = _folded(tokenize(text))
    return {" ".join(toks[i : i + n]) for n in lengths for i in range(len(toks) - n + 1)}


def binary_feature_matrix(docs: Sequence[str], space: KeyphraseFeatureSpace | Sequence[str]) -> np.ndarray:
    """Cell (d, p) is 1 iff phrase p occurs as a contiguous folded token run in doc d."""
    phrases = space.phrases if isinstance(space, KeyphraseFeatureSpace) else list(space)
    lengths = {len(p.split()) for p in phrases}
    out = np.zeros((len(docs), len(phrases)), dtype=np.uint8)
    for d, doc in enumerate(docs):
        grams = _doc_ngrams(doc, lengths)
        for p, phrase in enumerate(phrases):
            if phrase in grams:
                out[d, p] = 1
    return out


# -- ANOVA F -----------------------------------------------------------------

def _binary_groups(labels: Sequence) -> np.ndarray:
    values = sorted(set(map(str, labels)))
    if len(values) != 2:
        raise DegenerateDataError("ANOVA-F selection needs exactly two classes")
    return np.array([values.index(str(v)) for v in labels])


def _exact_f(col: Sequence[int], groups: np.ndarray) -> Fraction | float:
    """F for integer-valued data, computed exactly. +inf when only within-group variance is zero."""
    n = len(col)
    sums, sq, counts = [0, 0], [0, 0], [0, 0]
    for v, g in zip(col, groups):
        v = int(v)
        sums[g] += v
        sq[g] += v * v
        counts[g] += 1
    between = sum(Fraction(sums[g] ** 2, counts[g]) for g in (0, 1)) - Fraction(sum(sums) ** 2, n)
    within = sum(sq) - sum(Fraction(sums[g] ** 2, counts[g]) for g in (0, 1))
    if within == 0:
        return float("inf") if between > 0 else Fraction(0)
    return between * (n - 2) / within


def _float_f(col: np.ndarray, groups: np.ndarray) -> float:
    n = len(col)
    grand = col.mean()
    between = within = 0.0
    for g in (0, 1):
        part = col[groups == g]
        between += len(part) * (part.mean() - grand) ** 2
        within += float(((part - part.mean()) ** 2).sum())
    if within == 0.0:
        return float("inf") if between > 0 else 0.0
    return between * (n - 2) / within


def anova_f(matrix, labels: Sequence) -> list[Fraction | float]:
    """Per-feature one-way ANOVA F (between mean square / within mean square)."""
    x = np.asarray(matrix)
    groups = _binary_groups(labels)
    if x.ndim != 2 or len(x) != len(groups):
        raise ValueError("matrix rows must match labels")
    integral = np.issubdtype(x.dtype, np.integer) or np.all(np.mod(x, 1) == 0)
    if integral:
        xi = x.astype(np.int64)
        return [_exact_f(xi[:, j].tolist(), groups) for j in range(x.shape[1])]
    return [_float_f(x[:, j].astype(float), groups) for j in range(x.shape[1])]


def anova_f_select(matrix, labels: Sequence, k: int) -> list[int]:
    """Indices of the top-k features by F, ties broken by lower index."""
    x = np.asarray(matrix)
    if not 0 <= k <= x.shape[1]:
        raise ValueError(f"k={k} outside [0, {x.shape[1]}]")
    scores = anova_f(x, labels)
    order = sorted(range(len(scores)), key=lambda j: (-scores[j], j))
    return order[:k]


# -- soft-voting ensemble ----------------------------------------------------

class ProbabilisticMember(Protocol):
    classes: list[str]

    def predict_proba(self, x) -> np.ndarray: ...


def positive_probability(member: ProbabilisticMember, x: np.ndarray) -> np.ndarray:
    proba = member.predict_proba(x)
    return proba[:, member.classes.index(POSITIVE)]


@dataclass
class PolicyDetector:
    space: KeyphraseFeatureSpace
    members: dict[str, ProbabilisticMember]
    threshold: float = DECISION_THRESHOLD

    def features(self, texts: Sequence[str]) -> np.ndarray:
        return binary_feature_matrix(texts, self.space.selected_phrases).astype(float)

    def member_probabilities(self, texts: Sequence[str]) -> dict[str, np.ndarray]:
        if not self.members:
            raise NotTrainedError("policy detector has no members")
        x = self.features(texts)
        return {name: np.clip(positive_probability(m, x), 0.0, 1.0) for name, m in self.members.items()}

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        """Soft vote: arithmetic mean of the members' positive-class probabilities."""
        probs = list(self.member_probabilities(texts).values())
        return np.mean(np.vstack(probs), axis=0)

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "type": "policy_detector",
            "threshold": self.threshold,
            "vocabulary": list(self.space.phrases),
            "selected_indices": list(self.space.selected_indices),
            "members": {name: m.to_dict() for name, m in self.members.items()},
            "member_weights": {name: 1.0 / len(self.members) for name in self.members},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyDetector":
        if d.get("type") != "policy_detector":
            raise ValueError("not a policy detector document")
        space = KeyphraseFeatureSpace(list(d["vocabulary"]), list(d["selected_indices"]))
        members = {name: model_from_dict(m) for name, m in d["members"].items()}
        return cls(space, members, float(d.get("threshold", DECISION_THRESHOLD)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PolicyDetector":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def train_policy_detector(
    docs: Sequence[str],
    labels: Sequence[bool | int],
    k: int = DEFAULT_SELECT_K,
    seed: int = 0,
) -> PolicyDetector:
    """Fit logistic regression, a linear SVM and a random forest on ANOVA-selected phrases."""
    y = [POSITIVE if bool(v) else NEGATIVE for v in labels]
    counts = Counter(y)
    if counts[POSITIVE] < 2 or counts[NEGATIVE] < 2:
        raise DegenerateDataError("need at least two documents per class")
    space = build_feature_space(docs)
    full = binary_feature_matrix(docs, space)
    selected = anova_f_select(full, y, min(k, len(space.phrases)))
    space.selected_indices = selected
    ds = Dataset(full[:, selected], np.array(y), space.selected_phrases)
    members = {
        "logistic": logreg_train(ds, l2=0.01, lr=0.5, epochs=300),
        "svm": linear_svm_train(ds, c=10.0, epochs=100, seed=seed),
        "forest": forest_train(ds, n_trees=25, seed=seed),
    }
    return PolicyDetector(space, members)


def predict_is_policy(model: PolicyDetector | None, text: str) -> float:
    if model is None:
        raise NotTrainedError("policy detector is not trained")
    return float(model.predict_proba([text])[0])


def shipped_corpus() -> tuple[list[str], list[int]]:
    """The small curated policy / non-policy corpus bundled with the package."""
    data = json.loads((resources.files("policylens") / "data" / "policy_corpus.json").read_text(encoding="utf-8"))
    docs = list(data["policy"]) + list(data["other"])
    return docs, [1] * len(data["policy"]) + [0] * len(data["other"])


@lru_cache(maxsize=4)
def default_detector(seed: int = 0) -> PolicyDetector:
    docs, labels = shipped_corpus()
    return train_policy_detector(docs, labels, seed=seed)
