"""Document language identification by a majority vote of in-house detectors."""

from __future__ import annotations

import json
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

from .text import stopwords, tokenize

UNKNOWN = "unknown"
LANGUAGES = ("de", "en", "es", "fr", "it", "pt")
PROFILE_SIZE = 300
MIN_TRAINING_CHARS = 1000
MIN_DETECT_CHARS = 3
STOPWORD_TABLE_SIZE = 40

_NON_LETTER_RE = re.compile(r"[^\w']+|[\d_]+")


class Detection(NamedTuple):
    lang: str
    confidence: float
    flags: tuple[str, ...] = ()


def _normalize(text: str) -> str:
    text = unicodedata.normalize("NFC", text).lower().replace("’", "'")
    return " ".join(_NON_LETTER_RE.sub(" ", text).split())


def _ngram_counts(text: str, max_n: int = 3) -> Counter:
    padded = f" {_normalize(text)} "
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(padded) - n + 1):
            gram = padded[i : i + n]
            if gram.strip():
                counts[gram] += 1
    return counts


def _ranked(counts: Counter, limit: int) -> list[str]:
    return [g for g, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:limit]]


# -- n-gram profiles ---------------------------------------------------------

@dataclass(frozen=True)
class LanguageProfile:
    lang: str
    top_ngrams: tuple[tuple[str, int], ...]

    def __post_init__(self):
        ranks = [r for _, r in self.top_ngrams]
        if ranks != list(range(len(ranks))):
            raise ValueError("profile ranks must be consecutive from 0")

    @property
    def ranks(self) -> dict[str, int]:
        return {g: r for g, r in self.top_ngrams}

    def to_dict(self) -> dict:
        return {"lang": self.lang, "top_ngrams": [list(p) for p in self.top_ngrams]}

    @classmethod
    def from_dict(cls, d: dict) -> "LanguageProfile":
        return cls(d["lang"], tuple((g, int(r)) for g, r in d["top_ngrams"]))


def train_profile(text: str, lang: str, limit: int = PROFILE_SIZE) -> LanguageProfile:
    """Character 1-3 gram profile, ranked by frequency then lexicographically."""
    if len(text) < MIN_TRAINING_CHARS:
        raise ValueError(f"training corpus too small ({len(text)} < {MIN_TRAINING_CHARS} chars)")
    grams = _ranked(_ngram_counts(text), limit)
    return LanguageProfile(lang, tuple((g, r) for r, g in enumerate(grams)))


def out_of_place(doc_grams: Sequence[str], profile: LanguageProfile, max_penalty: int = PROFILE_SIZE) -> int:
    ranks = profile.ranks
    return sum(abs(r - ranks[g]) if g in ranks else max_penalty for r, g in enumerate(doc_grams))


def detect_ngram(text: str, profiles: Sequence[LanguageProfile]) -> Detection:
    """Closest profile by out-of-place distance; confidence = 1 - d_win / d_max,
    where d_max is the distance of a document sharing no n-gram with the profile."""
    if not profiles:
        raise ValueError("at least one profile is required")
    norm = _normalize(text)
    if not norm:
        return Detection(UNKNOWN, 0.0, ("short_text",))
    doc = _ranked(_ngram_counts(norm), PROFILE_SIZE)
    d_max = len(doc) * PROFILE_SIZE
    dist = sorted((out_of_place(doc, p), p.lang) for p in profiles)
    d_win, lang = dist[0]
    conf = 1.0 - d_win / d_max
    if len(norm) < MIN_DETECT_CHARS:
        return Detection(lang, min(conf, 0.1), ("short_text",))
    return Detection(lang, conf)


# -- stopword tables ---------------------------------------------------------

def stopword_table_from_corpus(text: str, size: int = STOPWORD_TABLE_SIZE) -> frozenset[str]:
    """The ``size`` most frequent words of a corpus (ties lexicographic)."""
    return frozenset(_ranked(Counter(tokenize(text)), size))


def detect_stopword(text: str, tables: dict[str, frozenset[str]]) -> Detection:
    tokens = tokenize(text)
    if not tokens or not tables:
        return Detection(UNKNOWN, 0.0)
    scores = sorted((-sum(t in table for t in tokens) / len(tokens), lang) for lang, table in tables.items())
    neg, lang = scores[0]
    if neg == 0:
        return Detection(UNKNOWN, 0.0)
    return Detection(lang, -neg)


# -- byte-bigram naive Bayes -------------------------------------------------

BIGRAM_SPACE = 256 * 256


def _byte_bigrams(text: str) -> Counter:
    data = f" {_normalize(text)} ".encode("utf-8")
    return Counter(data[i : i + 2] for i in range(len(data) - 1))


@dataclass
class BayesModel:
    """Multinomial naive Bayes over UTF-8 byte bigrams with add-one smoothing."""

    counts: dict[str, dict[bytes, int]]
    totals: dict[str, int]
    priors: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.priors:
            self.priors = {lang: 1.0 / len(self.counts) for lang in self.counts}

    @property
    def langs(self) -> list[str]:
        return sorted(self.counts)

    def log_likelihood(self, lang: str, bigrams: Counter) -> float:
        table = self.counts[lang]
        denom = math.log(self.totals[lang] + BIGRAM_SPACE)
        return math.fsum(c * (math.log(table.get(b, 0) + 1) - denom) for b, c in bigrams.items())

    def to_dict(self) -> dict:
        return {
            "counts": {lang: {b.hex(): c for b, c in sorted(t.items())} for lang, t in sorted(self.counts.items())},
            "totals": dict(sorted(self.totals.items())),
            "priors": dict(sorted(self.priors.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BayesModel":
        counts = {lang: {bytes.fromhex(h): int(c) for h, c in t.items()} for lang, t in d["counts"].items()}
        return cls(counts, {k: int(v) for k, v in d["totals"].items()}, dict(d.get("priors", {})))


def train_bayes(corpora: dict[str, str]) -> BayesModel:
    counts, totals = {}, {}
    for lang, text in corpora.items():
        c = _byte_bigrams(text)
        counts[lang] = dict(c)
        totals[lang] = sum(c.values())
    return BayesModel(counts, totals)


def detect_bayes(text: str, model: BayesModel) -> Detection:
    """Maximum-posterior language; confidence is its normalised posterior."""
    if not _normalize(text):
        return Detection(UNKNOWN, 0.0)
    bigrams = _byte_bigrams(text)
    logs = {lang: math.log(model.priors[lang]) + model.log_likelihood(lang, bigrams) for lang in model.langs}
    top = max(logs.values())
    z = math.fsum(math.exp(v - top) for v in logs.values())
    best = min(model.langs, key=lambda lang: (-logs[lang], lang))
    return Detection(best, min(1.0, math.exp(logs[best] - top) / z))


# -- ensemble ----------------------------------------------------------------

class Detector(Protocol):
    name: str

    def detect(self, text: str) -> Detection: ...


@dataclass
class NgramDetector:
    name: str
    profiles: list[LanguageProfile]

    def detect(self, text: str) -> Detection:
        return detect_ngram(text, self.profiles)


@dataclass
class StopwordDetector:
    name: str
    tables: dict[str, frozenset[str]]

    def detect(self, text: str) -> Detection:
        return detect_stopword(text, self.tables)


@dataclass
class BayesDetector:
    name: str
    model: BayesModel

    def detect(self, text: str) -> Detection:
        return detect_bayes(text, self.model)


@dataclass
class Verdict:
    lang: str
    per_detector: dict[str, tuple[str, float]]

    def to_dict(self) -> dict:
        return {"lang": self.lang, "per_detector": {k: list(v) for k, v in sorted(self.per_detector.items())}}


def majority_vote(votes: Sequence[tuple[str, float]]) -> str:
    """Plurality over non-abstaining votes; ties by summed confidence, then code."""
    tally: dict[str, list[float]] = {}
    for lang, conf in votes:
        if lang != UNKNOWN:
            tally.setdefault(lang, []).append(conf)
    if not tally:
        return UNKNOWN
    return min(tally, key=lambda lang: (-len(tally[lang]), -math.fsum(tally[lang]), lang))


def detect_majority(text: str, detectors: Sequence[Detector] | None = None) -> Verdict:
    detectors = default_detectors() if detectors is None else detectors
    if not detectors:
        raise ValueError("at least one detector is required")
    per = {}
    for det in detectors:
        lang, conf, *_ = det.detect(text)
        per[det.name] = (lang, conf)
    return Verdict(majority_vote(list(per.values())), per)


def training_corpus(lang: str, variant: str) -> str:
    return (resources.files("policylens") / "data" / "langid" / f"{lang}_{variant}.txt").read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def _default_detectors() -> tuple:
    dets = []
    for variant in ("a", "b"):
        corpora = {lang: training_corpus(lang, variant) for lang in LANGUAGES}
        dets.append(NgramDetector(f"ngram-{variant}", [train_profile(t, lang) for lang, t in corpora.items()]))
        if variant == "a":
            tables = {lang: stopwords(lang) for lang in LANGUAGES}
        else:
            tables = {lang: stopword_table_from_corpus(t) for lang, t in corpora.items()}
        dets.append(StopwordDetector(f"stopword-{variant}", tables))
        dets.append(BayesDetector(f"bayes-{variant}", train_bayes(corpora)))
    return tuple(dets)


def default_detectors() -> list[Detector]:
    """Six voters: each of the three algorithms trained on two independent corpora."""
    return list(_default_detectors())


def save_profiles(profiles: Sequence[LanguageProfile], path: str | Path) -> None:
    Path(path).write_text(json.dumps([p.to_dict() for p in profiles], ensure_ascii=False, indent=1), encoding="utf-8")


def load_profiles(path: str | Path) -> list[LanguageProfile]:
    return [LanguageProfile.from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]
