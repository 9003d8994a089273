"""The eight readability features of a policy text."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

from .text import PhraseMatcher, split_sentences, stopwords, tokenize
from .topics import TopicSettings, text_coherence

DEFAULT_WPM = 238

_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")
_VOWELS = set("aeiou")

# Sound-based exceptions for the a/an rule; the rule itself is letter-based.
A_BEFORE_VOWEL_LETTER = frozenset({
    "one", "once", "user", "users", "unique", "uniform", "union", "unit", "united",
    "universal", "university", "usage", "use", "used", "useful", "usual", "utility",
    "european", "eu", "euro",
})
AN_BEFORE_CONSONANT_LETTER = frozenset({
    "hour", "hours", "honest", "honor", "honour", "heir", "html", "sms", "fbi", "mri", "x-ray",
})


@dataclass
class LexiconSet:
    imprecise: dict[str, list[str]]
    connective: dict[str, list[str]]

    def phrases(self, kind: str) -> list[str]:
        table = getattr(self, kind)
        return [p for group in table.values() for p in group]

    @cached_property
    def _matchers(self) -> dict[str, PhraseMatcher]:
        return {k: PhraseMatcher(self.phrases(k)) for k in ("imprecise", "connective")}

    def matcher(self, kind: str) -> PhraseMatcher:
        if kind not in ("imprecise", "connective"):
            raise ValueError(f"unknown lexicon {kind!r}")
        return self._matchers[kind]


@lru_cache(maxsize=None)
def _default_lexicons() -> "LexiconSet":
    return load_lexicons(None)


def load_lexicons(path: str | Path | None = None) -> LexiconSet:
    if path is None:
        raw = (resources.files("policylens") / "data" / "lexicons.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    data = json.loads(raw)
    return LexiconSet(imprecise=data["imprecise"], connective=data["connective"])


@dataclass
class ReadabilityReport:
    entropy_bits_per_word: float = 0.0
    reading_time_minutes: int = 0
    unique_word_count: int = 0
    unique_word_ratio: float = 0.0
    coherence: float = 0.0
    imprecise_freq: float = 0.0
    connective_freq: float = 0.0
    grammar_error_rate: float = 0.0
    fkgl: float = 0.0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ReadabilityReport":
        return cls(**data)


def shannon_entropy(text: str) -> float:
    """Entropy of the word distribution, in bits per word."""
    counts = Counter(tokenize(text))
    total = sum(counts.values())
    if total == 0:
        return 0.0
    return math.fsum(-(c / total) * math.log2(c / total) for c in counts.values()) + 0.0


def reading_time(text: str, wpm: int = DEFAULT_WPM) -> int:
    words = len(tokenize(text))
    if words == 0:
        return 0
    return max(1, math.ceil(words / wpm))


def clean_words(text: str) -> list[str]:
    stop = stopwords("en")
    return [t for t in tokenize(text) if t not in stop and not any(c.isdigit() for c in t)]


def unique_words(text: str) -> tuple[int, float]:
    words = clean_words(text)
    if not words:
        return 0, 0.0
    distinct = len(set(words))
    return distinct, distinct / len(words)


def lexicon_frequency(
    text: str, lexicon: str | PhraseMatcher = "imprecise", lexicons: LexiconSet | None = None
) -> float:
    """Longest-match lexicon hits per token; ``lexicon`` names a table or is a matcher."""
    if isinstance(lexicon, str):
        lexicon = (lexicons or _default_lexicons()).matcher(lexicon)
    tokens = tokenize(text)
    if not tokens:
        return 0.0
    return lexicon.count(tokens) / len(tokens)


def count_syllables(word: str) -> int:
    w = re.sub(r"[^a-z]", "", word.lower())
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e") and not w.endswith("ee"):
        consonant_le = w.endswith("le") and len(w) > 2 and w[-3] not in _VOWELS
        if not consonant_le:
            groups -= 1
    return max(1, groups)


def fkgl(text: str) -> float:
    """Flesch-Kincaid grade level."""
    words = tokenize(text)
    sentences = split_sentences(text)
    if not words or not sentences:
        raise ValueError("FKGL needs at least one word and one sentence")
    syllables = sum(count_syllables(w) for w in words)
    return 0.39 * (len(words) / len(sentences)) + 11.8 * (syllables / len(words)) - 15.59


def grammar_flags(sentence: str) -> list[str]:
    """Names of the heuristic rules that fire on one sentence."""
    fired = []
    first_alpha = next((c for c in sentence if c.isalpha()), None)
    if first_alpha is not None and first_alpha.islower():
        fired.append("lowercase_start")
    tokens = tokenize(sentence)
    if any(a == b for a, b in zip(tokens, tokens[1:])):
        fired.append("repeated_word")
    for art, nxt in zip(tokens, tokens[1:]):
        if not nxt[0].isalpha():
            continue
        if art == "a" and nxt[0] in _VOWELS and nxt not in A_BEFORE_VOWEL_LETTER:
            fired.append("article")
            break
        if art == "an" and nxt[0] not in _VOWELS and nxt not in AN_BEFORE_CONSONANT_LETTER:
            fired.append("article")
            break
    if (
        sentence.count("(") != sentence.count(")")
        or sentence.count("[") != sentence.count("]")
        or sentence.count("{") != sentence.count("}")
        or sentence.count('"') % 2
        or sentence.count("“") != sentence.count("”")
    ):
        fired.append("unbalanced")
    return fired


def grammar_error_rate(text: str) -> float:
    sentences = split_sentences(text)
    if not sentences:
        return 0.0
    flagged = sum(1 for s in sentences if grammar_flags(s))
    return flagged / len(sentences)


def full_report(
    text: str,
    lexicons: LexiconSet | None = None,
    topic_settings: TopicSettings | None = None,
    wpm: int = DEFAULT_WPM,
) -> ReadabilityReport:
    lexicons = lexicons or _default_lexicons()
    if not tokenize(text):
        return ReadabilityReport(flags=["empty_text"])
    count, ratio = unique_words(text)
    return ReadabilityReport(
        entropy_bits_per_word=shannon_entropy(text),
        reading_time_minutes=reading_time(text, wpm),
        unique_word_count=count,
        unique_word_ratio=ratio,
        coherence=text_coherence(text, topic_settings),
        imprecise_freq=lexicon_frequency(text, "imprecise", lexicons),
        connective_freq=lexicon_frequency(text, "connective", lexicons),
        grammar_error_rate=grammar_error_rate(text),
        fkgl=fkgl(text),
    )
