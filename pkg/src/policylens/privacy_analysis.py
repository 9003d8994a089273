"""Policy-level insights: keyword coverage, last-update date, device mentions."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .text import PhraseMatcher, fold_plural, split_sentences, tokenize
from .topics import KeywordTaxonomy, keyword_counts

TRIGGER_PHRASES = ("last updated", "last update", "effective date", "last modified", "updated on")
TRIGGER_WINDOW = 80
DATA_VERBS = frozenset({
    "collect", "collects", "collected", "collecting",
    "process", "processes", "processed", "processing",
    "record", "records", "recorded", "recording",
    "store", "stores", "stored", "storing",
})
FIRST_PERSON = frozenset({"we", "our", "us", "ours"})


@dataclass
class AttributeCoverage:
    count: int
    normalized_freq: float
    covered: bool


@dataclass
class KeywordCoverageReport:
    attributes: dict[str, AttributeCoverage]

    @property
    def coverage_fraction(self) -> float:
        if not self.attributes:
            return 0.0
        return sum(a.covered for a in self.attributes.values()) / len(self.attributes)

    def to_dict(self) -> dict:
        return {
            "attributes": {
                name: {"count": a.count, "normalized_freq": a.normalized_freq, "covered": a.covered}
                for name, a in self.attributes.items()
            },
            "coverage_fraction": self.coverage_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KeywordCoverageReport":
        return cls({k: AttributeCoverage(**v) for k, v in d["attributes"].items()})


def coverage_report(text: str, taxonomy: KeywordTaxonomy) -> KeywordCoverageReport:
    counts = keyword_counts(text, taxonomy)
    return KeywordCoverageReport({
        name: AttributeCoverage(kc.count, kc.normalized_freq, kc.count > 0) for name, kc in counts.items()
    })


# -- last update -------------------------------------------------------------

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6, "july": 7,
    "august": 8, "september": 9, "october": 10, "november": 11, "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7, "aug": 8, "sep": 9,
    "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}
_MONTH_ALT = "|".join(sorted(_MONTHS, key=len, reverse=True))
_DATE_PATTERNS = [
    ("mdy", re.compile(rf"\b({_MONTH_ALT})\.?\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})\b", re.I)),
    ("dmy", re.compile(rf"\b(\d{{1,2}})(?:st|nd|rd|th)?\s+({_MONTH_ALT})\.?,?\s+(\d{{4}})\b", re.I)),
    ("numeric", re.compile(r"\b(\d{1,2})/(\d{1,2})/(\d{4})\b")),
    ("iso", re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")),
]
_TRIGGER_RE = re.compile("|".join(r"\b" + r"\s+".join(p.split()) + r"\b" for p in TRIGGER_PHRASES), re.I)


def _to_date(kind: str, groups: tuple[str, ...], day_first: bool) -> date | None:
    try:
        if kind == "mdy":
            return date(int(groups[2]), _MONTHS[groups[0].lower()], int(groups[1]))
        if kind == "dmy":
            return date(int(groups[2]), _MONTHS[groups[1].lower()], int(groups[0]))
        if kind == "numeric":
            a, b, y = map(int, groups)
            return date(y, b, a) if day_first else date(y, a, b)
        y, m, d = map(int, groups)
        return date(y, m, d)
    except (ValueError, KeyError):
        return None


def find_dates(text: str, day_first: bool = False) -> list[tuple[int, int, date]]:
    """All parseable dates as (start, end, date); invalid calendar dates are dropped."""
    found = []
    taken: list[tuple[int, int]] = []
    for kind, pat in _DATE_PATTERNS:
        for m in pat.finditer(text):
            if any(m.start() < e and s < m.end() for s, e in taken):
                continue
            d = _to_date(kind, m.groups(), day_first)
            if d is not None:
                found.append((m.start(), m.end(), d))
                taken.append((m.start(), m.end()))
    return sorted(found)


def detect_last_update(text: str, day_first: bool = False, window: int = TRIGGER_WINDOW) -> date | None:
    """Date attached to a last-update trigger phrase.

    Each trigger takes the nearest date within ``window`` characters of it
    (either side, a following date winning a tie). When several triggers
    resolve, the latest date wins.
    Numeric dates are read month-first unless ``day_first``.
    """
    dates = find_dates(text, day_first)
    if not dates:
        return None
    chosen = []
    for m in _TRIGGER_RE.finditer(text):
        best = None
        for s, e, d in dates:
            if s >= m.end():
                key = (s - m.end(), 0)
            elif e <= m.start():
                key = (m.start() - e, 1)
            else:
                continue
            if key[0] <= window and (best is None or key < best[0]):
                best = (key, d)
        if best is not None:
            chosen.append(best[1])
    return max(chosen) if chosen else None


# -- device mentions ---------------------------------------------------------

@lru_cache(maxsize=None)
def default_category_terms() -> dict[str, tuple[str, ...]]:
    raw = (resources.files("policylens") / "data" / "category_terms.json").read_text(encoding="utf-8")
    return {k: tuple(v) for k, v in json.loads(raw).items()}


def load_category_terms(path: str | Path) -> dict[str, list[str]]:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _folded_matcher(terms: Sequence[str]) -> PhraseMatcher:
    return PhraseMatcher(" ".join(fold_plural(t) for t in tokenize(term)) for term in terms)


def device_mention_sentences(text: str, category_terms: Mapping[str, Sequence[str]] | None = None) -> list[str]:
    """Sentences that name a device term, a data verb and a first-person pronoun."""
    terms = category_terms if category_terms is not None else default_category_terms()
    matcher = _folded_matcher([t for group in terms.values() for t in group])
    hits = []
    for sentence in split_sentences(text):
        tokens = tokenize(sentence)
        if not (FIRST_PERSON.intersection(tokens) and DATA_VERBS.intersection(tokens)):
            continue
        if matcher.find([fold_plural(t) for t in tokens]):
            hits.append(sentence)
    return hits


def detect_device_mention(text: str, category_terms: Mapping[str, Sequence[str]] | None = None) -> bool:
    return bool(device_mention_sentences(text, category_terms))
