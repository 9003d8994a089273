"""Tokenisation, sentence splitting and phrase matching shared by the analysers."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

_TOKEN_RE = re.compile(r"[^\W_]+(?:['’\-][^\W_]+)*")
_WS_RE = re.compile(r"\s+")
_PARA_RE = re.compile(r"\n\s*\n")
_SENT_END_RE = re.compile(r"[.!?]+[\"')\]”’]*(?=\s)")


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    path = resources.files("policylens") / "data" / "abbreviations.txt"
    lines = path.read_text(encoding="utf-8").splitlines()
    return frozenset(line.strip().lower() for line in lines if line.strip())


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; hyphenated and apostrophe words stay whole."""
    return [t.replace("’", "'") for t in _TOKEN_RE.findall(text.lower())]


def normalize_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def fold_plural(token: str) -> str:
    """Strip a plural ``s`` (``sensors`` -> ``sensor``); ``ss``/``us``/``is`` endings are kept."""
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


@lru_cache(maxsize=None)
def stopwords(lang: str = "en") -> frozenset[str]:
    path = resources.files("policylens") / "data" / "stopwords" / f"{lang}.txt"
    words = path.read_text(encoding="utf-8").split()
    return frozenset(w.strip().lower() for w in words if w.strip())


def available_stopword_languages() -> list[str]:
    folder = resources.files("policylens") / "data" / "stopwords"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".txt"))


def split_sentences(text: str, abbreviations: Iterable[str] | None = None) -> list[str]:
    """Split on terminal punctuation followed by whitespace, and on blank lines.

    A period that closes a known abbreviation (``e.g.``, ``Inc.``) does not end
    the sentence.
    """
    abbrev = default_abbreviations() if abbreviations is None else {a.lower() for a in abbreviations}
    sentences: list[str] = []
    for para in _PARA_RE.split(text):
        para = normalize_whitespace(para)
        if not para:
            continue
        start = 0
        for m in _SENT_END_RE.finditer(para):
            end = m.end()
            candidate = para[start:end]
            last = candidate.split()[-1].lower().lstrip("([\"'")
            if m.group(0).startswith(".") and (last in abbrev or _is_initial(last)):
                continue
            sentence = candidate.strip()
            if sentence:
                sentences.append(sentence)
            start = end
        tail = para[start:].strip()
        if tail:
            sentences.append(tail)
    return sentences


def _is_initial(chunk: str) -> bool:
    return len(chunk) == 2 and chunk[0].isalpha() and chunk[1] == "."


class PhraseMatcher:
    """Longest-match-first phrase counter over a token stream.

    Phrases are tokenised with :func:`tokenize`; once a phrase matches, its
    tokens are consumed so no token contributes to two hits.
    """

    def __init__(self, phrases: Iterable[str]):
        by_first: dict[str, set[tuple[str, ...]]] = {}
        for phrase in phrases:
            toks = tuple(tokenize(phrase))
            if toks:
                by_first.setdefault(toks[0], set()).add(toks)
        self._index = {
            first: sorted(group, key=lambda p: (-len(p), p)) for first, group in by_first.items()
        }

    def __len__(self) -> int:
        return sum(len(v) for v in self._index.values())

    def find(self, tokens: Sequence[str]) -> list[tuple[int, tuple[str, ...]]]:
        hits = []
        i, n = 0, len(tokens)
        while i < n:
            for phrase in self._index.get(tokens[i], ()):
                if tuple(tokens[i : i + len(phrase)]) == phrase:
                    hits.append((i, phrase))
                    i += len(phrase)
                    break
            else:
                i += 1
        return hits

    def count(self, tokens: Sequence[str]) -> int:
        return len(self.find(tokens))
