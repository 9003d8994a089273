"""Product-page parsing, IoT scoring and manufacturer-site resolution."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol
from urllib.parse import urljoin, urlsplit

from bs4 import BeautifulSoup

from .text import fold_plural, stopwords, tokenize

log = logging.getLogger(__name__)

RESOLUTION_THRESHOLD = 0.8

# Public suffixes made of two labels; enough for manufacturer homepages.
MULTI_LABEL_SUFFIXES = frozenset({
    "co.uk", "org.uk", "ac.uk", "gov.uk", "com.au", "net.au", "org.au", "co.nz", "co.jp",
    "ne.jp", "or.jp", "com.cn", "net.cn", "org.cn", "com.hk", "com.tw", "co.kr", "or.kr",
    "com.br", "com.mx", "com.ar", "com.tr", "co.in", "co.za", "com.sg", "com.my", "co.il",
    "com.es", "com.pl", "co.id", "com.vn", "com.ph", "co.th",
})


# -- IoT scoring -------------------------------------------------------------

@dataclass
class IoTScoreConfig:
    keyword_weights: dict[str, float]
    high_confidence_terms: list[str]
    threshold: float = 0.4
    per_keyword_count_cap: int = 3

    def __post_init__(self):
        for k, w in self.keyword_weights.items():
            if not 0.0 < w <= 1.0:
                raise ValueError(f"weight of {k!r} must be in (0, 1]")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.per_keyword_count_cap < 1:
            raise ValueError("per_keyword_count_cap must be >= 1")
        self._folded = {fold_plural(k): k for k in self.keyword_weights}
        self._hc_patterns = [
            (t, re.compile(r"(?<!\w)" + r"\s+".join(map(re.escape, t.split())) + r"(?!\w)", re.I))
            for t in self.high_confidence_terms
        ]

    @classmethod
    def default(cls, **overrides) -> "IoTScoreConfig":
        path = resources.files("policylens") / "data" / "iot_keywords.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        data.update(overrides)
        return cls(**data)

    def keyword_for(self, token: str) -> str | None:
        folded = fold_plural(token)
        return self._folded.get(folded) or self._folded.get(folded.replace("-", ""))


@dataclass
class IoTScore:
    score: float
    is_smart: bool
    matched_terms: list[str]


def score_iot(description: str, config: IoTScoreConfig | None = None) -> IoTScore:
    """Weighted keyword score of a product description.

    A high-confidence phrase short-circuits to score 1.0. Otherwise each
    keyword contributes ``weight * min(count, cap) / cap`` and the sum is
    clipped to 1, so adding keyword mentions never lowers the score.
    """
    config = config or IoTScoreConfig.default()
    hits = [term for term, pat in config._hc_patterns if pat.search(description)]
    if hits:
        return IoTScore(1.0, True, hits)
    stop = stopwords("en")
    counts: dict[str, int] = {}
    for tok in tokenize(description):
        if tok in stop:
            continue
        kw = config.keyword_for(tok)
        if kw is not None:
            counts[kw] = counts.get(kw, 0) + 1
    cap = config.per_keyword_count_cap
    total = sum(config.keyword_weights[k] * min(c, cap) for k, c in counts.items())
    score = min(1.0, total / cap)
    return IoTScore(score, score >= config.threshold, sorted(counts))


# -- Ratcliff/Obershelp ------------------------------------------------------

def _longest_common_substring(a: str, b: str) -> tuple[int, int, int]:
    """(length, start in a, start in b); ties go to the earliest start in a, then in b."""
    best = (0, 0, 0)
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                k = prev[j - 1] + 1
                cur[j] = k
                if k > best[0] or (k == best[0] and (i - k, j - k) < (best[1], best[2])):
                    best = (k, i - k, j - k)
        prev = cur
    return best


def matching_characters(a: str, b: str) -> int:
    total = 0
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if not x or not y:
            continue
        k, i, j = _longest_common_substring(x, y)
        if k == 0:
            continue
        total += k
        stack.append((x[:i], y[:j]))
        stack.append((x[i + k :], y[j + k :]))
    return total


def ratcliff_obershelp(a: str, b: str) -> float:
    """Gestalt pattern-matching similarity ``2M / (|a| + |b|)``.

    The pair is evaluated in lexicographic order so the result is symmetric;
    leftmost tie-breaking otherwise makes the recursion order-dependent.
    """
    if not a and not b:
        return 1.0
    first, second = (a, b) if a <= b else (b, a)
    return 2.0 * matching_characters(first, second) / (len(a) + len(b))


# -- manufacturer resolution -------------------------------------------------

@dataclass
class SearchResultPage:
    query: str
    result_urls: list[str] = field(default_factory=list)

    def __post_init__(self):
        for url in self.result_urls:
            parts = urlsplit(url)
            if parts.scheme not in ("http", "https") or not parts.netloc:
                raise ValueError(f"result URL is not absolute: {url!r}")


class SearchProvider(Protocol):
    def search(self, query: str) -> SearchResultPage: ...


class FixtureSearchProvider:
    """Search results replayed from a JSON file mapping query -> [urls].

    Lookups are read-only, so one instance can be shared between threads.
    """

    def __init__(self, results: dict[str, list[str]]):
        self._results = {self._key(q): list(urls) for q, urls in results.items()}

    @staticmethod
    def _key(query: str) -> str:
        return " ".join(query.lower().split())

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureSearchProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def search(self, query: str) -> SearchResultPage:
        return SearchResultPage(query, self._results.get(self._key(query), []))


def normalize_name(name: str) -> str:
    return re.sub(r"[^0-9a-z]", "", name.lower())


def registrable_label(url: str) -> str:
    """The registrable-domain label without its public suffix (``www.fitbit.co.uk`` -> ``fitbit``)."""
    host = (urlsplit(url).hostname or "").lower().rstrip(".")
    labels = [p for p in host.split(".") if p]
    if len(labels) < 2:
        return labels[0] if labels else ""
    if len(labels) >= 3 and ".".join(labels[-2:]) in MULTI_LABEL_SUFFIXES:
        return labels[-3]
    return labels[-2]


@dataclass
class Resolution:
    url: str
    resolution_score: float


def resolve_manufacturer_site(
    name: str,
    device_type: str,
    provider: SearchProvider,
    threshold: float = RESOLUTION_THRESHOLD,
) -> Resolution | None:
    page = provider.search(f"{name} {device_type}".strip())
    target = normalize_name(name)
    best: Resolution | None = None
    for url in page.result_urls:
        score = ratcliff_obershelp(target, normalize_name(registrable_label(url)))
        if best is None or score > best.resolution_score:
            best = Resolution(url, score)
    if best is None or best.resolution_score < threshold:
        return None
    return best


# -- listing pages -----------------------------------------------------------

@dataclass
class ProductListing:
    product_url: str
    title: str
    description: str
    manufacturer_name: str
    origin_country: str | None = None


@dataclass
class PlatformProfile:
    """CSS selectors locating product tiles and their fields on a listing page."""

    name: str
    tile: str
    link: str
    title: str
    description: str = ""
    manufacturer: str = ""
    origin_country: str = ""
    base_url: str = ""

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformProfile":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


def _select_text(tile, selector: str) -> str:
    if not selector:
        return ""
    node = tile.select_one(selector)
    return " ".join(node.get_text(" ").split()) if node is not None else ""


def extract_products(html: str | bytes, profile: PlatformProfile, base_url: str | None = None) -> list[ProductListing]:
    base = base_url or profile.base_url
    soup = BeautifulSoup(html or "", "html.parser")
    tiles = soup.select(profile.tile)
    if not tiles:
        if html:
            log.warning("profile %s matched no product tiles", profile.name)
        return []
    out: list[ProductListing] = []
    seen: set[str] = set()
    for tile in tiles:
        link = tile.select_one(profile.link)
        href = (link.get("href") or "").strip() if link is not None else ""
        if not href:
            continue
        url = urljoin(base, href)
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            log.warning("skipping non-absolute product link %r", href)
            continue
        url = parts._replace(fragment="").geturl()
        if url in seen:
            continue
        seen.add(url)
        country = _select_text(tile, profile.origin_country)
        out.append(ProductListing(
            product_url=url,
            title=_select_text(tile, profile.title),
            description=_select_text(tile, profile.description),
            manufacturer_name=_select_text(tile, profile.manufacturer),
            origin_country=country or None,
        ))
    return out
