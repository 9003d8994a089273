"""Privacy-policy link discovery and main-text extraction from HTML."""

from __future__ import annotations

import json
import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import unquote, urljoin, urlsplit, urlunsplit

from bs4 import BeautifulSoup, Comment, NavigableString, Tag
from bs4.element import PreformattedString

from .text import tokenize

log = logging.getLogger(__name__)

ENGLISH_KEYWORDS = ["privacy", "policy", "data", "protection", "personal", "notice"]
MULTILINGUAL_KEYWORDS = [
    "datenschutz", "datenschutzerklärung", "confidentialité", "données", "privacidad",
    "privacidade", "protección", "proteção", "datos", "dados", "riservatezza",
    "informativa", "gegevensbescherming", "privacybeleid", "integritetspolicy",
]

BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "body", "br", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table",
    "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
})
DROP_TAGS = frozenset({"script", "style", "noscript", "template", "svg", "head", "iframe", "button", "select"})
CONTEXT_MARKERS = ("footer", "nav")


class NoExtractableText(ValueError):
    pass


@dataclass
class ExtractionConfig:
    min_block_words: int = 12
    max_link_density: float = 0.33
    max_lead_blocks: int = 3
    english_keywords: list[str] = field(default_factory=lambda: list(ENGLISH_KEYWORDS))
    multilingual_keywords: list[str] = field(default_factory=lambda: list(MULTILINGUAL_KEYWORDS))

    def __post_init__(self):
        if self.min_block_words < 1:
            raise ValueError("min_block_words must be >= 1")
        if not 0.0 <= self.max_link_density <= 1.0:
            raise ValueError("max_link_density must be in [0, 1]")
        if self.max_lead_blocks < 0:
            raise ValueError("max_lead_blocks must be >= 0")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExtractionConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        kw = data.pop("keyword_lists", {})
        if "english" in kw:
            data["english_keywords"] = kw["english"]
        if "multilingual" in kw:
            data["multilingual_keywords"] = kw["multilingual"]
        return cls(**data)

    @property
    def keywords(self) -> list[str]:
        seen = []
        for k in self.english_keywords + self.multilingual_keywords:
            k = k.lower()
            if k not in seen:
                seen.append(k)
        return seen


def _soup(html: str | bytes) -> BeautifulSoup:
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    return BeautifulSoup(html, "html.parser")


# -- links -------------------------------------------------------------------

@dataclass
class LinkCandidate:
    url: str
    anchor_text: str
    score: float
    matched_keywords: list[str]


def normalize_url(url: str, base_url: str = "") -> str:
    """Resolve against ``base_url``, lowercase scheme and host, drop the fragment."""
    joined = urljoin(base_url, url.strip())
    parts = urlsplit(joined)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError(f"not an absolute http(s) URL: {joined!r}")
    path = parts.path or "/"
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, ""))


def _in_context(tag: Tag) -> bool:
    for parent in tag.parents:
        if not isinstance(parent, Tag):
            continue
        if parent.name in CONTEXT_MARKERS:
            return True
        marks = " ".join([parent.get("id") or "", *(parent.get("class") or [])]).lower()
        if any(m in marks for m in CONTEXT_MARKERS):
            return True
    return False


def _fold_accents(s: str) -> str:
    return "".join(c for c in unicodedata.normalize("NFKD", s) if not unicodedata.combining(c))


def find_policy_links(html: str | bytes, base_url: str, cfg: ExtractionConfig | None = None) -> list[LinkCandidate]:
    """Rank anchors by how likely they point at a privacy policy.

    score = 2 * keyword hits in the anchor text + 1 * keyword hits in the URL
    path, plus 1 when the anchor sits under a footer or nav element. The
    context bonus only applies to anchors with at least one keyword hit.
    """
    cfg = cfg or ExtractionConfig()
    parts = urlsplit(base_url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise ValueError("base_url must be absolute")
    keywords = cfg.keywords
    folded_keywords = [(k, _fold_accents(k)) for k in keywords]
    best: dict[str, tuple[float, int, LinkCandidate]] = {}
    for pos, a in enumerate(_soup(html).find_all("a", href=True)):
        href = a["href"].strip()
        if not href or href.startswith(("#", "javascript:", "mailto:", "tel:")):
            continue
        try:
            url = normalize_url(href, base_url)
        except ValueError:
            log.warning("skipping unparseable href %r", href)
            continue
        text = " ".join(a.get_text(" ").split())
        text_tokens = {_fold_accents(t) for t in tokenize(text)}
        path = _fold_accents(unquote(urlsplit(url).path).lower())
        matched = []
        anchor_hits = path_hits = 0
        for original, folded in folded_keywords:
            in_text = folded in text_tokens
            in_path = folded in path
            anchor_hits += in_text
            path_hits += in_path
            if in_text or in_path:
                matched.append(original)
        if not matched:
            continue
        score = 2.0 * anchor_hits + 1.0 * path_hits + (1.0 if _in_context(a) else 0.0)
        cand = LinkCandidate(url, text, score, matched)
        prev = best.get(url)
        if prev is None or score > prev[0]:
            best[url] = (score, prev[1] if prev else pos, cand)
    ranked = sorted(best.values(), key=lambda t: (-t[0], t[1]))
    return [c for _, _, c in ranked]


# -- main text ---------------------------------------------------------------

@dataclass
class _Block:
    words: list[str] = field(default_factory=list)
    link_words: int = 0

    @property
    def text(self) -> str:
        return " ".join(self.words)

    @property
    def word_count(self) -> int:
        return len(tokenize(self.text))

    @property
    def link_density(self) -> float:
        total = self.word_count
        return self.link_words / total if total else 0.0


def segment_blocks(html: str | bytes) -> list[_Block]:
    """Split the document into text blocks at block-level tags."""
    soup = _soup(html)
    for tag in soup.find_all(DROP_TAGS):
        tag.decompose()
    for c in soup.find_all(string=lambda s: isinstance(s, Comment)):
        c.extract()
    blocks: list[_Block] = []
    current = _Block()

    def flush():
        nonlocal current
        if current.words:
            blocks.append(current)
        current = _Block()

    def walk(node, in_link: bool):
        for child in node.children:
            if isinstance(child, PreformattedString):
                continue  # doctype, comments, CDATA, processing instructions
            if isinstance(child, NavigableString):
                words = str(child).split()
                if words:
                    current.words.extend(words)
                    if in_link:
                        current.link_words += len(tokenize(" ".join(words)))
            elif isinstance(child, Tag):
                is_block = child.name in BLOCK_TAGS
                if is_block:
                    flush()
                walk(child, in_link or child.name == "a")
                if is_block:
                    flush()

    walk(soup, False)
    flush()
    return blocks


def extract_main_text(html: str | bytes, cfg: ExtractionConfig | None = None) -> str:
    """Keep blocks that are long enough and not link-dominated.

    Short link-free blocks take their class from context: a run of them
    between two content blocks is kept, and so are the last
    ``cfg.max_lead_blocks`` short blocks directly before content (titles,
    dates and headings). Blocks are joined by blank lines.
    """
    cfg = cfg or ExtractionConfig()
    blocks = segment_blocks(html)
    if not any(b.word_count for b in blocks):
        raise NoExtractableText("no extractable text")
    content = [
        b.word_count >= cfg.min_block_words and b.link_density <= cfg.max_link_density
        for b in blocks
    ]
    short = [not c and b.link_words == 0 for b, c in zip(blocks, content)]
    keep = list(content)
    i = 0
    while i < len(blocks):
        if not short[i]:
            i += 1
            continue
        j = i
        while j < len(blocks) and short[j]:
            j += 1
        before = i > 0 and content[i - 1]
        after = j < len(blocks) and content[j]
        if after:
            start = i if before else max(i, j - cfg.max_lead_blocks)
            keep[start:j] = [True] * (j - start)
        i = j
    # a single link-heavy block inside content (an inline list of links) stays
    for i in range(1, len(blocks) - 1):
        if not keep[i] and content[i - 1] and content[i + 1]:
            keep[i] = True
    kept = [b.text for b, k in zip(blocks, keep) if k]
    if not kept:
        raise NoExtractableText("no extractable text")
    return "\n\n".join(kept)


_CHAR_MAP = str.maketrans({
    "‘": "'", "’": "'", "‚": "'", "‛": "'", "′": "'",
    "“": '"', "”": '"', "„": '"', "‟": '"', "″": '"',
    "‐": "-", "‑": "-", "‒": "-", "–": "-", "—": "-", "―": "-",
    "−": "-", " ": " ", " ": " ", " ": " ", "​": "",
    "…": "...",
})

_BANNER_PHRASES = (
    "accept all", "accept cookies", "allow all cookies", "reject all", "cookie settings",
    "cookie preferences", "manage cookies", "manage preferences", "we use cookies to improve your experience",
    "by continuing to browse", "by clicking accept", "this website uses cookies",
)
_BANNER_BUTTONS = frozenset({
    "accept", "decline", "reject", "ok", "got it", "agree", "i agree", "allow", "close",
    "accept all", "reject all", "allow all", "cookie settings", "manage cookies",
})


def _is_banner_line(line: str) -> bool:
    low = line.lower().strip(" .!")
    if low in _BANNER_BUTTONS:
        return True
    return len(line.split()) <= 40 and any(p in low for p in _BANNER_PHRASES)


def clean_policy_text(text: str, repeat_threshold: int = 3) -> str:
    """Normalise punctuation and whitespace, drop cookie-banner lines and
    lines repeated ``repeat_threshold`` or more times verbatim. Idempotent."""
    text = unicodedata.normalize("NFC", text).translate(_CHAR_MAP)
    lines = [re.sub(r"[ \t\f\v\r]+", " ", ln).strip() for ln in text.split("\n")]
    lines = [ln for ln in lines if not (ln and _is_banner_line(ln))]
    counts = Counter(ln for ln in lines if ln)
    lines = [ln for ln in lines if not ln or counts[ln] < repeat_threshold]
    out: list[str] = []
    for ln in lines:
        if not ln and (not out or not out[-1]):
            continue
        out.append(ln)
    while out and not out[-1]:
        out.pop()
    return "\n".join(out)


def token_f1(predicted: str, gold: str) -> float:
    """Bag-of-tokens F1 between an extraction and its gold text."""
    p, g = Counter(tokenize(predicted)), Counter(tokenize(gold))
    overlap = sum((p & g).values())
    if not p or not g or overlap == 0:
        return 1.0 if not p and not g else 0.0
    precision = overlap / sum(p.values())
    recall = overlap / sum(g.values())
    return 2 * precision * recall / (precision + recall)
