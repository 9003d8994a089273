"""LDA topic modelling, windowed NPMI coherence and seed-keyword counting."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .text import PhraseMatcher, split_sentences, stopwords, tokenize

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(**_kwargs):
        return lambda fn: fn


class EmptyCorpusError(ValueError):
    pass


@dataclass
class TopicModel:
    k: int
    phi: np.ndarray
    theta: np.ndarray
    alpha: float
    beta: float
    seed: int
    iterations: int
    vocab: list[str]

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        order = np.argsort(-self.phi[topic], kind="stable")
        return [self.vocab[i] for i in order[:n]]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "iterations": self.iterations,
            "vocab": list(self.vocab),
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicModel":
        return cls(
            k=int(data["k"]),
            phi=np.asarray(data["phi"], dtype=float),
            theta=np.asarray(data["theta"], dtype=float),
            alpha=float(data["alpha"]),
            beta=float(data["beta"]),
            seed=int(data["seed"]),
            iterations=int(data["iterations"]),
            vocab=list(data["vocab"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")


def prepare_docs(texts: Sequence[str]) -> list[list[str]]:
    """Tokenise texts for topic modelling: stopwords and numeric tokens removed."""
    stop = stopwords("en")
    return [
        [t for t in tokenize(text) if t not in stop and not any(c.isdigit() for c in t)]
        for text in texts
    ]


def _doc_key(tokens: Sequence[str]) -> bytes:
    return hashlib.sha256("\x1f".join(tokens).encode("utf-8")).digest()


def _doc_rng(seed: int, key: bytes) -> np.random.Generator:
    words = [int.from_bytes(key[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & 0xFFFFFFFF, *words])))


@njit(cache=True)
def _gibbs_sweep(words, doc_of, z, ndk, nkw, nk, uniforms, alpha, beta, vbeta):
    k_topics = nk.shape[0]
    probs = np.empty(k_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        old = z[i]
        ndk[d, old] -= 1
        nkw[old, w] -= 1
        nk[old] -= 1
        total = 0.0
        for k in range(k_topics):
            total += (ndk[d, k] + alpha) * (nkw[k, w] + beta) / (nk[k] + vbeta)
            probs[k] = total
        target = uniforms[i] * total
        new = k_topics - 1
        for k in range(k_topics):
            if probs[k] > target:
                new = k
                break
        z[i] = new
        ndk[d, new] += 1
        nkw[new, w] += 1
        nk[new] += 1


def lda_fit(
    docs: Sequence[Sequence[str]],
    k: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
) -> TopicModel:
    """Collapsed Gibbs sampling LDA over pre-tokenised documents.

    Documents are swept in an order fixed by their content hash and each one
    draws from its own random stream keyed by that hash, so the fit does not
    depend on the order in which documents are passed in.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = [list(d) for d in docs]
    if not docs:
        raise EmptyCorpusError("empty corpus")
    vocab = sorted({t for d in docs for t in d})
    if not vocab:
        raise EmptyCorpusError("corpus has an empty vocabulary")
    alpha = 50.0 / k if alpha is None else float(alpha)
    index = {t: i for i, t in enumerate(vocab)}
    v = len(vocab)

    keys = [_doc_key(d) for d in docs]
    order = sorted(range(len(docs)), key=lambda i: (keys[i], i))
    rngs = [_doc_rng(seed, keys[i]) for i in order]
    canon_docs = [docs[i] for i in order]

    words = np.array([index[t] for d in canon_docs for t in d], dtype=np.int64)
    doc_of = np.array([j for j, d in enumerate(canon_docs) for _ in d], dtype=np.int64)
    z = np.concatenate(
        [np.floor(rng.random(len(d)) * k).astype(np.int64) for rng, d in zip(rngs, canon_docs)]
    ) if len(words) else np.zeros(0, dtype=np.int64)
    z = np.minimum(z, k - 1)

    ndk = np.zeros((len(docs), k), dtype=np.int64)
    nkw = np.zeros((k, v), dtype=np.int64)
    nk = np.zeros(k, dtype=np.int64)
    np.add.at(ndk, (doc_of, z), 1)
    np.add.at(nkw, (z, words), 1)
    np.add.at(nk, z, 1)

    for _ in range(iterations):
        uniforms = np.concatenate([rng.random(len(d)) for rng, d in zip(rngs, canon_docs)])
        _gibbs_sweep(words, doc_of, z, ndk, nkw, nk, uniforms, alpha, beta, v * beta)

    phi = (nkw + beta) / (nk[:, None] + v * beta)
    theta_canon = (ndk + alpha) / (ndk.sum(axis=1)[:, None] + k * alpha)
    theta = np.empty_like(theta_canon)
    theta[order] = theta_canon
    return TopicModel(k=k, phi=phi, theta=theta, alpha=alpha, beta=beta, seed=seed,
                      iterations=iterations, vocab=vocab)


# -- coherence ---------------------------------------------------------------

@dataclass
class WindowStats:
    n_windows: int
    single: dict[str, int]
    joint: dict[tuple[str, str], int]

    def npmi(self, x: str, y: str) -> float:
        cx, cy = self.single.get(x, 0), self.single.get(y, 0)
        if cx == 0 or cy == 0 or self.n_windows == 0:
            return 0.0
        cxy = cx if x == y else self.joint.get(tuple(sorted((x, y))), 0)
        return npmi(cx, cy, cxy, self.n_windows)


def npmi(cx: int, cy: int, cxy: int, n: int) -> float:
    """Normalised PMI from window counts; -1 when the pair never co-occurs."""
    if cxy == 0:
        return -1.0
    pxy = cxy / n
    if pxy >= 1.0:
        return 1.0
    px, py = cx / n, cy / n
    return math.log(pxy / (px * py)) / -math.log(pxy)


def window_stats(docs: Sequence[Sequence[str]], words: Sequence[str], window: int = 20) -> WindowStats:
    """Count sliding-window occurrences of ``words`` (and pairs of them).

    A document shorter than ``window`` contributes one window.
    """
    wanted = set(words)
    single: dict[str, int] = {}
    joint: dict[tuple[str, str], int] = {}
    n = 0
    for doc in docs:
        if not doc:
            continue
        spans = [doc] if len(doc) <= window else [doc[i : i + window] for i in range(len(doc) - window + 1)]
        for span in spans:
            n += 1
            present = sorted(wanted.intersection(span))
            for a_i, a in enumerate(present):
                single[a] = single.get(a, 0) + 1
                for b in present[a_i + 1 :]:
                    joint[(a, b)] = joint.get((a, b), 0) + 1
    return WindowStats(n, single, joint)


@dataclass
class CoherenceResult:
    per_topic: list[float]
    cv_per_topic: list[float]
    top_words: list[list[str]] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_topic)) if self.per_topic else 0.0

    @property
    def cv_mean(self) -> float:
        return float(np.mean(self.cv_per_topic)) if self.cv_per_topic else 0.0


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def topic_word_coherence(words: Sequence[str], stats: WindowStats) -> tuple[float, float]:
    """Return (pairwise, one-set) coherence for one topic's top words.

    Each word gets a context vector of its NPMI against every top word. The
    pairwise score averages cosine(v_i, v_j) over i < j; the one-set score
    averages cosine(v_i, sum of all v).
    """
    vectors = np.array([[stats.npmi(a, b) for b in words] for a in words], dtype=float)
    total = vectors.sum(axis=0)
    m = len(words)
    pairs = [_cos(vectors[i], vectors[j]) for i in range(m) for j in range(i + 1, m)]
    pairwise = float(sum(pairs) / len(pairs)) if pairs else 0.0
    one_set = float(np.mean([_cos(vectors[i], total) for i in range(m)])) if m else 0.0
    return pairwise, one_set


def coherence(
    model: TopicModel, docs: Sequence[Sequence[str]], top_n: int = 10, window: int = 20
) -> CoherenceResult:
    if top_n > len(model.vocab):
        raise ValueError(f"top_n={top_n} exceeds vocabulary size {len(model.vocab)}")
    tops = [model.top_words(t, top_n) for t in range(model.k)]
    stats = window_stats(docs, sorted({w for ws in tops for w in ws}), window)
    scores = [topic_word_coherence(ws, stats) for ws in tops]
    return CoherenceResult([s[0] for s in scores], [s[1] for s in scores], tops)


@dataclass(frozen=True)
class TopicSettings:
    k: int = 3
    iterations: int = 200
    top_n: int = 10
    window: int = 20
    beta: float = 0.01
    seed: int = 0


def text_coherence(text: str, settings: TopicSettings | None = None) -> float:
    """Coherence of a single document, treating its sentences as the corpus."""
    settings = settings or TopicSettings()
    docs = [d for d in prepare_docs(split_sentences(text)) if d]
    vocab_size = len({t for d in docs for t in d})
    if len(docs) < 2 or vocab_size < 2:
        return 0.0
    model = lda_fit(docs, settings.k, beta=settings.beta, iterations=settings.iterations,
                    seed=settings.seed)
    return coherence(model, docs, min(settings.top_n, vocab_size), settings.window).mean


# -- seed keywords -----------------------------------------------------------

@dataclass(frozen=True)
class TaxonomyAttribute:
    name: str
    definition: str
    keywords: tuple[str, ...]


class KeywordTaxonomy:
    def __init__(self, attributes: Sequence[TaxonomyAttribute]):
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        for a in attributes:
            if any(k != k.lower() for k in a.keywords):
                raise ValueError(f"keywords of {a.name!r} must be lowercase")
        self.attributes = list(attributes)
        self._matchers = {a.name: PhraseMatcher(a.keywords) for a in attributes}

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def matcher(self, name: str) -> PhraseMatcher:
        return self._matchers[name]

    @classmethod
    def from_dict(cls, data: dict) -> "KeywordTaxonomy":
        return cls([
            TaxonomyAttribute(a["name"], a.get("definition", ""), tuple(a["keywords"]))
            for a in data["attributes"]
        ])

    def to_dict(self) -> dict:
        return {"attributes": [
            {"name": a.name, "definition": a.definition, "keywords": list(a.keywords)}
            for a in self.attributes
        ]}


def load_taxonomy(path: str | Path | None = None) -> KeywordTaxonomy:
    if path is None:
        raw = (resources.files("policylens") / "data" / "taxonomy.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    return KeywordTaxonomy.from_dict(json.loads(raw))


@dataclass(frozen=True)
class KeywordCount:
    count: int
    normalized_freq: float


def keyword_counts(text: str, taxonomy: KeywordTaxonomy) -> dict[str, KeywordCount]:
    """Longest-match seed keyword hits per attribute.

    Attributes are matched independently, so a keyword listed under two
    attributes counts towards both.
    """
    tokens = tokenize(text)
    total = len(tokens)
    out = {}
    for name in taxonomy.names:
        n = taxonomy.matcher(name).count(tokens)
        out[name] = KeywordCount(n, n / total if total else 0.0)
    return out
