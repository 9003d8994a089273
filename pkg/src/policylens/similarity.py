"""TF-IDF vectors, cosine similarity matrices, sentence diffs, PCA and DBSCAN."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .text import normalize_whitespace, split_sentences, stopwords, tokenize

SparseVector = dict[str, float]

REGULATION_EVENTS: dict[str, date] = {
    "GDPR": date(2018, 5, 25),
    "CCPA": date(2020, 1, 1),
}


class NotFittedError(RuntimeError):
    pass


def tfidf_terms(text: str) -> list[str]:
    stop = stopwords("en")
    return [t for t in tokenize(text) if t not in stop and not any(c.isdigit() for c in t)]


@dataclass
class TfIdfSpace:
    vocab: list[str]
    idf: dict[str, float]
    df: dict[str, int]
    n_docs: int

    def to_dict(self) -> dict:
        return asdict(self)


def tfidf_fit(corpus: Sequence[str]) -> TfIdfSpace:
    if not corpus:
        raise ValueError("cannot fit on an empty corpus")
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(tfidf_terms(doc)))
    n = len(corpus)
    vocab = sorted(df)
    idf = {t: math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab}
    return TfIdfSpace(vocab=vocab, idf=idf, df=dict(sorted(df.items())), n_docs=n)


def tfidf_transform(space: TfIdfSpace | None, text: str) -> SparseVector:
    """L2-normalised tf-idf vector; out-of-vocabulary terms are dropped."""
    if space is None:
        raise NotFittedError("transform called before fit")
    tf = Counter(t for t in tfidf_terms(text) if t in space.idf)
    raw = {t: c * space.idf[t] for t, c in sorted(tf.items())}
    norm = math.sqrt(math.fsum(v * v for v in raw.values()))
    if norm == 0.0:
        return {}
    return {t: v / norm for t, v in raw.items()}


def cosine(a: Mapping[str, float] | Sequence[float], b: Mapping[str, float] | Sequence[float]) -> float:
    """Cosine similarity of two sparse (mapping) or dense vectors; 0 for a zero vector."""
    if isinstance(a, Mapping) and isinstance(b, Mapping):
        if not a or not b:
            return 0.0
        if a == b:
            return 1.0
        small, large = (a, b) if len(a) <= len(b) else (b, a)
        dot = math.fsum(v * large[k] for k, v in small.items() if k in large)
        na = math.sqrt(math.fsum(v * v for v in a.values()))
        nb = math.sqrt(math.fsum(v * v for v in b.values()))
    else:
        va, vb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
        if na == 0.0 or nb == 0.0:
            return 0.0
        if np.array_equal(va, vb):
            return 1.0
        dot = float(np.dot(va, vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, dot / (na * nb)))


def similarity_matrix(vectors: Sequence[Mapping[str, float] | Sequence[float]]) -> np.ndarray:
    """Pairwise cosine matrix, each unordered pair computed once."""
    n = len(vectors)
    out = np.zeros((n, n))
    for i in range(n):
        out[i, i] = 1.0 if _nonzero(vectors[i]) else 0.0
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = cosine(vectors[i], vectors[j])
    return out


def _nonzero(v) -> bool:
    if isinstance(v, Mapping):
        return any(x != 0 for x in v.values())
    return bool(np.any(np.asarray(v, dtype=float) != 0))


def matrix_to_csv(ids: Sequence[str], matrix: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["", *ids])
    for pid, row in zip(ids, matrix):
        writer.writerow([pid, *(f"{x:.6f}" for x in row)])
    return buf.getvalue()


def matrix_to_dict(ids: Sequence[str], matrix: np.ndarray) -> dict:
    return {"ids": list(ids), "matrix": [[float(x) for x in row] for row in matrix]}


# -- change tracking ---------------------------------------------------------

@dataclass
class PolicyDiff:
    additions: list[str] = field(default_factory=list)
    deletions: list[str] = field(default_factory=list)
    unchanged: list[str] = field(default_factory=list)
    incremental: list[tuple[str, str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "additions": list(self.additions),
            "deletions": list(self.deletions),
            "unchanged": list(self.unchanged),
            "incremental": [
                {"old": o, "new": n, "similarity": s} for o, n, s in self.incremental
            ],
        }


def _token_vector(sentence: str) -> Counter:
    return Counter(tokenize(sentence))


def _counter_cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb)


def sentence_diff(old_text: str, new_text: str, incremental_threshold: float = 0.6) -> PolicyDiff:
    """Sentence-level diff into additions, deletions, unchanged and incremental pairs.

    Identical sentences (after whitespace normalisation) are paired first, in
    order. Leftovers are matched greedily by descending token cosine; pairs at
    or above the threshold become incremental changes.
    """
    old = [normalize_whitespace(s) for s in split_sentences(old_text)]
    new = [normalize_whitespace(s) for s in split_sentences(new_text)]

    pending: dict[str, list[int]] = {}
    for j, s in enumerate(new):
        pending.setdefault(s, []).append(j)
    old_used = [False] * len(old)
    new_used = [False] * len(new)
    diff = PolicyDiff()
    for i, s in enumerate(old):
        slots = pending.get(s)
        if slots:
            j = slots.pop(0)
            old_used[i] = new_used[j] = True
            diff.unchanged.append(s)

    old_left = [i for i in range(len(old)) if not old_used[i]]
    new_left = [j for j in range(len(new)) if not new_used[j]]
    new_vecs = {j: _token_vector(new[j]) for j in new_left}
    candidates = []
    for i in old_left:
        vi = _token_vector(old[i])
        for j in new_left:
            sim = _counter_cosine(vi, new_vecs[j])
            if sim >= incremental_threshold:
                candidates.append((-sim, i, j))
    candidates.sort()
    for neg_sim, i, j in candidates:
        if old_used[i] or new_used[j]:
            continue
        old_used[i] = new_used[j] = True
        diff.incremental.append((old[i], new[j], -neg_sim))

    diff.deletions = [old[i] for i in range(len(old)) if not old_used[i]]
    diff.additions = [new[j] for j in range(len(new)) if not new_used[j]]
    return diff


@dataclass
class RegulationImpactReport:
    manufacturer_id: str
    event: str
    event_date: date
    pre_snapshot: str
    post_snapshot: str
    pre_date: date
    post_date: date
    similarity: float

    def __post_init__(self):
        if not (self.pre_date < self.event_date <= self.post_date):
            raise ValueError("pre snapshot must precede the event and post snapshot must not")
        if not 0.0 <= self.similarity <= 1.0:
            raise ValueError("similarity out of [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("event_date", "pre_date", "post_date"):
            d[key] = d[key].isoformat()
        return d


def regulation_impact(pre_text: str, post_text: str) -> float:
    """Cosine of the two versions in a tf-idf space fit on just the pair."""
    space = tfidf_fit([pre_text, post_text])
    sim = cosine(tfidf_transform(space, pre_text), tfidf_transform(space, post_text))
    return max(0.0, min(1.0, sim))


# -- projection and clustering -----------------------------------------------

@dataclass
class Projection:
    coordinates: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    mean: np.ndarray


def pca_project(
    vectors: np.ndarray | Sequence[Sequence[float]],
    dims: int = 2,
    seed: int = 0,
    max_iter: int = 10000,
    tol: float = 1e-13,
) -> Projection:
    """Top principal components by power iteration with deflation.

    Each component's sign is fixed so its largest-magnitude loading is
    positive.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2:
        raise ValueError("expected a 2-D array")
    n, d = x.shape
    dims = min(dims, d)
    mean = x.mean(axis=0) if n else np.zeros(d)
    xc = x - mean
    rng = np.random.default_rng(seed)
    comps: list[np.ndarray] = []
    eigs: list[float] = []
    scale = max(n - 1, 1)

    def cov_mul(v: np.ndarray) -> np.ndarray:
        out = xc.T @ (xc @ v) / scale
        for c, lam in zip(comps, eigs):
            out -= lam * c * float(c @ v)
        return out

    for _ in range(dims):
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            w = cov_mul(v)
            norm = float(np.linalg.norm(w))
            if norm == 0.0:
                lam = 0.0
                break
            w /= norm
            if w @ v < 0:
                w = -w
            delta = float(np.linalg.norm(w - v))
            v = w
            lam = norm
            if delta < tol:
                break
        k = int(np.argmax(np.abs(v)))
        if v[k] < 0:
            v = -v
        comps.append(v)
        eigs.append(lam)
    components = np.array(comps).reshape(len(comps), d)
    return Projection(xc @ components.T, components, np.array(eigs), mean)


def canonical_labels(labels: Sequence[int]) -> list[int]:
    """Renumber cluster ids by first occurrence; noise (-1) is kept."""
    mapping: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab < 0:
            out.append(-1)
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return out


def dbscan(points: np.ndarray | Sequence[Sequence[float]], eps: float, min_pts: int) -> list[int]:
    """Density clustering; neighbourhoods include the point itself and are inclusive of ``eps``."""
    x = np.asarray(points, dtype=float)
    n = len(x)
    if n == 0:
        return []
    dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=-1))
    neighbours = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    core = [len(nb) >= min_pts for nb in neighbours]
    labels = [-2] * n  # -2 unvisited
    cluster = -1
    for i in range(n):
        if labels[i] != -2:
            continue
        if not core[i]:
            labels[i] = -1
            continue
        cluster += 1
        labels[i] = cluster
        queue = list(neighbours[i])
        head = 0
        while head < len(queue):
            j = int(queue[head])
            head += 1
            if labels[j] == -1:
                labels[j] = cluster
            if labels[j] != -2:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(int(q) for q in neighbours[j])
    return canonical_labels(labels)
