"""Command-line pipeline: discover, fetch, archive, analyze, compare, train, export."""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import urllib.error
import urllib.request
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence
from urllib.parse import urljoin, urlsplit

import numpy as np

from . import __version__
from .archive import (
    ArchiveClient,
    ArchiveError,
    FixtureFetcher,
    HttpResponse,
    RateLimiter,
    RegulationEvent,
    archive_url_for,
    plan_queries,
)
from .corpus import (
    AnalysisReport,
    ManufacturerRecord,
    PolicyDocument,
    ProductRecord,
    Store,
    make_id,
    open_store,
    record_to_dict,
)
from .discovery import (
    FixtureSearchProvider,
    IoTScoreConfig,
    PlatformProfile,
    extract_products,
    normalize_name,
    resolve_manufacturer_site,
    score_iot,
)
from .langid import detect_majority
from .ml import (
    READABILITY_FEATURES,
    AmbiguityModels,
    Dataset,
    OverallModel,
    classification_metrics,
    classify_ambiguity,
    load_dataset_csv,
    train_ambiguity,
    train_overall,
)
from .policy_detect import PolicyDetector, default_detector, predict_is_policy, train_policy_detector
from .policy_finder import ExtractionConfig, clean_policy_text, extract_main_text, find_policy_links
from .privacy_analysis import coverage_report, default_category_terms, detect_device_mention, detect_last_update, load_category_terms
from .readability import full_report, load_lexicons
from .similarity import (
    dbscan,
    matrix_to_csv,
    pca_project,
    sentence_diff,
    similarity_matrix,
    tfidf_fit,
    tfidf_transform,
)
from .topics import load_taxonomy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("policylens")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
ENV_PREFIX = "POLICYLENS_"

DEFAULT_CONFIG: dict[str, Any] = {
    "store": "policylens-store",
    "seed": 0,
    "jobs": 1,
    "now": "",
    "thresholds": {"iot": 0.4, "resolution": 0.8, "incremental": 0.6, "policy": 0.5},
    "paths": {"taxonomy": "", "lexicons": "", "category_terms": "", "extraction": ""},
    "discover": {"listings": [], "search_fixtures": "", "max_pages_per_query": 40},
    "fetch": {"fixtures": "", "user_agent": f"policylens/{__version__}", "timeout": 20.0},
    "archive": {
        "base_url": "https://web.archive.org",
        "fixtures": "",
        "rate_limit": 1.0,
        "today": "",
        "months_around": 3,
        "years": 10,
        "events": [{"name": "GDPR", "date": "2018-05-25"}, {"name": "CCPA", "date": "2020-01-01"}],
    },
    "models": {"ambiguity": "", "overall": "", "policy_detect": ""},
}

OVERALL_FEATURES = READABILITY_FEATURES + [
    "collection", "sharing", "purpose", "access", "security", "policy_change",
    "do_not_track", "legislation", "choice", "retention", "iot_data",
]

COUNTRY_NAMES = {
    "united states": "US", "usa": "US", "u.s.": "US", "china": "CN", "germany": "DE",
    "united kingdom": "GB", "uk": "GB", "france": "FR", "japan": "JP", "netherlands": "NL",
    "south korea": "KR", "korea": "KR", "taiwan": "TW", "canada": "CA", "sweden": "SE",
    "switzerland": "CH", "italy": "IT", "spain": "ES", "australia": "AU", "india": "IN",
    "hong kong": "HK", "israel": "IL", "denmark": "DK", "finland": "FI", "singapore": "SG",
}


class ConfigError(ValueError):
    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


# -- canonical output --------------------------------------------------------

def canonical_json(obj: Any) -> str:
    """JSON with sorted keys and every real formatted with six decimals."""

    def enc(o: Any) -> str:
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            x = float(o)
            if not math.isfinite(x):
                raise ValueError(f"non-finite number in output: {x}")
            s = f"{x:.6f}"
            return "0.000000" if s == "-0.000000" else s
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            items = sorted((str(k), v) for k, v in o.items())
            return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{enc(v)}" for k, v in items) + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            return "[" + ",".join(enc(v) for v in o) + "]"
        if isinstance(o, date):
            return json.dumps(o.isoformat())
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj) + "\n"


def write_output(text: str | bytes, out: str | None) -> None:
    data = text.encode("utf-8") if isinstance(text, str) else text
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# -- configuration -----------------------------------------------------------

def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _coerce(raw: str, like: Any) -> Any:
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    if isinstance(like, (list, dict)):
        return json.loads(raw)
    return raw


def _env_overrides(cfg: dict, env: dict[str, str]) -> list[str]:
    """Apply POLICYLENS_KEY / POLICYLENS_SECTION_KEY variables in place."""
    problems = []
    for section, value in cfg.items():
        pairs = [((section,), value)] if not isinstance(value, dict) else [((section, k), v) for k, v in value.items()]
        for keys, current in pairs:
            name = ENV_PREFIX + "_".join(keys).upper()
            if name not in env:
                continue
            try:
                coerced = _coerce(env[name], current)
            except (ValueError, json.JSONDecodeError):
                problems.append(f"{name}: cannot parse {env[name]!r}")
                continue
            if len(keys) == 1:
                cfg[keys[0]] = coerced
            else:
                cfg[keys[0]][keys[1]] = coerced
    return problems


@dataclass
class PipelineConfig:
    data: dict[str, Any]
    base_dir: Path
    strict: bool = False

    def get(self, *keys: str) -> Any:
        node: Any = self.data
        for k in keys:
            node = node[k]
        return node

    def path(self, *keys: str) -> Path | None:
        value = self.get(*keys)
        if not value:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def now(self) -> str:
        return self.data["now"] or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")

    def threshold(self, name: str) -> float:
        return float(self.data["thresholds"][name])


def load_config(
    path: str | None,
    overrides: dict[str, Any] | None = None,
    env: dict[str, str] | None = None,
    strict: bool = False,
) -> PipelineConfig:
    """Defaults < config file < environment < command-line flags. All problems are reported together."""
    problems: list[str] = []
    data = copy.deepcopy(DEFAULT_CONFIG)
    base_dir = Path.cwd()
    if path:
        p = Path(path)
        try:
            data = _merge(data, tomllib.loads(p.read_text(encoding="utf-8")))
            base_dir = p.resolve().parent
        except FileNotFoundError:
            problems.append(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as exc:
            problems.append(f"config file {path} is not valid TOML: {exc}")
    problems += _env_overrides(data, os.environ if env is None else env)
    for k, v in (overrides or {}).items():
        if v is not None:
            # command-line paths are relative to the working directory
            data[k] = str(Path(v).resolve()) if k == "store" else v
    for name, value in data["thresholds"].items():
        if not isinstance(value, (int, float)) or not 0.0 < float(value) < 1.0:
            problems.append(f"thresholds.{name} must be in (0, 1), got {value!r}")
    if not isinstance(data["seed"], int):
        problems.append("seed must be an integer")
    if not isinstance(data["jobs"], int) or data["jobs"] < 1:
        problems.append("jobs must be a positive integer")
    budget = data["discover"].get("max_pages_per_query")
    if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
        problems.append("discover.max_pages_per_query must be a positive integer")
    if data["now"]:
        try:
            datetime.fromisoformat(str(data["now"]).replace("Z", "+00:00"))
        except ValueError:
            problems.append(f"now is not an RFC-3339 timestamp: {data['now']!r}")
    if problems:
        raise ConfigError(problems)
    return PipelineConfig(data, base_dir, strict)


def require(cfg: PipelineConfig, *keys: tuple[str, ...]) -> None:
    missing = [".".join(k) for k in keys if not cfg.get(*k)]
    if missing:
        raise ConfigError([f"missing config key {m}" for m in missing])


# -- fetching ----------------------------------------------------------------

class UrllibFetcher:
    """Plain HTTP GET via urllib; used only when no fixture file is configured."""

    def __init__(self, user_agent: str, timeout: float = 20.0):
        self.user_agent = user_agent
        self.timeout = timeout

    def get(self, url: str) -> HttpResponse:
        req = urllib.request.Request(url, headers={"User-Agent": self.user_agent})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return HttpResponse(resp.status, resp.read())
        except urllib.error.HTTPError as exc:
            return HttpResponse(exc.code, exc.read() or b"")


def make_fetcher(cfg: PipelineConfig, section: str):
    fixtures = cfg.path(section, "fixtures")
    if fixtures is not None:
        return FixtureFetcher.from_file(fixtures)
    return UrllibFetcher(cfg.get("fetch", "user_agent"), float(cfg.get("fetch", "timeout")))


# -- shared resources --------------------------------------------------------

@dataclass
class Resources:
    cfg: PipelineConfig
    _cache: dict[str, Any] = field(default_factory=dict)

    def _memo(self, key: str, build: Callable[[], Any]) -> Any:
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def taxonomy(self):
        return self._memo("taxonomy", lambda: load_taxonomy(self.cfg.path("paths", "taxonomy")))

    @property
    def lexicons(self):
        p = self.cfg.path("paths", "lexicons")
        return self._memo("lexicons", lambda: load_lexicons(p) if p else None)

    @property
    def category_terms(self):
        p = self.cfg.path("paths", "category_terms")
        return self._memo("terms", lambda: load_category_terms(p) if p else default_category_terms())

    @property
    def extraction(self) -> ExtractionConfig:
        p = self.cfg.path("paths", "extraction")
        return self._memo("extraction", lambda: ExtractionConfig.from_file(p) if p else ExtractionConfig())

    @property
    def policy_detector(self) -> PolicyDetector:
        p = self.cfg.path("models", "policy_detect")
        return self._memo("detector", lambda: _load_model(p, PolicyDetector.from_dict) if p else default_detector(self.cfg.seed))

    @property
    def ambiguity_models(self) -> AmbiguityModels | None:
        p = self.cfg.path("models", "ambiguity")
        return self._memo("ambiguity", lambda: _load_model(p, AmbiguityModels.from_dict) if p else None)

    @property
    def overall_model(self) -> OverallModel | None:
        p = self.cfg.path("models", "overall")
        return self._memo("overall", lambda: _load_model(p, OverallModel.from_dict) if p else None)


def _read_json(path: Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _load_model(path: Path, loader: Callable[[dict], Any]) -> Any:
    """A configured model file that cannot be read is a configuration problem."""
    try:
        return loader(_read_json(path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError([f"cannot load model {path}: {exc}"]) from exc


@dataclass
class RunResult:
    done: list[str] = field(default_factory=list)
    failures: list[dict[str, str]] = field(default_factory=list)
    skipped: list[dict[str, str]] = field(default_factory=list)

    def fail(self, item: str, error: Exception | str) -> None:
        log.error("%s: %s", item, error)
        self.failures.append({"item": item, "error": str(error)})

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK

    def to_dict(self) -> dict:
        return {"done": sorted(self.done), "failures": self.failures, "skipped": self.skipped}


def _country_code(raw: str | None) -> str:
    if not raw:
        return "unknown"
    value = raw.strip()
    if len(value) == 2 and value.isalpha():
        return value.upper()
    return COUNTRY_NAMES.get(value.lower(), "unknown")


# -- commands ----------------------------------------------------------------

def cmd_discover(cfg: PipelineConfig, store: Store, res: Resources) -> RunResult:
    require(cfg, ("discover", "listings"), ("discover", "search_fixtures"))
    result = RunResult()
    iot_cfg = IoTScoreConfig.default(threshold=cfg.threshold("iot"))
    provider = FixtureSearchProvider.from_file(cfg.path("discover", "search_fixtures"))
    makers: dict[str, tuple[str, str]] = {}  # normalized name -> (display name, first category)
    budget = cfg.get("discover", "max_pages_per_query")
    pages_seen: Counter[str] = Counter()  # each category is one listing query
    for listing in cfg.get("discover", "listings"):
        name = listing.get("file", "?")
        pages_seen[listing.get("category")] += 1
        if pages_seen[listing.get("category")] > budget:
            log.warning("skipping %s: page budget of %d reached for %s", name, budget, listing.get("category"))
            continue
        try:
            html = (cfg.base_dir / listing["file"]).read_bytes()
            profile = PlatformProfile.from_file(cfg.base_dir / listing["profile"])
            category = listing["category"]
            products = extract_products(html, profile, listing.get("base_url"))
        except (OSError, KeyError, ValueError, TypeError) as exc:
            result.fail(name, exc)
            continue
        for p in products:
            try:
                score = score_iot(f"{p.title} {p.description}", iot_cfg)
                rec = ProductRecord(
                    id=make_id(p.product_url), title=p.title, description=p.description, category=category,
                    source_url=p.product_url, manufacturer_name=p.manufacturer_name,
                    origin_country=_country_code(p.origin_country), iot_score=score.score, is_smart=score.is_smart,
                )
                store.put(rec)
                result.done.append(rec.id)
                if rec.is_smart and p.manufacturer_name:
                    makers.setdefault(normalize_name(p.manufacturer_name), (p.manufacturer_name, category))
            except ValueError as exc:
                result.fail(p.product_url, exc)
    for key in sorted(makers):
        maker, device_type = makers[key]
        found = resolve_manufacturer_site(maker, device_type, provider, cfg.threshold("resolution"))
        rec = ManufacturerRecord(
            id=make_id(key), name=maker,
            website=found.url if found else None, resolution_score=found.resolution_score if found else None,
        )
        store.put(rec)
        result.done.append(rec.id)
    return result


def _policy_from_page(
    res: Resources, cfg: PipelineConfig, store: Store, manufacturer_id: str, url: str, html: bytes,
    policy_id: str, kind: str, snapshot_date: date | None,
) -> PolicyDocument | None:
    text = clean_policy_text(extract_main_text(html, res.extraction))
    if not text.strip():
        raise ValueError("extracted text is empty after cleaning")
    verdict = detect_majority(text)
    confidence = predict_is_policy(res.policy_detector, text)
    if confidence < cfg.threshold("policy"):
        return None
    return PolicyDocument(
        id=policy_id, manufacturer_id=manufacturer_id, source_url=url, retrieved_at=cfg.now, kind=kind,
        language=verdict.lang, raw_html_ref=store.put_blob(html), text=text,
        is_policy_confidence=round(confidence, 12), mentions_device=detect_device_mention(text, res.category_terms),
        snapshot_date=snapshot_date, last_updated=detect_last_update(text),
        analysis_skipped=verdict.lang != "en",
    )


def cmd_fetch_policies(cfg: PipelineConfig, store: Store, res: Resources, ids: Sequence[str] = ()) -> RunResult:
    result = RunResult()
    fetcher = make_fetcher(cfg, "fetch")
    makers = [m for m in store.list("manufacturers") if m.website and (not ids or m.id in ids)]
    for maker in makers:
        try:
            home = fetcher.get(maker.website)
            if home.status != 200:
                raise ArchiveError(f"HTTP {home.status} for {maker.website}")
            links = find_policy_links(home.body, maker.website, res.extraction)
            if not links:
                result.skipped.append({"item": maker.id, "reason": "no policy link"})
                continue
            page = fetcher.get(links[0].url)
            if page.status != 200:
                raise ArchiveError(f"HTTP {page.status} for {links[0].url}")
            doc = _policy_from_page(res, cfg, store, maker.id, links[0].url, page.body,
                                    make_id(maker.id, "current"), "current", None)
        except Exception as exc:  # isolate per-item failures
            result.fail(maker.id, exc)
            continue
        if doc is None:
            result.skipped.append({"item": maker.id, "reason": "page rejected by policy detector"})
            continue
        store.put(doc)
        result.done.append(doc.id)
    return result


def _events(cfg: PipelineConfig) -> list[RegulationEvent]:
    return [RegulationEvent(e["name"], date.fromisoformat(e["date"])) for e in cfg.get("archive", "events")]


def _replay_url(base_url: str, ref, link: str) -> str:
    """Map a link found in a replayed page onto the archive.

    Rewritten links (``/web/<ts>/<original>``) are kept. Links the archive
    left alone are resolved against the captured site and replayed at the
    snapshot's timestamp.
    """
    base = base_url.rstrip("/")
    if link.startswith(base + "/web/"):
        return link
    parts = urlsplit(link)
    if parts.netloc == urlsplit(base).netloc:
        link = urljoin(ref.original_url, parts.path + (f"?{parts.query}" if parts.query else ""))
    return archive_url_for(base, ref.capture_timestamp, link)


def cmd_archive(cfg: PipelineConfig, store: Store, res: Resources, ids: Sequence[str] = ()) -> RunResult:
    require(cfg, ("archive", "today"))
    result = RunResult()
    client = ArchiveClient(
        make_fetcher(cfg, "archive"),
        base_url=cfg.get("archive", "base_url"),
        limiter=RateLimiter(float(cfg.get("archive", "rate_limit"))),
    )
    today = date.fromisoformat(cfg.get("archive", "today"))
    makers = [m for m in store.list("manufacturers") if m.website and (not ids or m.id in ids)]
    for maker in makers:
        plan = plan_queries(maker.website, today, _events(cfg), int(cfg.get("archive", "months_around")),
                            int(cfg.get("archive", "years")))
        seen: set[str] = set()
        for day in plan.dates:
            item = f"{maker.id}@{day.isoformat()}"
            try:
                ref = client.nearest_snapshot(maker.website, day)
                if ref is None or ref.capture_timestamp in seen:
                    continue
                seen.add(ref.capture_timestamp)
                home = client.fetch_snapshot(ref)
                links = find_policy_links(home, ref.archive_url, res.extraction)
                if not links:
                    result.skipped.append({"item": item, "reason": "no policy link in snapshot"})
                    continue
                target = _replay_url(client.base_url, ref, links[0].url)
                page = client.fetch_archived_page(target)
                doc = _policy_from_page(
                    res, cfg, store, maker.id, target, page,
                    make_id(maker.id, "archived", ref.capture_timestamp), "archived", ref.capture_date,
                )
            except Exception as exc:  # isolate per-item failures
                result.fail(item, exc)
                continue
            if doc is None:
                result.skipped.append({"item": item, "reason": "page rejected by policy detector"})
                continue
            store.put(doc)
            result.done.append(doc.id)
    return result


def report_features(report: AnalysisReport) -> list[float]:
    """The 19 overall-assessment features: eight readability metrics then eleven attribute frequencies."""
    r = report.readability.to_dict()
    values = [float(r[name]) for name in READABILITY_FEATURES]
    attrs = list(report.coverage.attributes.values())
    values += [a.normalized_freq for a in attrs]
    return values


def analyze_policy(doc: PolicyDocument, cfg: PipelineConfig, res: Resources) -> AnalysisReport:
    readability = full_report(doc.text, res.lexicons)
    coverage = coverage_report(doc.text, res.taxonomy)
    report = AnalysisReport(policy_id=doc.id, readability=readability, coverage=coverage, produced_at=cfg.now)
    if res.ambiguity_models is not None:
        features = [float(readability.to_dict()[n]) for n in READABILITY_FEATURES]
        report.ambiguity = {k: v.value for k, v in classify_ambiguity(res.ambiguity_models, features).items()}
    if res.overall_model is not None:
        report.overall = res.overall_model.model.predict([report_features(report)])[0]
    return report


def cmd_analyze(cfg: PipelineConfig, store: Store, res: Resources, ids: Sequence[str] = (),
                out_dir: str | None = None) -> RunResult:
    result = RunResult()
    docs = []
    for pid in ids:
        doc = store.get("policies", pid)
        if doc is None:
            result.fail(pid, "unknown policy id")
        else:
            docs.append(doc)
    if not ids:
        docs = store.list("policies")
    todo = [d for d in docs if not d.analysis_skipped]
    for d in docs:
        if d.analysis_skipped:
            result.skipped.append({"item": d.id, "reason": f"language {d.language}"})
    if not docs:
        log.warning("no policies to analyze")
    # prime shared caches before fanning out
    _ = res.taxonomy, res.lexicons, res.ambiguity_models, res.overall_model

    def run(doc):
        try:
            return doc, analyze_policy(doc, cfg, res), None
        except Exception as exc:  # isolate per-item failures
            return doc, None, exc

    jobs = int(cfg.get("jobs"))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, todo))
    else:
        outcomes = [run(d) for d in todo]
    for doc, report, exc in outcomes:
        if exc is not None:
            result.fail(doc.id, exc)
            continue
        store.put(report)
        result.done.append(doc.id)
        if out_dir:
            write_output(canonical_json(record_to_dict(report)), str(Path(out_dir) / f"{doc.id}.json"))
    return result


def _select_policies(store: Store, kind: str, manufacturer: str | None) -> list[PolicyDocument]:
    docs = store.list("policies")
    if kind != "all":
        docs = [d for d in docs if d.kind == kind]
    if manufacturer:
        docs = [d for d in docs if d.manufacturer_id == manufacturer]
    return docs


def cmd_matrix(store: Store, kind: str, manufacturer: str | None, fmt: str) -> str:
    docs = _select_policies(store, kind, manufacturer)
    ids = [d.id for d in docs]
    if not docs:
        return matrix_to_csv([], np.zeros((0, 0))) if fmt == "csv" else canonical_json({"ids": [], "matrix": []})
    space = tfidf_fit([d.text for d in docs])
    mat = similarity_matrix([tfidf_transform(space, d.text) for d in docs])
    if fmt == "csv":
        return matrix_to_csv(ids, mat)
    return canonical_json({"ids": ids, "matrix": mat.tolist()})


def cmd_cluster(store: Store, kind: str, manufacturer: str | None, eps: float, min_pts: int, seed: int) -> str:
    docs = _select_policies(store, kind, manufacturer)
    if not docs:
        return canonical_json({"ids": [], "labels": [], "coordinates": []})
    space = tfidf_fit([d.text for d in docs])
    index = {t: i for i, t in enumerate(space.vocab)}
    dense = np.zeros((len(docs), len(space.vocab)))
    for r, d in enumerate(docs):
        for t, v in tfidf_transform(space, d.text).items():
            dense[r, index[t]] = v
    proj = pca_project(dense, dims=2, seed=seed)
    labels = dbscan(proj.coordinates, eps, min_pts)
    return canonical_json({
        "ids": [d.id for d in docs],
        "labels": labels,
        "coordinates": proj.coordinates.tolist(),
        "explained_variance": proj.eigenvalues.tolist(),
    })


def cmd_diff(cfg: PipelineConfig, store: Store, a: str, b: str) -> str:
    docs = [store.get("policies", a), store.get("policies", b)]
    missing = [pid for pid, d in zip((a, b), docs) if d is None]
    if missing:
        raise KeyError(f"unknown policy id(s): {', '.join(missing)}")
    diff = sentence_diff(docs[0].text, docs[1].text, cfg.threshold("incremental"))
    payload = diff.to_dict()
    payload["counts"] = {k: len(v) for k, v in payload.items()}
    payload["old"], payload["new"] = a, b
    return canonical_json(payload)


def _text_dataset(path: Path) -> tuple[list[str], list[int]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "text" not in rows[0] or "label" not in rows[0]:
        raise ConfigError([f"{path}: policy-detect datasets need text and label columns"])
    return [r["text"] for r in rows], [int(r["label"]) for r in rows]


def cmd_train(task: str, dataset: Path, seed: int) -> tuple[dict, dict]:
    """Returns (model document, training summary)."""
    if task == "policy-detect":
        docs, labels = _text_dataset(dataset)
        model = train_policy_detector(docs, labels, seed=seed)
        return model.to_dict(), {"task": task, "documents": len(docs), "features": len(model.space.selected_indices)}
    ds = load_dataset_csv(dataset)
    if task == "ambiguity":
        _check_columns(ds, READABILITY_FEATURES)
        return train_ambiguity(ds, seed=seed).to_dict(), {"task": task, "rows": len(ds.labels)}
    if task == "overall":
        _check_columns(ds, OVERALL_FEATURES)
        model = train_overall(ds, seed=seed)
        return model.to_dict(), {"task": task, "rows": len(ds.labels), "best_params": model.best_params,
                                 "cv_weighted_f1": model.cv_score,
                                 "feature_importances": model.feature_importances}
    raise ConfigError([f"unknown task {task!r}"])


def _check_columns(ds: Dataset, expected: list[str]) -> None:
    if ds.feature_names != expected:
        raise ConfigError([f"dataset columns must be {expected + ['label']}"])


def cmd_evaluate(task: str, model_path: Path, dataset: Path) -> dict:
    doc = _read_json(model_path)
    if task == "policy-detect":
        texts, labels = _text_dataset(dataset)
        model = PolicyDetector.from_dict(doc)
        probs = model.predict_proba(texts)
        pred = ["1" if p >= model.threshold else "0" for p in probs]
        return {"task": task, "metrics": classification_metrics([str(v) for v in labels], pred).to_dict()}
    ds = load_dataset_csv(dataset)
    if task == "ambiguity":
        models = AmbiguityModels.from_dict(doc)
        return {"task": task, "metrics": {
            "forest": classification_metrics(ds.labels, models.forest.predict(ds.features)).to_dict(),
            "logreg": classification_metrics(ds.labels, models.logreg.predict(ds.features)).to_dict(),
        }}
    if task == "overall":
        model = OverallModel.from_dict(doc)
        return {"task": task, "metrics": classification_metrics(ds.labels, model.model.predict(ds.features)).to_dict()}
    raise ConfigError([f"unknown task {task!r}"])


def _parse_selector(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError([f"selector {item!r} must look like field=value"])
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="policylens", description=__doc__)
    p.add_argument("--store", help="store directory (overrides config)")
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--seed", type=int, help="random seed (overrides config)")
    p.add_argument("--jobs", type=int, help="worker threads for analysis")
    p.add_argument("--strict", action="store_true", help="fail on corrupt store lines")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("discover", help="parse listing pages, score products, resolve manufacturers")
    stage_help = {
        "fetch-policies": "find and fetch each manufacturer's current privacy policy",
        "archive": "recover archived policy versions around regulation dates",
        "analyze": "readability, coverage, topics and model verdicts per policy",
    }
    for name, text in stage_help.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("ids", nargs="*", help="restrict to these manufacturer / policy ids")
        if name == "analyze":
            sp.add_argument("--out", help="directory for per-policy report JSON")
    sp = sub.add_parser("diff", help="sentence-level diff of two stored policies")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--out")
    for name, text in (("matrix", "pairwise TF-IDF cosine similarity of stored policies"),
                       ("cluster", "PCA projection and DBSCAN clusters of stored policies")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--kind", choices=["current", "archived", "all"], default="all")
        sp.add_argument("--manufacturer")
        sp.add_argument("--out")
        if name == "matrix":
            sp.add_argument("--format", choices=["csv", "json"], default="csv")
        else:
            sp.add_argument("--eps", type=float, default=0.3)
            sp.add_argument("--min-pts", type=int, default=2)
    for name, text in (("train", "fit a model from a labeled CSV"), ("evaluate", "score a saved model on a labeled CSV")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--task", choices=["ambiguity", "overall", "policy-detect"], required=True)
        sp.add_argument("--dataset", required=True)
        sp.add_argument("--model", required=name == "evaluate", help="model JSON to read")
        sp.add_argument("--out", help="model output path (train) or metrics path (evaluate)")
    sp = sub.add_parser("export", help="dump a record kind as JSON or CSV")
    sp.add_argument("kind", choices=["products", "manufacturers", "policies", "reports"])
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--select", action="append", default=[], metavar="FIELD=VALUE")
    sp.add_argument("--out")
    return p


def _summary(command: str, result: RunResult) -> str:
    return canonical_json({"command": command, **result.to_dict()})


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"store": args.store, "seed": args.seed, "jobs": args.jobs}, strict=args.strict)
        return _dispatch(args, cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args: argparse.Namespace, cfg: PipelineConfig) -> int:
    store_path = cfg.path("store")
    try:
        store = open_store(store_path, strict=cfg.strict, iot_threshold=cfg.threshold("iot"),
                           resolution_threshold=cfg.threshold("resolution"))
    except (NotADirectoryError, ValueError, OSError) as exc:
        raise ConfigError([f"cannot open store {store_path}: {exc}"]) from exc
    res = Resources(cfg)
    cmd = args.command
    if cmd in ("discover", "fetch-policies", "archive", "analyze"):
        if cmd == "discover":
            result = cmd_discover(cfg, store, res)
        elif cmd == "fetch-policies":
            result = cmd_fetch_policies(cfg, store, res, args.ids)
        elif cmd == "archive":
            result = cmd_archive(cfg, store, res, args.ids)
        else:
            result = cmd_analyze(cfg, store, res, args.ids, args.out)
        write_output(_summary(cmd, result), None)
        return result.exit_code
    try:
        if cmd == "diff":
            write_output(cmd_diff(cfg, store, args.a, args.b), args.out)
        elif cmd == "matrix":
            write_output(cmd_matrix(store, args.kind, args.manufacturer, args.format), args.out)
        elif cmd == "cluster":
            write_output(cmd_cluster(store, args.kind, args.manufacturer, args.eps, args.min_pts, cfg.seed), args.out)
        elif cmd == "train":
            model, summary = cmd_train(args.task, Path(args.dataset), cfg.seed)
            target = args.out or args.model
            if not target:
                raise ConfigError(["train needs --out (or --model) for the model file"])
            write_output(json.dumps(model, sort_keys=True, indent=1) + "\n", target)
            write_output(canonical_json(summary), None)
        elif cmd == "evaluate":
            write_output(canonical_json(cmd_evaluate(args.task, Path(args.model), Path(args.dataset))), args.out)
        elif cmd == "export":
            write_output(store.export(args.kind, args.format, _parse_selector(args.select)), args.out)
    except (KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
