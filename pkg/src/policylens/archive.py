"""Wayback Machine CDX client: query planning, nearest-capture lookup, snapshot fetch."""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Callable, Protocol, Sequence
from urllib.parse import urlencode, urlsplit

from .similarity import REGULATION_EVENTS

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://web.archive.org"
BASE_URL_ENV = "POLICYLENS_ARCHIVE_BASE_URL"
MAX_RETRIES = 3
TIMESTAMP_FORMAT = "%Y%m%d%H%M%S"


class ArchiveError(RuntimeError):
    pass


class SnapshotFetchError(ArchiveError):
    def __init__(self, ref: "SnapshotRef", status: int):
        super().__init__(f"HTTP {status} fetching {ref.archive_url} (capture {ref.capture_timestamp} of {ref.original_url})")
        self.ref = ref
        self.status = status


@dataclass
class HttpResponse:
    status: int
    body: bytes


class Fetcher(Protocol):
    def get(self, url: str) -> HttpResponse: ...


# -- query planning ----------------------------------------------------------

@dataclass(frozen=True)
class RegulationEvent:
    name: str
    date: date


DEFAULT_EVENTS = tuple(RegulationEvent(n, d) for n, d in REGULATION_EVENTS.items())


@dataclass
class QueryPlan:
    target_url: str
    dates: list[date]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError("query dates must be strictly increasing")


def _years_back(today: date, years: int) -> date:
    y = today.year - years
    day = today.day
    if today.month == 2 and day == 29:
        day = 28 if not (y % 4 == 0 and (y % 100 != 0 or y % 400 == 0)) else 29
    return date(y, today.month, day)


def _add_months(d: date, months: int) -> date:
    idx = d.year * 12 + (d.month - 1) + months
    return date(idx // 12, idx % 12 + 1, 1)


def plan_queries(
    url: str,
    today: date,
    events: Sequence[RegulationEvent] | None = DEFAULT_EVENTS,
    months_around: int = 3,
    years: int = 10,
) -> QueryPlan:
    """One date per past year plus month-start dates around each regulation event."""
    if months_around < 0:
        raise ValueError("months_around must be >= 0")
    dates = {_years_back(today, k) for k in range(1, years + 1)}
    for ev in events or ():
        start = date(ev.date.year, ev.date.month, 1)
        dates.update(_add_months(start, m) for m in range(-months_around, months_around + 1))
    return QueryPlan(url, sorted(dates))


# -- CDX parsing -------------------------------------------------------------

@dataclass
class SnapshotRef:
    original_url: str
    capture_timestamp: str
    archive_url: str
    status_code: int
    distance_days: int | None = None

    def __post_init__(self):
        datetime.strptime(self.capture_timestamp, TIMESTAMP_FORMAT)
        if self.capture_timestamp not in self.archive_url:
            raise ValueError("archive_url must embed the capture timestamp")

    @property
    def capture_date(self) -> date:
        return datetime.strptime(self.capture_timestamp, TIMESTAMP_FORMAT).date()

    def to_dict(self) -> dict:
        return {
            "original_url": self.original_url,
            "capture_timestamp": self.capture_timestamp,
            "archive_url": self.archive_url,
            "status_code": self.status_code,
            "distance_days": self.distance_days,
        }


_TS_RE = re.compile(r"^\d{14}$")
CDX_FIELDS = ["urlkey", "timestamp", "original", "mimetype", "statuscode", "digest", "length"]


def archive_url_for(base_url: str, timestamp: str, original: str) -> str:
    return f"{base_url.rstrip('/')}/web/{timestamp}/{original}"


def parse_cdx(body: str | bytes, base_url: str = DEFAULT_BASE_URL) -> list[SnapshotRef]:
    """Parse CDX output in either JSON (header row first) or space-separated text form.

    Only HTTP 200 captures are kept; malformed rows are skipped with a warning.
    """
    if isinstance(body, bytes):
        body = body.decode("utf-8", errors="replace")
    text = body.strip()
    if not text:
        return []
    rows: list[dict[str, str]] = []
    if text.startswith("["):
        data = json.loads(text)
        if not data:
            return []
        header = [str(h) for h in data[0]]
        for i, row in enumerate(data[1:], start=1):
            if not isinstance(row, list) or len(row) != len(header):
                log.warning("skipping malformed CDX row %d: %r", i, row)
                continue
            rows.append(dict(zip(header, map(str, row))))
    else:
        for i, line in enumerate(text.splitlines(), start=1):
            parts = line.split()
            if len(parts) != len(CDX_FIELDS):
                log.warning("skipping malformed CDX line %d: %r", i, line)
                continue
            rows.append(dict(zip(CDX_FIELDS, parts)))
    refs = []
    for row in rows:
        ts, original, status = row.get("timestamp", ""), row.get("original", ""), row.get("statuscode", "")
        if not _TS_RE.match(ts) or not original:
            log.warning("skipping CDX row with bad timestamp or url: %r", row)
            continue
        try:
            datetime.strptime(ts, TIMESTAMP_FORMAT)
        except ValueError:
            log.warning("skipping CDX row with invalid timestamp %r", ts)
            continue
        if status != "200":
            continue
        refs.append(SnapshotRef(original, ts, archive_url_for(base_url, ts, original), 200))
    return refs


def choose_nearest(refs: Sequence[SnapshotRef], target: date) -> SnapshotRef | None:
    """Capture closest to ``target`` in days; ties go to the earlier capture."""
    best = None
    best_key = None
    for ref in refs:
        dist = abs((ref.capture_date - target).days)
        key = (dist, ref.capture_timestamp)
        if best_key is None or key < best_key:
            best, best_key = ref, key
    if best is None:
        return None
    return SnapshotRef(best.original_url, best.capture_timestamp, best.archive_url, best.status_code, best_key[0])


# -- fetching ----------------------------------------------------------------

class RateLimiter:
    """Per-host minimum interval between requests."""

    def __init__(self, per_second: float = 1.0, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if per_second <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / per_second
        self._clock = clock
        self._sleep = sleep
        self._next: dict[str, float] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def _lock(self, host: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(host, threading.Lock())

    def wait(self, url: str) -> None:
        host = urlsplit(url).netloc.lower()
        with self._lock(host):
            now = self._clock()
            ready = self._next.get(host, now)
            if ready > now:
                self._sleep(ready - now)
                now = ready
            self._next[host] = now + self.interval


@dataclass
class ArchiveClient:
    fetcher: Fetcher
    base_url: str = field(default_factory=lambda: os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL))
    limiter: RateLimiter = field(default_factory=RateLimiter)
    max_retries: int = MAX_RETRIES
    backoff: float = 1.0
    sleep: Callable[[float], None] = time.sleep

    def _get(self, url: str) -> HttpResponse:
        """GET with up to ``max_retries`` retries on transport errors and 5xx."""
        attempt = 0
        while True:
            self.limiter.wait(url)
            try:
                resp = self.fetcher.get(url)
            except OSError as exc:
                resp, error = None, exc
            else:
                error = None
                if resp.status < 500:
                    return resp
            if attempt >= self.max_retries:
                if resp is not None:
                    return resp
                raise ArchiveError(f"GET {url} failed after {attempt + 1} attempts: {error}")
            delay = self.backoff * 2 ** attempt
            log.warning("GET %s failed (%s); retrying in %.1fs", url, error or resp.status, delay)
            self.sleep(delay)
            attempt += 1

    def cdx_url(self, url: str, day: date, window_days: int = 366) -> str:
        lo = date.fromordinal(day.toordinal() - window_days)
        hi = date.fromordinal(day.toordinal() + window_days)
        query = urlencode({"url": url, "from": lo.strftime("%Y%m%d"), "to": hi.strftime("%Y%m%d"), "output": "json"})
        return f"{self.base_url.rstrip('/')}/cdx/search/cdx?{query}"

    def nearest_snapshot(self, url: str, day: date) -> SnapshotRef | None:
        resp = self._get(self.cdx_url(url, day))
        if resp.status != 200:
            raise ArchiveError(f"CDX query for {url} returned HTTP {resp.status}")
        return choose_nearest(parse_cdx(resp.body, self.base_url), day)

    def fetch_snapshot(self, ref: SnapshotRef) -> bytes:
        resp = self._get(ref.archive_url)
        if resp.status != 200:
            raise SnapshotFetchError(ref, resp.status)
        return strip_wayback_toolbar(resp.body)

    def fetch_archived_page(self, archive_url: str) -> bytes:
        """Any replayed page (e.g. a policy linked from a snapshot), toolbar removed."""
        resp = self._get(archive_url)
        if resp.status != 200:
            raise ArchiveError(f"HTTP {resp.status} for {archive_url}")
        return strip_wayback_toolbar(resp.body)


def nearest_snapshot(url: str, day: date, fetcher: Fetcher, **kwargs) -> SnapshotRef | None:
    return ArchiveClient(fetcher, **kwargs).nearest_snapshot(url, day)


def fetch_snapshot(ref: SnapshotRef, fetcher: Fetcher, **kwargs) -> bytes:
    return ArchiveClient(fetcher, **kwargs).fetch_snapshot(ref)


_TOOLBAR_PATTERNS = [
    re.compile(rb"<!--\s*BEGIN WAYBACK TOOLBAR INSERT\s*-->.*?<!--\s*END WAYBACK TOOLBAR INSERT\s*-->\s*", re.S),
    re.compile(rb"<script[^>]*>[^<]*__wm\.(?:init|wombat)[^<]*</script>\s*", re.S),
    re.compile(rb"<script[^>]*src=\"[^\"]*archive\.org/includes/[^\"]*\"[^>]*>\s*</script>\s*", re.S),
    re.compile(rb"<script[^>]*src=\"[^\"]*/_static/js/[^\"]*\"[^>]*>\s*</script>\s*", re.S),
    re.compile(rb"<link[^>]*href=\"[^\"]*/_static/css/[^\"]*\"[^>]*/?>\s*", re.S),
    re.compile(rb"<!--\s*End Wayback Rewrite JS Include\s*-->\s*", re.S),
    re.compile(rb"<!--\s*FILE ARCHIVED ON.*?-->\s*", re.S),
]


def strip_wayback_toolbar(body: bytes) -> bytes:
    """Remove the markup the archive injects into replayed pages."""
    for pat in _TOOLBAR_PATTERNS:
        body = pat.sub(b"", body)
    return body


# -- recorded fixtures -------------------------------------------------------

class FixtureFetcher:
    """Replays recorded ``{"url": ..., "status": ..., "body": ...}`` exchanges.

    Unknown URLs answer 404. ``calls`` records every requested URL.
    """

    def __init__(self, exchanges: Sequence[dict]):
        self._responses = {}
        for ex in exchanges:
            body = ex.get("body", "")
            if "body_file" in ex:
                body = Path(ex["body_file"]).read_bytes()
            self._responses[ex["url"]] = HttpResponse(int(ex.get("status", 200)),
                                                      body if isinstance(body, bytes) else body.encode("utf-8"))
        self.calls: list[str] = []

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureFetcher":
        path = Path(path)
        exchanges = json.loads(path.read_text(encoding="utf-8"))
        for ex in exchanges:
            if "body_file" in ex:
                ex["body_file"] = str(path.parent / ex["body_file"])
        return cls(exchanges)

    def get(self, url: str) -> HttpResponse:
        self.calls.append(url)
        return self._responses.get(url, HttpResponse(404, b""))
