"""Domain records and the append-only JSONL store that persists them."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import re
import tempfile
import threading
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Any, ClassVar, Iterable

from . import __version__
from .privacy_analysis import KeywordCoverageReport
from .readability import ReadabilityReport

log = logging.getLogger(__name__)

IOT_THRESHOLD = 0.4
RESOLUTION_THRESHOLD = 0.8

DEVICE_CATEGORIES = (
    "Smart Speaker", "Smart Thermostat", "Smart Camera", "Miscellaneous", "Smart Lock",
    "Smart Fitness Tracker", "Smart Light", "Smart Doorbell", "Smart Alarm System", "Smart TV",
    "Smart Scale", "Smart Home Device", "Smart Air Purifier", "Smart Sensor", "Smart Watch",
    "Smart Monitor", "Smart Security", "Smart Health Tracker", "Smart Refrigerator",
    "Smart Location Tracker", "Smart Entertainment Device", "Smart Connected Vehicle",
    "Smart Networking", "Smart Fitness Equipment", "Smart Mount", "Smart Projector",
    "Smart Body Scanners", "Smart Gaming",
)
OVERALL_LABELS = ("Acceptable", "Unacceptable")
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")
_SEMVER_RE = re.compile(r"^\d+\.\d+\.\d+(?:[-+][0-9A-Za-z.\-]+)?$")


class InvariantError(ValueError):
    pass


class CorruptRecordError(ValueError):
    pass


def make_id(*parts: str) -> str:
    """Stable opaque id derived from the record's natural key."""
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:16]


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC-3339 UTC timestamp such as ``2024-01-01T00:00:00Z``."""
    dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None or dt.utcoffset().total_seconds() != 0:
        raise InvariantError(f"timestamp must be UTC: {value!r}")
    return dt


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise InvariantError(msg)


def _check_unit(value: float, name: str) -> None:
    _check(isinstance(value, (int, float)) and math.isfinite(value) and 0.0 <= value <= 1.0,
           f"{name} must be a real in [0, 1], got {value!r}")


@dataclass
class ProductRecord:
    KIND: ClassVar[str] = "products"

    id: str
    title: str
    description: str
    category: str
    source_url: str
    manufacturer_name: str
    origin_country: str
    iot_score: float
    is_smart: bool

    def validate(self, iot_threshold: float = IOT_THRESHOLD) -> None:
        _check_unit(self.iot_score, "iot_score")
        _check(self.category in DEVICE_CATEGORIES, f"unknown device category {self.category!r}")
        _check(self.origin_country == "unknown" or bool(_COUNTRY_RE.match(self.origin_country)),
               f"origin_country must be ISO-3166 alpha-2 or 'unknown', got {self.origin_country!r}")
        # high-confidence terms force iot_score to 1.0, so the score decides
        _check(self.is_smart == (self.iot_score >= iot_threshold),
               f"is_smart={self.is_smart} inconsistent with iot_score={self.iot_score}")


@dataclass
class ManufacturerRecord:
    KIND: ClassVar[str] = "manufacturers"

    id: str
    name: str
    website: str | None = None
    resolution_score: float | None = None

    def validate(self, resolution_threshold: float = RESOLUTION_THRESHOLD) -> None:
        if self.resolution_score is not None:
            _check_unit(self.resolution_score, "resolution_score")
        if self.website is not None:
            _check(self.resolution_score is not None and self.resolution_score >= resolution_threshold,
                   "a website requires a resolution_score at or above the threshold")


@dataclass
class PolicyDocument:
    KIND: ClassVar[str] = "policies"

    id: str
    manufacturer_id: str
    source_url: str
    retrieved_at: str
    kind: str  # "current" | "archived"
    language: str
    raw_html_ref: str
    text: str
    is_policy_confidence: float
    mentions_device: bool
    snapshot_date: date | None = None
    last_updated: date | None = None
    analysis_skipped: bool = False

    def validate(self) -> None:
        from .langid import LANGUAGES, UNKNOWN

        _check(bool(self.text.strip()), "policy text must be non-empty")
        _check(self.kind in ("current", "archived"), f"kind must be current or archived, got {self.kind!r}")
        _check((self.kind == "archived") == (self.snapshot_date is not None),
               "archived documents (and only those) carry a snapshot_date")
        _check(self.language in LANGUAGES or self.language == UNKNOWN, f"unknown language code {self.language!r}")
        _check_unit(self.is_policy_confidence, "is_policy_confidence")
        parse_timestamp(self.retrieved_at)


@dataclass
class AnalysisReport:
    KIND: ClassVar[str] = "reports"

    policy_id: str
    readability: ReadabilityReport
    coverage: KeywordCoverageReport
    ambiguity: dict[str, str] = field(default_factory=dict)
    overall: str | None = None
    produced_at: str = ""
    toolkit_version: str = __version__

    @property
    def id(self) -> str:
        return self.policy_id

    def validate(self) -> None:
        values = [v for k, v in dataclasses.asdict(self.readability).items() if k != "flags"]
        values += [a.normalized_freq for a in self.coverage.attributes.values()]
        _check(all(math.isfinite(float(v)) for v in values), "report metrics must be finite")
        _check(self.overall is None or self.overall in OVERALL_LABELS, f"bad overall label {self.overall!r}")
        _check(bool(_SEMVER_RE.match(self.toolkit_version)), "toolkit_version must be semver")
        parse_timestamp(self.produced_at)


RECORD_TYPES: dict[str, type] = {
    cls.KIND: cls for cls in (ProductRecord, ManufacturerRecord, PolicyDocument, AnalysisReport)
}
# CSV export columns, in order, per record kind
CSV_COLUMNS: dict[str, list[str]] = {
    "products": [f.name for f in dataclasses.fields(ProductRecord)],
    "manufacturers": [f.name for f in dataclasses.fields(ManufacturerRecord)],
    "policies": [f.name for f in dataclasses.fields(PolicyDocument)],
    "reports": [f.name for f in dataclasses.fields(AnalysisReport)],
}


def record_to_dict(record) -> dict[str, Any]:
    if isinstance(record, AnalysisReport):
        return {
            "policy_id": record.policy_id,
            "readability": record.readability.to_dict(),
            "coverage": record.coverage.to_dict(),
            "ambiguity": dict(sorted(record.ambiguity.items())),
            "overall": record.overall,
            "produced_at": record.produced_at,
            "toolkit_version": record.toolkit_version,
        }
    d = dataclasses.asdict(record)
    for k, v in d.items():
        if isinstance(v, date):
            d[k] = v.isoformat()
    return d


def record_from_dict(kind: str, d: dict[str, Any]):
    if kind == "reports":
        return AnalysisReport(
            policy_id=d["policy_id"],
            readability=ReadabilityReport.from_dict(d["readability"]),
            coverage=KeywordCoverageReport.from_dict(d["coverage"]),
            ambiguity=dict(d.get("ambiguity") or {}),
            overall=d.get("overall"),
            produced_at=d["produced_at"],
            toolkit_version=d["toolkit_version"],
        )
    cls = RECORD_TYPES[kind]
    d = dict(d)
    if kind == "policies":
        for key in ("snapshot_date", "last_updated"):
            if d.get(key):
                d[key] = date.fromisoformat(d[key])
    return cls(**d)


class Store:
    """JSONL files per record kind plus a content-addressed ``blobs/`` directory.

    All records are loaded on open. Duplicate ids resolve last-write-wins:
    policies by ``retrieved_at``, reports by ``produced_at``, everything else
    by file order. One writer per directory; reads may be shared.
    """

    def __init__(self, path: str | Path, strict: bool = False,
                 iot_threshold: float = IOT_THRESHOLD, resolution_threshold: float = RESOLUTION_THRESHOLD):
        self.path = Path(path)
        if self.path.exists() and not self.path.is_dir():
            raise NotADirectoryError(f"{self.path}: not a directory")
        self.path.mkdir(parents=True, exist_ok=True)
        (self.path / "blobs").mkdir(exist_ok=True)
        self.strict = strict
        self.iot_threshold = iot_threshold
        self.resolution_threshold = resolution_threshold
        self._lock = threading.Lock()
        self._records: dict[str, dict[str, Any]] = {kind: {} for kind in RECORD_TYPES}
        self.corrupt_lines: list[tuple[str, int]] = []
        for kind in RECORD_TYPES:
            self._load(kind)

    def _file(self, kind: str) -> Path:
        return self.path / f"{kind}.jsonl"

    def _load(self, kind: str) -> None:
        path = self._file(kind)
        if not path.exists():
            return
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = record_from_dict(kind, json.loads(line))
                except (ValueError, KeyError, TypeError) as exc:
                    if self.strict:
                        raise CorruptRecordError(f"{path}:{lineno}: corrupt record ({exc})") from exc
                    log.warning("%s:%d: skipping corrupt record (%s)", path, lineno, exc)
                    self.corrupt_lines.append((kind, lineno))
                    continue
                self._remember(kind, record)

    @staticmethod
    def _version_key(record) -> str:
        if isinstance(record, PolicyDocument):
            return record.retrieved_at
        if isinstance(record, AnalysisReport):
            return record.produced_at
        return ""

    def _remember(self, kind: str, record) -> None:
        prev = self._records[kind].get(record.id)
        if prev is not None and self._version_key(record) and (
            parse_timestamp(self._version_key(record)) < parse_timestamp(self._version_key(prev))
        ):
            return
        self._records[kind][record.id] = record

    def _validate(self, record) -> None:
        if isinstance(record, ProductRecord):
            record.validate(self.iot_threshold)
        elif isinstance(record, ManufacturerRecord):
            record.validate(self.resolution_threshold)
        elif isinstance(record, AnalysisReport):
            record.validate()
            _check(record.policy_id in self._records["policies"],
                   f"report references unknown policy {record.policy_id!r}")
        else:
            record.validate()

    def put(self, record) -> str:
        kind = getattr(record, "KIND", None)
        if kind not in RECORD_TYPES:
            raise TypeError(f"not a storable record: {type(record).__name__}")
        self._validate(record)
        line = json.dumps(record_to_dict(record), sort_keys=True, ensure_ascii=False)
        with self._lock:
            with self._file(kind).open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._remember(kind, record)
        return record.id

    def get(self, kind: str, record_id: str):
        return self._records[kind].get(record_id)

    def list(self, kind: str) -> list:
        return [self._records[kind][k] for k in sorted(self._records[kind])]

    def count(self, kind: str) -> int:
        return len(self._records[kind])

    # blobs

    def put_blob(self, data: bytes) -> str:
        key = hashlib.sha256(data).hexdigest()
        target = self.path / "blobs" / key
        if not target.exists():
            fd, tmp = tempfile.mkstemp(dir=self.path / "blobs")
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, target)
        return key

    def get_blob(self, key: str) -> bytes:
        return (self.path / "blobs" / key).read_bytes()

    def blob_keys(self) -> list[str]:
        return sorted(p.name for p in (self.path / "blobs").iterdir() if not p.name.startswith("tmp"))

    # export / import

    def select(self, kind: str, selector: dict[str, Any] | None = None) -> list:
        if kind not in RECORD_TYPES:
            raise ValueError(f"unknown record kind {kind!r}")
        selector = selector or {}
        columns = CSV_COLUMNS[kind]
        for key in selector:
            if key not in columns:
                raise ValueError(f"unknown selector field {key!r} for {kind}")
        out = []
        for record in self.list(kind):
            row = record_to_dict(record)
            if all(_matches(row[k], v) for k, v in selector.items()):
                out.append(record)
        return out

    def export(self, kind: str, fmt: str = "json", selector: dict[str, Any] | None = None) -> bytes:
        """Records ordered by id as a JSON array or RFC-4180 CSV with a fixed header."""
        records = self.select(kind, selector)
        rows = [record_to_dict(r) for r in records]
        if fmt == "json":
            return (json.dumps(rows, sort_keys=True, ensure_ascii=False, indent=1) + "\n").encode("utf-8")
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\r\n")
            columns = CSV_COLUMNS[kind]
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_csv_cell(row[c]) for c in columns])
            return buf.getvalue().encode("utf-8")
        raise ValueError(f"unsupported export format {fmt!r}")

    def import_json(self, kind: str, payload: bytes | str) -> int:
        rows = json.loads(payload)
        for row in rows:
            self.put(record_from_dict(kind, row))
        return len(rows)


def _matches(value: Any, wanted: Any) -> bool:
    if isinstance(value, bool) or isinstance(wanted, bool):
        return str(value).lower() == str(wanted).lower()
    return value == wanted or str(value) == str(wanted)


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, ensure_ascii=False)
    return str(value)


def open_store(path: str | Path, strict: bool = False, **kwargs) -> Store:
    return Store(path, strict=strict, **kwargs)


def iter_records(store: Store, kinds: Iterable[str] = tuple(RECORD_TYPES)):
    for kind in kinds:
        yield from store.list(kind)
