"""Reading, validating and splitting the listing / review / POI tables.

All three inputs are UTF-8 CSV files with a header row (RFC-4180 quoting,
so descriptions may contain commas and newlines).
"""
from __future__ import annotations

import csv
import datetime as dt
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DataError,
    DegenerateSplit,
    DuplicateId,
    EmptyTable,
    MissingColumn,
    RangeViolation,
    UnknownCategory,
)

LISTING_BASE_COLUMNS = (
    "listing_id", "host_id", "first_review", "latitude", "longitude",
    "price", "description", "host_about",
)
REVIEW_COLUMNS = ("review_id", "listing_id", "date", "text")
POI_COLUMNS = ("poi_id", "category", "latitude", "longitude")

# Fixed category order; every per-category block downstream follows it.
CATEGORIES = (
    "Education",
    "Entertainment",
    "Food",
    "Beverage Shopping",
    "Tourist",
    "Transportation",
    "Medical Service",
    "Public Service",
)
_CATEGORY_LOOKUP = {c.lower(): c for c in CATEGORIES}

_TRUE = {"t", "true", "yes", "y"}
_FALSE = {"f", "false", "no", "n"}
_CURRENCY_JUNK = re.compile(r"[\s$€£¥,]")


@dataclass(frozen=True)
class ListingRecord:
    listing_id: str
    host_id: str
    first_review_date: dt.date
    latitude: float
    longitude: float
    price: float
    raw_stats: tuple[float, ...]
    description_text: str = ""
    host_about_text: str = ""


@dataclass(frozen=True)
class ReviewDoc:
    review_id: str
    listing_id: str
    text: str
    date: dt.date


@dataclass(frozen=True)
class PoiRecord:
    poi_id: str
    category: str
    latitude: float
    longitude: float


@dataclass(frozen=True)
class ListingTable:
    records: tuple[ListingRecord, ...]
    stat_names: tuple[str, ...]
    rejected: tuple[tuple[int, str], ...] = ()

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self) -> list[str]:
        return [r.listing_id for r in self.records]

    def subset(self, records) -> "ListingTable":
        return ListingTable(tuple(records), self.stat_names, ())


@dataclass(frozen=True)
class ReviewTable:
    records: tuple[ReviewDoc, ...]
    n_dropped: int = 0

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_listing(self) -> dict[str, list[ReviewDoc]]:
        grouped: dict[str, list[ReviewDoc]] = {}
        for r in self.records:
            grouped.setdefault(r.listing_id, []).append(r)
        return grouped


@dataclass(frozen=True)
class PoiTable:
    records: tuple[PoiRecord, ...]
    rejected: tuple[tuple[int, str], ...] = ()

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def by_category(self) -> dict[str, list[PoiRecord]]:
        out: dict[str, list[PoiRecord]] = {c: [] for c in CATEGORIES}
        for p in self.records:
            out[p.category].append(p)
        return out


@dataclass(frozen=True)
class DatasetSummary:
    n_listings: int
    n_reviews: int
    time_span: tuple[dt.date, dt.date] | None
    per_category_poi_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_pois(self) -> int:
        return sum(self.per_category_poi_counts.values())

    def to_dict(self) -> dict:
        span = None
        if self.time_span is not None:
            span = [self.time_span[0].isoformat(), self.time_span[1].isoformat()]
        return {
            "n_listings": self.n_listings,
            "n_reviews": self.n_reviews,
            "n_pois": self.n_pois,
            "time_span": span,
            "per_category_poi_counts": dict(self.per_category_poi_counts),
        }


# ---------------------------------------------------------------- parsing helpers

def parse_number(value: str) -> float:
    """Parse a numeric/boolean/currency cell. Empty cells become NaN."""
    s = value.strip()
    if s == "":
        return math.nan
    low = s.lower()
    if low in _TRUE:
        return 1.0
    if low in _FALSE:
        return 0.0
    if low.endswith("%"):
        return float(low[:-1]) / 100.0
    x = float(_CURRENCY_JUNK.sub("", s))
    if not math.isfinite(x):
        raise ValueError(value)
    return x


def format_number(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def normalize_category(value: str) -> str | None:
    key = " ".join(value.replace("_", " ").split()).lower()
    return _CATEGORY_LOOKUP.get(key)


def _open_reader(path):
    fh = open(path, newline="", encoding="utf-8")
    return fh, csv.DictReader(fh)


def _check_columns(reader, required):
    header = reader.fieldnames or []
    for name in required:
        if name not in header:
            raise MissingColumn(name)
    return header


def _coord(row_no, name, raw, bound):
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise RangeViolation(row_no, name, raw) from None
    if not (-bound <= v <= bound):
        raise RangeViolation(row_no, name, raw)
    return v


def _date(row_no, name, raw):
    try:
        return dt.date.fromisoformat(raw.strip())
    except (AttributeError, ValueError):
        raise RangeViolation(row_no, name, raw) from None


# ---------------------------------------------------------------- tables

def parse_listings(path, schema=None, strict=False) -> ListingTable:
    """Parse ``listings.csv``.

    ``schema`` optionally names the statistical columns to keep (in that
    order); by default every non-base column is a stat column. Rows with
    bad values are collected in ``rejected`` as ``(row, message)``, or
    raised when ``strict`` is set. Duplicate listing ids always raise.
    """
    fh, reader = _open_reader(path)
    with fh:
        header = _check_columns(reader, LISTING_BASE_COLUMNS)
        if schema is None:
            stat_names = tuple(h for h in header if h not in LISTING_BASE_COLUMNS)
        else:
            stat_names = tuple(schema)
            _check_columns(reader, stat_names)

        records, rejected, seen = [], [], set()
        for row_no, row in enumerate(reader, start=1):
            lid = (row["listing_id"] or "").strip()
            if lid in seen:
                raise DuplicateId(lid)
            try:
                if not lid:
                    raise RangeViolation(row_no, "listing_id", lid)
                lat = _coord(row_no, "latitude", row["latitude"], 90.0)
                lon = _coord(row_no, "longitude", row["longitude"], 180.0)
                day = _date(row_no, "first_review", row["first_review"])
                try:
                    price = parse_number(row["price"])
                except ValueError:
                    raise RangeViolation(row_no, "price", row["price"]) from None
                if not price > 0:
                    raise RangeViolation(row_no, "price", row["price"])
                stats = []
                for name in stat_names:
                    try:
                        stats.append(parse_number(row[name] or ""))
                    except ValueError:
                        raise RangeViolation(row_no, name, row[name]) from None
            except RangeViolation as exc:
                if strict:
                    raise
                rejected.append((row_no, str(exc)))
                continue
            seen.add(lid)
            records.append(ListingRecord(
                listing_id=lid,
                host_id=(row["host_id"] or "").strip(),
                first_review_date=day,
                latitude=lat,
                longitude=lon,
                price=price,
                raw_stats=tuple(stats),
                description_text=row["description"] or "",
                host_about_text=row["host_about"] or "",
            ))
    return ListingTable(tuple(records), stat_names, tuple(rejected))


def parse_reviews(path) -> ReviewTable:
    fh, reader = _open_reader(path)
    with fh:
        _check_columns(reader, REVIEW_COLUMNS)
        records, dropped, n_rows = [], 0, 0
        for row_no, row in enumerate(reader, start=1):
            n_rows += 1
            text = row["text"] or ""
            if not text.strip():
                dropped += 1
                continue
            records.append(ReviewDoc(
                review_id=row["review_id"].strip(),
                listing_id=row["listing_id"].strip(),
                text=text,
                date=_date(row_no, "date", row["date"]),
            ))
    if n_rows == 0:
        raise EmptyTable(f"{path}: no review rows")
    return ReviewTable(tuple(records), dropped)


def parse_pois(path, strict=True) -> PoiTable:
    fh, reader = _open_reader(path)
    with fh:
        _check_columns(reader, POI_COLUMNS)
        records, rejected, seen = [], [], set()
        for row_no, row in enumerate(reader, start=1):
            try:
                cat = normalize_category(row["category"] or "")
                if cat is None:
                    raise UnknownCategory(row_no, row["category"])
                lat = _coord(row_no, "latitude", row["latitude"], 90.0)
                lon = _coord(row_no, "longitude", row["longitude"], 180.0)
            except DataError as exc:
                if strict:
                    raise
                rejected.append((row_no, str(exc)))
                continue
            pid = row["poi_id"].strip()
            if pid in seen:
                raise DuplicateId(pid)
            seen.add(pid)
            records.append(PoiRecord(pid, cat, lat, lon))
    return PoiTable(tuple(records), tuple(rejected))


# ---------------------------------------------------------------- writers

def write_listings(table: ListingTable, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LISTING_BASE_COLUMNS + table.stat_names)
        for r in table.records:
            w.writerow([
                r.listing_id, r.host_id, r.first_review_date.isoformat(),
                repr(r.latitude), repr(r.longitude), repr(r.price),
                r.description_text, r.host_about_text,
                *(format_number(x) for x in r.raw_stats),
            ])


def write_reviews(table: ReviewTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REVIEW_COLUMNS)
        for r in table.records:
            w.writerow([r.review_id, r.listing_id, r.date.isoformat(), r.text])


def write_pois(table: PoiTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POI_COLUMNS)
        for p in table.records:
            w.writerow([p.poi_id, p.category, repr(p.latitude), repr(p.longitude)])


# ---------------------------------------------------------------- split / stats

def _split_key(r: ListingRecord):
    return (r.first_review_date, r.listing_id)


def temporal_split(listings: ListingTable, ratio: float = 0.8):
    """Earliest ``floor(ratio * N)`` listings by first-review date go to train.

    Equal dates are ordered by listing id so the split is reproducible.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    n = len(listings)
    if n < 2:
        raise DegenerateSplit(f"need at least 2 listings, got {n}")
    ordered = sorted(listings.records, key=_split_key)
    n_train = math.floor(ratio * n)
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"ratio {ratio} leaves an empty side for N={n}")
    return listings.subset(ordered[:n_train]), listings.subset(ordered[n_train:])


def dataset_stats(listings: ListingTable, reviews: ReviewTable | None = None,
                  pois: PoiTable | None = None) -> DatasetSummary:
    reviews = reviews if reviews is not None else ReviewTable(())
    pois = pois if pois is not None else PoiTable(())
    dates = [r.date for r in reviews.records] or [r.first_review_date for r in listings.records]
    span = (min(dates), max(dates)) if dates else None
    counts = Counter(p.category for p in pois.records)
    return DatasetSummary(
        n_listings=len(listings),
        n_reviews=len(reviews),
        time_span=span,
        per_category_poi_counts={c: counts.get(c, 0) for c in CATEGORIES},
    )
