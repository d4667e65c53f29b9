"""Parse, validate, deduplicate and time-order raw mobility event streams.

Input records are geolocated sightings of a person ("check-ins"), one per
line, in JSONL or CSV form:

    JSONL: {"user": str, "lat": num, "lon": num, "ts": RFC3339 str or epoch
            seconds, "venue": optional str, "category": optional str}
    CSV:   header ``user,lat,lon,ts,venue,category``; empty venue/category
           cells are allowed.

Malformed records are never fatal: they land in ``EventBatch.rejected`` as
``(line, reason)`` pairs and ``accepted + rejected == source_count`` always
holds.  Exact duplicate sightings of the same person at the same place and
second are dropped as duplicates; near-duplicates are kept (oscillation is
handled downstream by the ping-pong filter).

``canonicalize`` makes the location set total: events without a venue id are
assigned a grid-cell token ``c:<row>:<col>`` obtained by floor-dividing
lat/lon by the cell size.  Canonical batches are deterministically ordered
by (person, timestamp, location), so any permutation of the input lines
yields a byte-identical event sequence.
"""

from __future__ import annotations

import io
import json
import math
from csv import reader as csv_reader
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Union

FORMAT_JSONL = "jsonl"
FORMAT_CSV = "csv"
FORMATS = (FORMAT_JSONL, FORMAT_CSV)

CSV_COLUMNS = ["user", "lat", "lon", "ts", "venue", "category"]


class MobilityEvent(NamedTuple):
    """One timestamped sighting of a person at a location."""

    person_id: str
    ts: int                      # epoch seconds, UTC
    location_id: str             # venue id or cell token; "" until canonicalized
    lat: float
    lon: float
    category: Optional[str] = None
    line: int = 0                # 1-based source line, 0 for synthesized events


@dataclass
class EventBatch:
    """Accepted events plus the rejection audit trail for one input stream."""

    events: list[MobilityEvent] = field(default_factory=list)
    source_count: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    line_count: int = 0          # total source lines consumed, incl. headers

    @property
    def accepted_count(self) -> int:
        return len(self.events)


def cell_of(lat: float, lon: float, cell_size: float) -> tuple[int, int]:
    """Floor-quantized (row, col) grid cell of a coordinate.

    The lower edge is inclusive: a point exactly on ``k * cell_size`` belongs
    to cell k.
    """
    return math.floor(lat / cell_size), math.floor(lon / cell_size)


def cell_token(lat: float, lon: float, cell_size: float) -> str:
    row, col = cell_of(lat, lon, cell_size)
    return f"c:{row}:{col}"


def parse_timestamp(value: object) -> int:
    """Epoch seconds from an RFC3339 string or numeric epoch value.

    Naive datetimes are taken as UTC; fractional seconds are truncated
    (the model works at seconds precision).
    """
    if isinstance(value, bool):
        raise ValueError("invalid ts")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError("invalid ts")
        return int(value)
    if isinstance(value, str):
        s = value.strip()
        if not s:
            raise ValueError("invalid ts")
        stripped = s[1:] if s[0] in "+-" else s
        if stripped.isdigit():
            return int(s)
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(s)
        except ValueError:
            raise ValueError("invalid ts") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    raise ValueError("invalid ts")


def _coerce_coord(value: object, name: str) -> float:
    if isinstance(value, bool):
        raise ValueError(f"invalid {name}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"invalid {name}") from None
    raise ValueError(f"invalid {name}")


def _make_event(
    user: object,
    lat: object,
    lon: object,
    ts: object,
    venue: object,
    category: object,
    line: int,
    window: Optional[tuple[int, int]],
) -> MobilityEvent:
    """Validate one record's fields; raises ValueError with the reject reason."""
    if user is None:
        raise ValueError("user missing")
    person = str(user).strip()
    if not person:
        raise ValueError("user missing")
    if lat is None:
        raise ValueError("invalid lat")
    if lon is None:
        raise ValueError("invalid lon")
    lat_f = _coerce_coord(lat, "lat")
    lon_f = _coerce_coord(lon, "lon")
    if not (-90.0 <= lat_f <= 90.0):
        raise ValueError("lat out of range")
    if not (-180.0 <= lon_f <= 180.0):
        raise ValueError("lon out of range")
    if ts is None:
        raise ValueError("invalid ts")
    epoch = parse_timestamp(ts)
    if window is not None and not (window[0] <= epoch <= window[1]):
        raise ValueError("out of window")
    venue_id = ""
    if venue is not None:
        venue_id = str(venue).strip()
    cat: Optional[str] = None
    if category is not None:
        cat_s = str(category).strip()
        cat = cat_s or None
    return MobilityEvent(person, epoch, venue_id, lat_f, lon_f, cat, line)


def _iter_lines(data: Union[IO[bytes], IO[str], bytes, str]) -> Iterator[str]:
    if isinstance(data, bytes):
        yield from io.StringIO(data.decode("utf-8"))
    elif isinstance(data, str):
        yield from io.StringIO(data)
    else:
        for raw in data:
            yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def _dedup_key(e: MobilityEvent) -> tuple:
    # Venue-less events are only distinguishable by exact coordinates until
    # canonicalize assigns their cell token.
    if e.location_id:
        return (e.person_id, e.ts, e.location_id)
    return (e.person_id, e.ts, "", e.lat, e.lon)


def _sort_key(e: MobilityEvent) -> tuple:
    return (e.person_id, e.ts, e.location_id, e.lat, e.lon, e.category or "", e.line)


def _dedup_sorted(events: list[MobilityEvent]) -> tuple[list[MobilityEvent], list[tuple[int, str]]]:
    """Drop later events sharing a (person, location, ts) key; input must be
    sorted with ``_sort_key`` so the kept representative is canonical."""
    kept: list[MobilityEvent] = []
    dropped: list[tuple[int, str]] = []
    prev_key = None
    for e in events:
        key = _dedup_key(e)
        if key == prev_key:
            dropped.append((e.line, "duplicate"))
        else:
            kept.append(e)
            prev_key = key
    return kept, dropped


def parse_events(
    data: Union[IO[bytes], IO[str], bytes, str],
    format: str = FORMAT_JSONL,
    window: Optional[tuple[int, int]] = None,
    first_line: int = 1,
) -> EventBatch:
    """Parse an event stream into an ordered, deduplicated EventBatch.

    ``window`` is the inclusive observation interval (epoch seconds); events
    outside it are rejected with reason "out of window".  Blank lines are
    skipped and do not count as records.  An undecodable stream or an unknown
    format tag is fatal; individual bad records are not.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown format: {format!r}")
    candidates: list[MobilityEvent] = []
    rejected: list[tuple[int, str]] = []
    source_count = 0
    line_no = first_line - 1

    if format == FORMAT_JSONL:
        for text in _iter_lines(data):
            line_no += 1
            stripped = text.strip()
            if not stripped:
                continue
            source_count += 1
            try:
                rec = json.loads(stripped)
            except json.JSONDecodeError:
                rejected.append((line_no, "invalid json"))
                continue
            if not isinstance(rec, dict):
                rejected.append((line_no, "not a json object"))
                continue
            try:
                candidates.append(
                    _make_event(
                        rec.get("user"), rec.get("lat"), rec.get("lon"),
                        rec.get("ts"), rec.get("venue"), rec.get("category"),
                        line_no, window,
                    )
                )
            except ValueError as err:
                rejected.append((line_no, str(err)))
    else:
        rows = csv_reader(_iter_lines(data))
        header: Optional[list[str]] = None
        for row in rows:
            line_no += 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header != CSV_COLUMNS:
                    raise ValueError(
                        f"bad csv header: expected {','.join(CSV_COLUMNS)!r}, got {','.join(header)!r}"
                    )
                continue
            source_count += 1
            if len(row) != len(CSV_COLUMNS):
                rejected.append((line_no, "wrong column count"))
                continue
            user, lat, lon, ts, venue, category = (c.strip() for c in row)
            try:
                candidates.append(
                    _make_event(
                        user, lat, lon, ts, venue or None, category or None,
                        line_no, window,
                    )
                )
            except ValueError as err:
                rejected.append((line_no, str(err)))

    candidates.sort(key=_sort_key)
    kept, dropped = _dedup_sorted(candidates)
    rejected.extend(dropped)
    rejected.sort()
    return EventBatch(kept, source_count, rejected, line_no - (first_line - 1))


def canonicalize(batch: EventBatch, cell_size: float) -> EventBatch:
    """Resolve venue-less events to grid-cell tokens and order canonically.

    Idempotent, and permutation-invariant over the source line order: the
    accepted event sequence depends only on the record values.  Events that
    collapse onto an existing (person, cell, ts) triple after cell assignment
    are rejected as duplicates so conservation still holds.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    events = [
        e if e.location_id else e._replace(location_id=cell_token(e.lat, e.lon, cell_size))
        for e in batch.events
    ]
    events.sort(key=_sort_key)
    kept, dropped = _dedup_sorted(events)
    rejected = sorted(batch.rejected + dropped)
    return EventBatch(kept, batch.source_count, rejected, batch.line_count)


def merge_batches(batches: Iterable[EventBatch]) -> EventBatch:
    """Concatenate per-file batches into one stream.

    Line numbers are offset as if the files had been concatenated, so the
    rejected report stays traceable.  Cross-file duplicates are dropped here;
    run ``canonicalize`` afterwards for the final ordering guarantee.
    """
    events: list[MobilityEvent] = []
    rejected: list[tuple[int, str]] = []
    source_count = 0
    offset = 0
    for batch in batches:
        events.extend(e._replace(line=e.line + offset) for e in batch.events)
        rejected.extend((line + offset, reason) for line, reason in batch.rejected)
        source_count += batch.source_count
        offset += batch.line_count
    events.sort(key=_sort_key)
    kept, dropped = _dedup_sorted(events)
    rejected.extend(dropped)
    rejected.sort()
    return EventBatch(kept, source_count, rejected, offset)


def iter_person_events(batch: EventBatch) -> Iterator[tuple[str, list[MobilityEvent]]]:
    """Yield (person_id, events) groups in canonical person order."""
    events = batch.events
    n = len(events)
    i = 0
    while i < n:
        person = events[i].person_id
        j = i + 1
        while j < n and events[j].person_id == person:
            j += 1
        yield person, events[i:j]
        i = j
