"""Shared builders for the test suite."""

from __future__ import annotations

import json

from transientdyn.ingest import EventBatch, MobilityEvent, _sort_key

HOUR = 3600
DAY = 86400
T0 = 1456790400  # 2016-03-01T00:00:00Z


def ev(person, ts, loc, lat=-33.86, lon=151.21, category=None, line=0):
    return MobilityEvent(person, ts, loc, lat, lon, category, line)


def make_batch(events) -> EventBatch:
    """Canonically ordered batch straight from event tuples."""
    ordered = sorted(events, key=_sort_key)
    return EventBatch(ordered, len(ordered), [], len(ordered))


def jline(user, lat, lon, ts, venue=None, category=None) -> str:
    rec = {"user": user, "lat": lat, "lon": lon, "ts": ts}
    if venue is not None:
        rec["venue"] = venue
    if category is not None:
        rec["category"] = category
    return json.dumps(rec)


def read_csv_rows(path):
    """Rows of an output CSV, skipping '#' comment lines; first row is the header."""
    import csv

    with open(path, encoding="utf-8") as fh:
        return [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
