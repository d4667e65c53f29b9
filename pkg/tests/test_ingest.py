from __future__ import annotations

import json
import random

import pytest

from transientdyn.ingest import (
    EventBatch,
    canonicalize,
    cell_token,
    merge_batches,
    parse_events,
    parse_timestamp,
)
from util import jline, T0


def test_single_jsonl_line():
    line = '{"user":"u1","lat":-33.86,"lon":151.21,"ts":"2016-03-01T09:00:00Z","venue":"v1"}'
    batch = parse_events(line, "jsonl")
    assert batch.accepted_count == 1
    assert batch.rejected == []
    assert batch.source_count == 1
    e = batch.events[0]
    assert e.person_id == "u1"
    assert e.location_id == "v1"
    assert e.ts == 1456822800


def test_lat_out_of_range_rejected():
    batch = parse_events(jline("u1", 123.0, 10.0, T0), "jsonl")
    assert batch.accepted_count == 0
    assert batch.rejected == [(1, "lat out of range")]


def test_lon_out_of_range_rejected():
    batch = parse_events(jline("u1", 10.0, 191.0, T0), "jsonl")
    assert batch.rejected == [(1, "lon out of range")]


@pytest.mark.parametrize(
    "line,reason",
    [
        ("not json at all", "invalid json"),
        ("[1,2,3]", "not a json object"),
        ('{"lat":1,"lon":2,"ts":100}', "user missing"),
        ('{"user":"","lat":1,"lon":2,"ts":100}', "user missing"),
        ('{"user":"u","lon":2,"ts":100}', "invalid lat"),
        ('{"user":"u","lat":"x","lon":2,"ts":100}', "invalid lat"),
        ('{"user":"u","lat":1,"lon":2}', "invalid ts"),
        ('{"user":"u","lat":1,"lon":2,"ts":"yesterday"}', "invalid ts"),
        ('{"user":"u","lat":1,"lon":2,"ts":true}', "invalid ts"),
    ],
)
def test_malformed_records_not_fatal(line, reason):
    batch = parse_events(line, "jsonl")
    assert batch.accepted_count == 0
    assert batch.rejected == [(1, reason)]


def test_timestamp_formats():
    assert parse_timestamp("2016-03-01T09:00:00Z") == 1456822800
    assert parse_timestamp("2016-03-01T19:00:00+10:00") == 1456822800
    assert parse_timestamp("2016-03-01T09:00:00") == 1456822800  # naive is UTC
    assert parse_timestamp("2016-03-01T09:00:00.750Z") == 1456822800
    assert parse_timestamp(1456822800) == 1456822800
    assert parse_timestamp("1456822800") == 1456822800
    assert parse_timestamp(1456822800.9) == 1456822800
    with pytest.raises(ValueError):
        parse_timestamp(None)


def test_duplicates_rejected_counted():
    """990 unique records plus 10 exact duplicate lines -> 990 accepted."""
    rng = random.Random(42)
    lines = [
        jline(f"u{rng.randrange(50)}", -33.0 - rng.random(), 151.0 + rng.random(),
              T0 + i * 60, venue=f"v{rng.randrange(200)}")
        for i in range(990)
    ]
    lines += rng.sample(lines, 10)
    rng.shuffle(lines)

    # independent dedup over the raw records
    uniq = set()
    for line in lines:
        rec = json.loads(line)
        uniq.add((rec["user"], rec["venue"], rec["ts"]))
    assert len(uniq) == 990

    batch = parse_events("\n".join(lines), "jsonl")
    assert batch.source_count == 1000
    assert batch.accepted_count == 990
    assert len(batch.rejected) == 10
    assert all(reason == "duplicate" for _line, reason in batch.rejected)


def test_conservation():
    rng = random.Random(7)
    lines = []
    for i in range(300):
        kind = rng.randrange(4)
        if kind == 0:
            lines.append(jline(f"u{i%9}", -33.5, 151.0, T0 + i, venue="v1"))
        elif kind == 1:
            lines.append(jline(f"u{i%9}", 200.0, 151.0, T0 + i))  # bad lat
        elif kind == 2:
            lines.append("{broken")
        else:
            lines.append(jline(f"u{i%9}", -33.5, 151.0, T0 - 999999, venue="v2"))
    batch = parse_events("\n".join(lines), "jsonl", window=(T0 - 10, T0 + 10000))
    assert batch.accepted_count + len(batch.rejected) == batch.source_count == 300


def test_blank_lines_skipped():
    text = "\n" + jline("u1", 1.0, 2.0, T0, venue="v") + "\n\n  \n"
    batch = parse_events(text, "jsonl")
    assert batch.source_count == 1
    assert batch.accepted_count == 1


def test_out_of_window():
    batch = parse_events(jline("u1", 1.0, 2.0, T0), "jsonl", window=(T0 + 1, T0 + 2))
    assert batch.rejected == [(1, "out of window")]
    # inclusive bounds
    batch = parse_events(jline("u1", 1.0, 2.0, T0), "jsonl", window=(T0, T0))
    assert batch.accepted_count == 1


def test_csv_roundtrip():
    text = (
        "user,lat,lon,ts,venue,category\n"
        "u1,-33.86,151.21,2016-03-01T09:00:00Z,v1,Pub\n"
        "u2,-33.86,151.21,1456822800,,\n"
        "u3,bad,151.21,1456822800,v2,\n"
    )
    batch = parse_events(text, "csv")
    assert batch.accepted_count == 2
    assert batch.rejected == [(4, "invalid lat")]
    assert batch.events[0].category == "Pub"
    assert batch.events[1].location_id == ""  # venue-less until canonicalized


def test_csv_wrong_column_count():
    text = "user,lat,lon,ts,venue,category\nu1,-33.86,151.21\n"
    batch = parse_events(text, "csv")
    assert batch.rejected == [(2, "wrong column count")]


def test_csv_bad_header_fatal():
    with pytest.raises(ValueError, match="bad csv header"):
        parse_events("a,b,c\n1,2,3\n", "csv")


def test_unknown_format_fatal():
    with pytest.raises(ValueError, match="unknown format"):
        parse_events("", "xml")


def test_undecodable_stream_fatal():
    with pytest.raises(UnicodeDecodeError):
        parse_events(b"\xff\xfe\x00bad", "jsonl")


def test_canonicalize_keeps_venue_ids():
    batch = parse_events(jline("u1", -33.86, 151.21, T0, venue="v9"), "jsonl")
    out = canonicalize(batch, 0.05)
    assert out.events[0].location_id == "v9"


def test_canonicalize_cell_token():
    batch = parse_events(jline("u1", -33.8601, 151.2102, T0), "jsonl")
    out = canonicalize(batch, 0.05)
    assert out.events[0].location_id == "c:-678:3024"


def test_cell_token_boundary_floor():
    # points exactly on a boundary belong to the cell whose lower edge they touch
    assert cell_token(0.1, 0.05, 0.05) == "c:2:1"
    assert cell_token(-0.1, 0.0, 0.05) == "c:-2:0"


def values(batch):
    # event identity excludes the source-line provenance
    return [e._replace(line=0) for e in batch.events]


def test_permutation_invariance():
    rng = random.Random(5)
    lines = [
        jline(f"u{i % 7}", -33.0 - (i % 13) * 0.01, 151.0, T0 + (i * 37) % 5000,
              venue=f"v{i % 11}" if i % 3 else None)
        for i in range(200)
    ]
    ref = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
    for _ in range(3):
        rng.shuffle(lines)
        got = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
        assert values(got) == values(ref)


def test_canonicalize_idempotent():
    lines = [jline("u1", -33.86, 151.21, T0 + i, venue="v" if i % 2 else None)
             for i in range(20)]
    once = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
    twice = canonicalize(once, 0.05)
    assert twice.events == once.events
    assert twice.rejected == once.rejected


def test_per_person_order_and_timestamp_ties():
    lines = [
        jline("u1", 1.0, 2.0, T0 + 60, venue="b"),
        jline("u1", 1.0, 2.0, T0, venue="z"),
        jline("u1", 1.0, 2.0, T0 + 60, venue="a"),
    ]
    batch = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
    seq = [(e.ts, e.location_id) for e in batch.events]
    assert seq == [(T0, "z"), (T0 + 60, "a"), (T0 + 60, "b")]


def test_merge_batches_offsets_lines():
    b1 = parse_events(jline("u1", 1.0, 2.0, T0, venue="v") + "\n" + "{bad", "jsonl")
    b2 = parse_events("{also bad", "jsonl")
    merged = merge_batches([b1, b2])
    assert merged.source_count == 3
    assert merged.accepted_count == 1
    assert merged.rejected == [(2, "invalid json"), (3, "invalid json")]


def test_merge_batches_cross_file_duplicates():
    line = jline("u1", 1.0, 2.0, T0, venue="v")
    b1 = parse_events(line, "jsonl")
    b2 = parse_events(line, "jsonl")
    merged = merge_batches([b1, b2])
    assert merged.accepted_count == 1
    assert [r for _l, r in merged.rejected] == ["duplicate"]
