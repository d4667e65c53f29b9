"""Infer each person's base (home) location.

Every person is anchored to one base location per observation window; the
model measures movement relative to it.  The inference is the usual
night-window modal heuristic: the base is the most-visited location among
events whose UTC hour falls inside the night window (default [21:00, 06:00)),
falling back to the overall modal location when a person has no night
events.  Ties go to the location with the larger total dwell, then to the
lexicographically smallest id.

An override CSV (``user,base_location``) can pin bases externally, e.g. when
ground truth is known.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence, Union

from .ingest import EventBatch, MobilityEvent, iter_person_events

DEFAULT_NIGHT_WINDOW = (21, 6)


class BaseAssignment(NamedTuple):
    person_id: str
    base_location: str
    support: int        # events observed at the base
    confidence: float   # support / total in-window events


def hour_of_day(ts: int) -> int:
    return (ts // 3600) % 24


def in_night_window(ts: int, window: tuple[int, int]) -> bool:
    start, end = window
    h = hour_of_day(ts)
    if start < end:
        return start <= h < end
    if start > end:
        return h >= start or h < end
    return False  # degenerate window selects nothing


def _validate_window(window: tuple[int, int]) -> None:
    start, end = window
    if not (0 <= start <= 23 and 0 <= end <= 23):
        raise ValueError(f"night window hours must be in [0, 23], got {start}:{end}")


def infer_base(
    events: Sequence[MobilityEvent],
    night_window: tuple[int, int] = DEFAULT_NIGHT_WINDOW,
) -> BaseAssignment:
    """Base assignment for one person's time-sorted event sequence.

    Support counts every event at the chosen base, not only the night events
    that selected it, so a person seen nowhere else always has confidence 1.
    """
    if not events:
        raise ValueError("no events for person")
    _validate_window(night_window)

    votes: Counter[str] = Counter(
        e.location_id for e in events if in_night_window(e.ts, night_window)
    )
    if not votes:
        votes = Counter(e.location_id for e in events)

    # Dwell tie-break: time until the person's next event, summed per location.
    dwell: dict[str, int] = defaultdict(int)
    for cur, nxt in zip(events, events[1:]):
        dwell[cur.location_id] += nxt.ts - cur.ts

    base = min(votes, key=lambda loc: (-votes[loc], -dwell[loc], loc))
    support = sum(1 for e in events if e.location_id == base)
    return BaseAssignment(events[0].person_id, base, support, support / len(events))


def infer_all_bases(
    batch: EventBatch,
    night_window: tuple[int, int] = DEFAULT_NIGHT_WINDOW,
) -> dict[str, BaseAssignment]:
    return {
        person: infer_base(events, night_window)
        for person, events in iter_person_events(batch)
    }


def load_base_overrides(path: Union[str, Path]) -> dict[str, str]:
    """Read a ``user,base_location`` override CSV."""
    overrides: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header.replace(" ", "") != "user,base_location":
            raise ValueError(f"bad override header: {header!r}")
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ValueError(f"bad override row at line {line_no}: {line!r}")
            overrides[parts[0].strip()] = parts[1].strip()
    return overrides


def assign_bases(
    batch: EventBatch,
    night_window: tuple[int, int] = DEFAULT_NIGHT_WINDOW,
    overrides: dict[str, str] | None = None,
) -> dict[str, BaseAssignment]:
    """Bases for every person in the batch, preferring overrides when given.

    Overridden bases are trusted even if the location never appears in the
    person's events; support and confidence are still measured against the
    observed sequence.
    """
    assignments: dict[str, BaseAssignment] = {}
    for person, events in iter_person_events(batch):
        if overrides and person in overrides:
            base = overrides[person]
            support = sum(1 for e in events if e.location_id == base)
            assignments[person] = BaseAssignment(person, base, support, support / len(events))
        else:
            assignments[person] = infer_base(events, night_window)
    return assignments
