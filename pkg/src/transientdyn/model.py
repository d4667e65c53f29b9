"""Transient population model core.

Quantities computed here, all over one observation window:

* per-event transient flags and the per-person transient predicate
  (movement between locations, or presence away from the base),
* movement edges: directed transitions between consecutive events at
  distinct locations, with a structural ping-pong filter that drops
  adjacent out-and-back pairs completing within a short span,
* the per-person movement profile M = beta * (suppressed edge count),
* the population-level cumulative estimate W = beta * (total suppressed
  edges), summed over all persons,
* per-location agglomeration Q: inbound suppressed-edge arrivals at each
  destination, excluding arrivals at the arriving person's own base, plus
  the unique-visitor count behind them,
* total activity duration: dwell time at non-base locations, each interval
  capped to bound data-gap inflation.

beta is a single global constant in (0, 1]; the structural filter does the
oscillation removal, beta remains the scalar knob.  All folds are ordered
(person id, then time) so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from .ingest import EventBatch, MobilityEvent, iter_person_events

DEFAULT_BETA = 1.0
DEFAULT_PINGPONG_WINDOW_S = 15 * 60
DEFAULT_MAX_DWELL_CAP_S = 12 * 3600


class MovementEdge(NamedTuple):
    """A directed transition between two distinct locations by one person."""

    person_id: str
    from_location: str
    to_location: str
    depart_ts: int       # last event at the origin
    arrive_ts: int       # first event at the destination
    arrive_lat: float
    arrive_lon: float


@dataclass(frozen=True)
class ModelParams:
    beta: float = DEFAULT_BETA
    pingpong_window_s: int = DEFAULT_PINGPONG_WINDOW_S
    max_dwell_cap_s: float = DEFAULT_MAX_DWELL_CAP_S   # math.inf disables the cap
    t_start: int = 0
    t_end: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.pingpong_window_s < 0:
            raise ValueError("pingpong_window_s must be >= 0")
        if not self.max_dwell_cap_s > 0:
            raise ValueError("max_dwell_cap_s must be > 0")
        if self.t_end < self.t_start:
            raise ValueError("observation window is empty (t_end < t_start)")


@dataclass
class PersonProfile:
    person_id: str
    base_location: str
    raw_edge_count: int
    suppressed_edge_count: int
    movement_profile_M: float
    is_transient: bool
    dwell_intervals: list[tuple[str, int, int]] = field(default_factory=list)
    beta: float = DEFAULT_BETA


class LocationArrivals(NamedTuple):
    """Per-destination arrival tallies over suppressed edges."""

    inbound_total: int    # all arrivals, before the own-base exclusion
    q: int                # arrivals excluding people arriving at their own base
    unique_visitors: int  # distinct persons behind q


def movement_edges(events: Sequence[MobilityEvent]) -> list[MovementEdge]:
    """One edge per consecutive event pair at distinct locations.

    Consecutive events at the same location extend a stay and produce no
    edge, so the departure timestamp is always the last event at the origin.
    """
    edges: list[MovementEdge] = []
    for cur, nxt in zip(events, events[1:]):
        if cur.location_id != nxt.location_id:
            edges.append(
                MovementEdge(
                    cur.person_id, cur.location_id, nxt.location_id,
                    cur.ts, nxt.ts, nxt.lat, nxt.lon,
                )
            )
    return edges


def suppress_ping_pong(edges: Sequence[MovementEdge], window_s: int) -> list[MovementEdge]:
    """Drop adjacent out-and-back edge pairs completing within ``window_s``.

    A pair (A->B, B->A) is removed when the return arrival is at most
    ``window_s`` seconds after the outbound departure.  The scan is a single
    left-to-right pass; removed pairs do not bring their neighbours together
    for re-pairing.  A zero window is the identity.
    """
    if window_s <= 0:
        return list(edges)
    kept: list[MovementEdge] = []
    i = 0
    n = len(edges)
    while i < n:
        if i + 1 < n:
            a, b = edges[i], edges[i + 1]
            if (
                a.from_location == b.to_location
                and a.to_location == b.from_location
                and b.arrive_ts - a.depart_ts <= window_s
            ):
                i += 2
                continue
        kept.append(edges[i])
        i += 1
    return kept


def classify_transient(
    events: Sequence[MobilityEvent], base: str
) -> tuple[list[int], bool]:
    """Per-event transient flags plus the person-level verdict.

    An event is flagged when it is an endpoint of a movement between
    distinct locations, or when it simply sits at a location other than the
    person's base.  The person is transient iff any flag is set.
    """
    n = len(events)
    flags = [0] * n
    for i, e in enumerate(events):
        if e.location_id != base:
            flags[i] = 1
    for i in range(n - 1):
        if events[i].location_id != events[i + 1].location_id:
            flags[i] = 1
            flags[i + 1] = 1
    return flags, any(flags)


def dwell_intervals(
    events: Sequence[MobilityEvent], base: str, t_end: int
) -> list[tuple[str, int, int]]:
    """Stays at non-base locations as (location, arrival, departure) spans.

    A stay runs from the first event of a run at the location to the next
    event at a different location; a trailing stay with no subsequent event
    is closed at the window end.
    """
    intervals: list[tuple[str, int, int]] = []
    n = len(events)
    i = 0
    while i < n:
        loc = events[i].location_id
        arrive = events[i].ts
        j = i + 1
        while j < n and events[j].location_id == loc:
            j += 1
        if loc != base:
            end = events[j].ts if j < n else t_end
            intervals.append((loc, arrive, end))
        i = j
    return intervals


def movement_profile(edges: Sequence[MovementEdge], beta: float) -> float:
    """Movement pattern profile: beta times the suppressed edge count."""
    return beta * len(edges)


def build_profile(
    person: str,
    events: Sequence[MobilityEvent],
    base: str,
    params: ModelParams,
) -> tuple[PersonProfile, list[MovementEdge]]:
    """Profile one person; also returns their suppressed edges for reuse."""
    raw = movement_edges(events)
    kept = suppress_ping_pong(raw, params.pingpong_window_s)
    away = any(e.location_id != base for e in events)
    profile = PersonProfile(
        person_id=person,
        base_location=base,
        raw_edge_count=len(raw),
        suppressed_edge_count=len(kept),
        movement_profile_M=movement_profile(kept, params.beta),
        is_transient=bool(kept) or away,
        dwell_intervals=dwell_intervals(events, base, params.t_end),
        beta=params.beta,
    )
    return profile, kept


def build_profiles(
    batch: EventBatch,
    bases: Mapping[str, str],
    params: ModelParams,
) -> tuple[dict[str, PersonProfile], list[MovementEdge]]:
    """Profiles for every person in the batch plus the pooled suppressed edges.

    Edges are pooled in person order, per-person in time order, which fixes
    the reduction order for every downstream fold.
    """
    profiles: dict[str, PersonProfile] = {}
    edges: list[MovementEdge] = []
    for person, events in iter_person_events(batch):
        if person not in bases:
            raise ValueError(f"no base assignment for person {person!r}")
        profile, kept = build_profile(person, events, bases[person], params)
        profiles[person] = profile
        edges.extend(kept)
    return profiles, edges


def cumulative_estimate(profiles: Iterable[PersonProfile]) -> float:
    """Population-level estimate W: beta times the total suppressed edges.

    The beta factor is applied once to the exact integer total, so W equals
    beta * sum(edge counts) bit-for-bit, and equals the sum of the per-person
    profiles up to rounding.
    """
    total = 0
    beta: Optional[float] = None
    for p in profiles:
        if beta is None:
            beta = p.beta
        elif p.beta != beta:
            raise ValueError("inconsistent params")
        total += p.suppressed_edge_count
    if beta is None:
        return 0.0
    return beta * total


def location_agglomeration(
    edges: Sequence[MovementEdge],
    bases: Mapping[str, str],
) -> dict[str, LocationArrivals]:
    """Arrival tallies per destination over the suppressed edges.

    Q counts every inbound edge whose destination is not the arriving
    person's own base; unique visitors are the distinct persons behind those
    arrivals.  ``inbound_total`` keeps the pre-exclusion count so flow
    conservation against the edge total stays checkable.
    """
    inbound: dict[str, int] = {}
    q: dict[str, int] = {}
    visitors: dict[str, set[str]] = {}
    for e in edges:
        dest = e.to_location
        inbound[dest] = inbound.get(dest, 0) + 1
        if bases.get(e.person_id) != dest:
            q[dest] = q.get(dest, 0) + 1
            visitors.setdefault(dest, set()).add(e.person_id)
    return {
        dest: LocationArrivals(
            inbound[dest], q.get(dest, 0), len(visitors.get(dest, ()))
        )
        for dest in inbound
    }


def transient_duration(
    profiles: Mapping[str, PersonProfile],
    params: ModelParams,
) -> tuple[Union[int, float], dict[str, Union[int, float]]]:
    """Total non-base dwell time plus the per-person breakdown.

    Each interval contributes min(duration, cap); trailing intervals were
    already closed at the window end when the profiles were built.
    """
    cap = params.max_dwell_cap_s
    per_person: dict[str, Union[int, float]] = {}
    total: Union[int, float] = 0
    for person in sorted(profiles):
        seconds: Union[int, float] = 0
        for _loc, start, end in profiles[person].dwell_intervals:
            seconds += min(end - start, cap)
        if seconds:
            per_person[person] = seconds
        total += seconds
    return total, per_person


def summarize_population(
    batch: EventBatch, profiles: Mapping[str, PersonProfile]
) -> tuple[int, int, int]:
    """(N observed persons, transient count, distinct locations)."""
    n = len(profiles)
    eta = sum(1 for p in profiles.values() if p.is_transient)
    gamma = len({e.location_id for e in batch.events})
    return n, eta, gamma
