"""Independent brute-force recomputation of the population estimates.

A deliberately naive cross-check for the optimized pipeline: movements,
oscillation removal, per-person profiles, per-location arrivals and dwell
totals are all re-derived here with plain nested loops over materialized
per-destination terms, sharing no aggregation code with the model module.
Guarded to small instances; the point is trust, not speed.
"""

from __future__ import annotations

from typing import Mapping, Union

from .ingest import EventBatch, iter_person_events

MAX_PERSONS = 50
MAX_EVENTS_PER_PERSON = 200


class OracleSizeError(Exception):
    """Input exceeds the brute-force size guard."""


def check_size(batch: EventBatch) -> None:
    persons = {}
    for e in batch.events:
        persons[e.person_id] = persons.get(e.person_id, 0) + 1
    if len(persons) > MAX_PERSONS:
        raise OracleSizeError(
            f"{len(persons)} persons exceeds brute-force limit of {MAX_PERSONS}"
        )
    for person, count in persons.items():
        if count > MAX_EVENTS_PER_PERSON:
            raise OracleSizeError(
                f"person {person!r} has {count} events, limit {MAX_EVENTS_PER_PERSON}"
            )


def brute_force_summary(
    batch: EventBatch,
    bases: Mapping[str, str],
    beta: float,
    pingpong_window_s: int,
    max_dwell_cap_s: Union[int, float],
    t_end: int,
) -> dict:
    """Recompute every model quantity from first principles.

    Returns N, eta, gamma, W, theta_seconds plus the per-person movement
    profiles and per-location arrival counts used by equivalence checks.
    """
    check_size(batch)

    # (person, from, to, depart, arrive) movement tuples per person.
    moves: dict[str, list[tuple[str, str, int, int]]] = {}
    away: dict[str, bool] = {}
    for person, events in iter_person_events(batch):
        lst = []
        for i in range(len(events) - 1):
            a, b = events[i], events[i + 1]
            if a.location_id != b.location_id:
                lst.append((a.location_id, b.location_id, a.ts, b.ts))
        moves[person] = lst
        away[person] = any(e.location_id != bases[person] for e in events)

    # Oscillation removal: tombstone the adjacent out-and-back pairs in one
    # left-to-right sweep; survivors keep their original order.
    kept: dict[str, list[tuple[str, str, int, int]]] = {}
    for person, lst in moves.items():
        dead = [False] * len(lst)
        if pingpong_window_s > 0:
            i = 0
            while i < len(lst) - 1:
                frm_a, to_a, dep_a, _arr_a = lst[i]
                frm_b, to_b, _dep_b, arr_b = lst[i + 1]
                if frm_a == to_b and to_a == frm_b and arr_b - dep_a <= pingpong_window_s:
                    dead[i] = True
                    dead[i + 1] = True
                    i += 2
                else:
                    i += 1
        kept[person] = [m for m, d in zip(lst, dead) if not d]

    per_person_m: dict[str, float] = {}
    total_moves = 0
    for person in sorted(kept):
        count = 0
        for _move in kept[person]:
            count += 1
        per_person_m[person] = beta * count
        total_moves += count
    w = beta * total_moves

    # Per-destination arrival counts: one full pass over every person's
    # surviving movements for every candidate destination.
    destinations = sorted({to for lst in kept.values() for _f, to, _d, _a in lst})
    per_location_q: dict[str, int] = {}
    for dest in destinations:
        q = 0
        for person in sorted(kept):
            if bases[person] == dest:
                continue
            for _frm, to, _dep, _arr in kept[person]:
                if to == dest:
                    q += 1
        if q:
            per_location_q[dest] = q

    theta: Union[int, float] = 0
    theta_per_person: dict[str, Union[int, float]] = {}
    for person, events in iter_person_events(batch):
        base = bases[person]
        seconds: Union[int, float] = 0
        i = 0
        while i < len(events):
            loc = events[i].location_id
            start = events[i].ts
            j = i + 1
            while j < len(events) and events[j].location_id == loc:
                j += 1
            if loc != base:
                end = events[j].ts if j < len(events) else t_end
                seconds += min(end - start, max_dwell_cap_s)
            i = j
        if seconds:
            theta_per_person[person] = seconds
        theta += seconds

    transients = sorted(p for p in moves if kept[p] or away[p])
    locations = {e.location_id for e in batch.events}
    return {
        "N": len(moves),
        "eta": len(transients),
        "gamma": len(locations),
        "W": w,
        "theta_seconds": theta,
        "per_person_M": per_person_m,
        "per_location_Q": per_location_q,
        "theta_per_person": theta_per_person,
        "transients": transients,
    }
