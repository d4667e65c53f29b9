"""Seeded synthetic mobility-trace generator with exported ground truth.

Residents emit home-anchored events every night; a configurable fraction of
the population additionally makes daytime venue visits, weighted by
category, with optional rapid out-and-back oscillation pairs injected into
their home dwells and optional noise events sprinkled on top.

The generator writes the exact ingest JSONL schema so the pipeline runs on
its output unmodified, plus a ground-truth JSON with per-person homes, raw
edge counts, non-base dwell totals, the designated attraction-venue set and
the injected oscillation-pair counts.  Ground truth is derived by replaying
the emitted events, so it is self-consistent by construction: at zero noise
the pipeline must recover it exactly.

Scheduling guarantees that make exact recovery possible:

* each person's clock is strictly increasing (no duplicate or tied records),
* all non-home events fall in daytime hours, so the night-window modal
  location is always the true home,
* ordinary visits span more than an hour while injected oscillations
  complete within ``pingpong_span_s``, so a matching ping-pong window
  removes exactly the injected pairs and nothing else.

Generation is single-threaded and draws from one seeded RNG in a fixed
order: identical (config, seed) gives byte-identical output files.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

DEFAULT_T_START = 1456790400  # 2016-03-01T00:00:00Z
DAY_S = 86400

# Metro homes and a disjoint venue belt, so census grids built over home
# cells leave every attraction cell empty.
DEFAULT_HOMES_BOX = (-34.0, -33.5, 150.8, 151.3)
DEFAULT_VENUES_BOX = (-33.4, -32.9, 151.5, 152.0)


@dataclass
class SynthConfig:
    seed: int = 7
    n_persons: int = 100
    transient_fraction: float = 0.4
    venues: dict[str, int] = field(
        default_factory=lambda: {"Restaurant": 4, "MarketPlace": 3, "Pub": 2}
    )
    visit_weights: dict[str, float] = field(
        default_factory=lambda: {"Restaurant": 6.0, "MarketPlace": 3.0, "Pub": 1.0}
    )
    min_visits: int = 2                 # extra weighted visits per mover, low bound
    max_visits: int = 6                 # and high bound
    min_visitors_per_venue: int = 3     # coverage floor of distinct visitors
    pingpong_injection_rate: float = 0.0
    pingpong_span_s: int = 600          # oscillation completes within this span
    noise: float = 0.0
    n_days: int = 7
    t_start: int = DEFAULT_T_START
    homes_box: tuple[float, float, float, float] = DEFAULT_HOMES_BOX
    venues_box: tuple[float, float, float, float] = DEFAULT_VENUES_BOX

    @property
    def t_end(self) -> int:
        return self.t_start + self.n_days * DAY_S

    @property
    def n_transients(self) -> int:
        return int(round(self.transient_fraction * self.n_persons))

    def validate(self) -> None:
        if self.n_persons < 1:
            raise ValueError("n_persons must be >= 1")
        if not (0.0 <= self.transient_fraction <= 1.0):
            raise ValueError("transient_fraction must be in [0, 1]")
        if not (0.0 <= self.pingpong_injection_rate <= 1.0):
            raise ValueError("pingpong_injection_rate must be in [0, 1]")
        if not (0.0 <= self.noise <= 1.0):
            raise ValueError("noise must be in [0, 1]")
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if self.min_visits < 0 or self.max_visits < self.min_visits:
            raise ValueError("need 0 <= min_visits <= max_visits")
        if self.min_visitors_per_venue < 1:
            raise ValueError("min_visitors_per_venue must be >= 1")
        if not (300 <= self.pingpong_span_s <= 600):
            raise ValueError("pingpong_span_s must be in [300, 600]")
        for cat, count in self.venues.items():
            if count < 1:
                raise ValueError(f"venues[{cat!r}] must be >= 1")
            if self.visit_weights.get(cat, 1.0) < 0:
                raise ValueError(f"visit_weights[{cat!r}] must be >= 0")
        total_venues = sum(self.venues.values())
        if total_venues and self.n_transients:
            if self.n_transients < self.min_visitors_per_venue:
                raise ValueError(
                    "transient_fraction too low: need at least "
                    f"min_visitors_per_venue={self.min_visitors_per_venue} movers"
                )
            coverage = math.ceil(
                self.min_visitors_per_venue * total_venues / self.n_transients
            )
            if self.max_visits + coverage > 2 * self.n_days:
                raise ValueError(
                    "max_visits exceeds schedule capacity: at most two visits "
                    f"per day over n_days={self.n_days}"
                )


def _rfc3339(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _uniform6(rng: random.Random, lo: float, hi: float) -> float:
    return round(rng.uniform(lo, hi), 6)


class _PersonTrace:
    """Strictly increasing per-person event clock."""

    __slots__ = ("events", "cursor")

    def __init__(self) -> None:
        self.events: list[tuple[int, str, float, float, Optional[str]]] = []
        self.cursor = -1

    def emit(self, intended: int, loc: str, lat: float, lon: float,
             category: Optional[str]) -> int:
        ts = max(intended, self.cursor + 60)
        self.events.append((ts, loc, lat, lon, category))
        self.cursor = ts
        return ts


def _replay_truth(
    events: list[tuple[int, str, float, float, Optional[str]]],
    home: str,
    t_end: int,
) -> tuple[int, int, bool]:
    """(raw edge count, non-home dwell seconds, is transient) for one person,
    under the same ordering and dedup rules the ingest stage applies."""
    seq = sorted({(ts, loc) for ts, loc, _la, _lo, _c in events})
    edges = sum(1 for a, b in zip(seq, seq[1:]) if a[1] != b[1])
    away = any(loc != home for _ts, loc in seq)
    dwell = 0
    i = 0
    n = len(seq)
    while i < n:
        loc = seq[i][1]
        arrive = seq[i][0]
        j = i + 1
        while j < n and seq[j][1] == loc:
            j += 1
        if loc != home:
            dwell += (seq[j][0] if j < n else t_end) - arrive
        i = j
    return edges, dwell, away


def generate(config: SynthConfig) -> tuple[list[str], dict]:
    """Produce (JSONL event lines, ground-truth dict) for the config."""
    config.validate()
    rng = random.Random(config.seed)
    h_lat0, h_lat1, h_lon0, h_lon1 = config.homes_box
    v_lat0, v_lat1, v_lon0, v_lon1 = config.venues_box

    # Venue inventory, deterministic id order.
    venue_ids: list[str] = []
    venue_cat: dict[str, str] = {}
    venue_weight: dict[str, float] = {}
    coordinates: dict[str, tuple[float, float]] = {}
    for cat in sorted(config.venues):
        for i in range(config.venues[cat]):
            vid = f"{cat.lower()}_{i:03d}"
            venue_ids.append(vid)
            venue_cat[vid] = cat
            venue_weight[vid] = config.visit_weights.get(cat, 1.0)
            coordinates[vid] = (
                _uniform6(rng, v_lat0, v_lat1), _uniform6(rng, v_lon0, v_lon1)
            )

    persons = [f"u{i:05d}" for i in range(config.n_persons)]
    movers = sorted(rng.sample(persons, config.n_transients))
    mover_set = set(movers)

    homes: dict[str, str] = {}
    for idx, person in enumerate(persons):
        hid = f"h{idx:05d}"
        homes[person] = hid
        coordinates[hid] = (
            _uniform6(rng, h_lat0, h_lat1), _uniform6(rng, h_lon0, h_lon1)
        )

    # Visit plan: coverage floor first (round-robin so every venue draws
    # distinct movers), then weighted extras.
    visits: dict[str, list[str]] = {p: [] for p in movers}
    rr = 0
    for vid in venue_ids:
        for _ in range(min(config.min_visitors_per_venue, len(movers))):
            visits[movers[rr % len(movers)]].append(vid)
            rr += 1
    if movers and venue_ids:
        weights = [venue_weight[v] for v in venue_ids]
        if sum(weights) > 0:
            for person in movers:
                extra = rng.randint(config.min_visits, config.max_visits)
                visits[person].extend(rng.choices(venue_ids, weights=weights, k=extra))

    # Oscillation pairs land on movers only; one or two per selected person.
    pingpong_plan: dict[str, list[int]] = {}
    if config.pingpong_injection_rate > 0:
        for person in movers:
            if rng.random() < config.pingpong_injection_rate:
                pairs = min(rng.randint(1, 2), config.n_days)
                pingpong_plan[person] = sorted(rng.sample(range(config.n_days), pairs))

    all_rows: list[tuple[int, str, str, float, float, Optional[str]]] = []
    true_edges: dict[str, int] = {}
    true_dwell: dict[str, int] = {}
    transients: list[str] = []
    injected: dict[str, int] = {}

    span = config.pingpong_span_s
    for idx, person in enumerate(persons):
        home = homes[person]
        home_lat, home_lon = coordinates[home]
        trace = _PersonTrace()

        slots = [(d, s) for d in range(config.n_days) for s in (0, 1)]
        my_visits = visits.get(person, [])
        if my_visits:
            rng.shuffle(slots)
            agenda = dict(zip(sorted(slots[: len(my_visits)]), my_visits))
        else:
            agenda = {}
        pp_days = set(pingpong_plan.get(person, ()))

        for day in range(config.n_days):
            day0 = config.t_start + day * DAY_S
            trace.emit(day0 + 7 * 3600 + rng.randint(0, 1800),
                       home, home_lat, home_lon, None)
            for slot in (0, 1):
                vid = agenda.get((day, slot))
                if vid is None:
                    continue
                v_lat, v_lon = coordinates[vid]
                if slot == 0:
                    arrive = day0 + int(8.5 * 3600) + rng.randint(0, 7200)
                    dwell_s = rng.randint(3600, 9000)
                else:
                    arrive = day0 + 13 * 3600 + rng.randint(0, 9000)
                    dwell_s = rng.randint(3600, 7200)
                arrive = trace.emit(arrive, vid, v_lat, v_lon, venue_cat[vid])
                # Keep the last venue event well clear of the departure so a
                # same-venue revisit can never look like rapid oscillation.
                if dwell_s > 2400 and rng.random() < 0.3:
                    trace.emit(arrive + rng.randint(600, dwell_s - 1200),
                               vid, v_lat, v_lon, venue_cat[vid])
                trace.emit(arrive + dwell_s, home, home_lat, home_lon, None)
            if day in pp_days:
                pid = f"pp_{person}_{day}"
                if pid not in coordinates:
                    coordinates[pid] = (
                        round(home_lat + 0.001, 6), round(home_lon + 0.001, 6)
                    )
                p_lat, p_lon = coordinates[pid]
                anchor = trace.emit(day0 + int(17.5 * 3600) + rng.randint(0, 1800),
                                    home, home_lat, home_lon, None)
                out = trace.emit(anchor + rng.randint(60, span // 3),
                                 pid, p_lat, p_lon, None)
                trace.emit(out + rng.randint(60, span - (out - anchor) - 30),
                           home, home_lat, home_lon, None)
                injected[person] = injected.get(person, 0) + 1
            trace.emit(day0 + int(21.5 * 3600) + rng.randint(0, 8400),
                       home, home_lat, home_lon, None)

        if config.noise > 0 and rng.random() < config.noise and venue_ids:
            for _ in range(rng.randint(1, 3)):
                vid = rng.choice(venue_ids)
                v_lat, v_lon = coordinates[vid]
                ts = rng.randint(config.t_start, config.t_end - 1)
                trace.events.append((ts, vid, v_lat, v_lon, venue_cat[vid]))

        edges, dwell, away = _replay_truth(trace.events, home, config.t_end)
        true_edges[person] = edges
        true_dwell[person] = dwell
        if away:
            transients.append(person)
        all_rows.extend(
            (ts, person, loc, lat, lon, cat)
            for ts, loc, lat, lon, cat in trace.events
        )

    all_rows.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = []
    for ts, person, loc, lat, lon, cat in all_rows:
        rec = f'{{"user":"{person}","lat":{lat},"lon":{lon},"ts":"{_rfc3339(ts)}","venue":"{loc}"'
        if cat is not None:
            rec += f',"category":"{cat}"'
        lines.append(rec + "}")

    truth = {
        "homes": homes,
        "transients": transients,
        "true_edges_per_person": true_edges,
        "true_dwell_seconds_per_person": true_dwell,
        "attraction_venues": venue_ids,
        "injected_pingpong_pairs": injected,
        "coordinates": {loc: list(ll) for loc, ll in coordinates.items()},
        "t_start": config.t_start,
        "t_end": config.t_end,
        "config": asdict(config),
    }
    return lines, truth


def save_synth(
    config: SynthConfig,
    events_path: Union[str, Path],
    truth_path: Union[str, Path],
) -> dict:
    """Generate and write the event file and its ground truth; returns the truth."""
    lines, truth = generate(config)
    with open(events_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(line + "\n" for line in lines)
    with open(truth_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return truth
