"""Transient-location discovery and category ranking.

A location counts as a transient destination when it draws more distinct
visitors than it has residents, and at least ``min_unique_visitors`` of
them.  Flagged locations are ranked by arrival volume and rolled up by
category so location types can be compared by transient traffic.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence

from .bases import BaseAssignment
from .ingest import EventBatch
from .model import LocationArrivals

DEFAULT_MIN_UNIQUE_VISITORS = 3
UNCATEGORIZED = "uncategorized"


@dataclass
class LocationStats:
    location_id: str
    q: int
    unique_visitors: int
    resident_count: int
    category: Optional[str]
    is_transient_location: bool
    inbound_total: int = 0
    mean_lat: float = 0.0
    mean_lon: float = 0.0


class CategoryRank(NamedTuple):
    rank: int
    category: str
    total_q: int
    location_count: int


def discover_transient_locations(
    arrivals: Mapping[str, LocationArrivals],
    batch: EventBatch,
    bases: Mapping[str, BaseAssignment],
    min_unique_visitors: int = DEFAULT_MIN_UNIQUE_VISITORS,
) -> list[LocationStats]:
    """Stats for every observed location, ranked by (Q, unique visitors, id).

    Covers the full location set, including places with no inbound arrivals,
    so the dump doubles as the location inventory.  Category is the modal
    category string seen at the location (ties to the smaller name); the
    mean event coordinates give each location a plottable point.
    """
    if min_unique_visitors < 1:
        raise ValueError("min_unique_visitors must be >= 1")

    residents: Counter[str] = Counter(a.base_location for a in bases.values())
    lat_sum: dict[str, float] = defaultdict(float)
    lon_sum: dict[str, float] = defaultdict(float)
    seen: Counter[str] = Counter()
    cat_votes: dict[str, Counter[str]] = defaultdict(Counter)
    for e in batch.events:
        loc = e.location_id
        seen[loc] += 1
        lat_sum[loc] += e.lat
        lon_sum[loc] += e.lon
        if e.category:
            cat_votes[loc][e.category] += 1

    stats: list[LocationStats] = []
    for loc in seen:
        agg = arrivals.get(loc, LocationArrivals(0, 0, 0))
        votes = cat_votes.get(loc)
        category = min(votes, key=lambda c: (-votes[c], c)) if votes else None
        resident_count = residents.get(loc, 0)
        flagged = (
            agg.unique_visitors >= min_unique_visitors
            and agg.unique_visitors > resident_count
        )
        stats.append(
            LocationStats(
                location_id=loc,
                q=agg.q,
                unique_visitors=agg.unique_visitors,
                resident_count=resident_count,
                category=category,
                is_transient_location=flagged,
                inbound_total=agg.inbound_total,
                mean_lat=lat_sum[loc] / seen[loc],
                mean_lon=lon_sum[loc] / seen[loc],
            )
        )
    stats.sort(key=lambda s: (-s.q, -s.unique_visitors, s.location_id))
    return stats


def rank_categories(flagged: Sequence[LocationStats]) -> list[CategoryRank]:
    """Per-category arrival totals over the flagged locations, best first."""
    totals: Counter[str] = Counter()
    counts: Counter[str] = Counter()
    for s in flagged:
        if not s.is_transient_location:
            continue
        cat = s.category or UNCATEGORIZED
        totals[cat] += s.q
        counts[cat] += 1
    ordered = sorted(totals, key=lambda c: (-totals[c], c))
    return [
        CategoryRank(rank, cat, totals[cat], counts[cat])
        for rank, cat in enumerate(ordered, start=1)
    ]


def flagged_locations_geojson(stats: Sequence[LocationStats]) -> dict:
    """FeatureCollection of flagged locations as points at their mean coords."""
    features = []
    for s in stats:
        if not s.is_transient_location:
            continue
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [s.mean_lon, s.mean_lat],
                },
                "properties": {
                    "location": s.location_id,
                    "Q": s.q,
                    "unique_visitors": s.unique_visitors,
                    "resident_count": s.resident_count,
                    "category": s.category,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}
