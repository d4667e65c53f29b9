"""Transient population dynamics from geolocated mobility events.

Ingests check-in style event streams, anchors each person to a base
location, quantifies movement between locations (with ping-pong
suppression), discovers and ranks the destinations that draw transient
visitors, estimates activity duration, and grids the results against a
census-style baseline.
"""

__version__ = "0.1.0"

from .bases import BaseAssignment, assign_bases, infer_base, load_base_overrides
from .discovery import (
    CategoryRank,
    LocationStats,
    discover_transient_locations,
    rank_categories,
)
from .gridcompare import GridCell, census_diff, grid_aggregate, load_census
from .ingest import (
    EventBatch,
    MobilityEvent,
    canonicalize,
    cell_of,
    cell_token,
    merge_batches,
    parse_events,
)
from .model import (
    ModelParams,
    MovementEdge,
    PersonProfile,
    build_profiles,
    classify_transient,
    cumulative_estimate,
    location_agglomeration,
    movement_edges,
    movement_profile,
    summarize_population,
    suppress_ping_pong,
    transient_duration,
)
from .pipeline import RunConfig, RunResult, run_pipeline, write_outputs
from .synth import SynthConfig, generate, save_synth

__all__ = [
    "BaseAssignment",
    "CategoryRank",
    "EventBatch",
    "GridCell",
    "LocationStats",
    "MobilityEvent",
    "ModelParams",
    "MovementEdge",
    "PersonProfile",
    "RunConfig",
    "RunResult",
    "SynthConfig",
    "assign_bases",
    "build_profiles",
    "canonicalize",
    "cell_of",
    "cell_token",
    "census_diff",
    "classify_transient",
    "cumulative_estimate",
    "discover_transient_locations",
    "generate",
    "grid_aggregate",
    "infer_base",
    "load_base_overrides",
    "load_census",
    "location_agglomeration",
    "merge_batches",
    "movement_edges",
    "movement_profile",
    "parse_events",
    "rank_categories",
    "run_pipeline",
    "save_synth",
    "summarize_population",
    "suppress_ping_pong",
    "transient_duration",
    "write_outputs",
]
