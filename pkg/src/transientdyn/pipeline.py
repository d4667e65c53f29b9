"""End-to-end run orchestration: ingest -> bases -> model -> discovery -> grid.

Owns the run configuration, the deterministic output files and the run
manifest.  All data outputs are plain CSV/GeoJSON/JSON; identical inputs and
configuration produce byte-identical data files (the manifest carries the
only timestamp).  Each CSV opens with a ``#beta=<value>`` comment so the
scaling constant travels with every report.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Union

from . import __version__
from .bases import BaseAssignment, assign_bases, load_base_overrides
from .discovery import (
    CategoryRank,
    LocationStats,
    discover_transient_locations,
    flagged_locations_geojson,
    rank_categories,
)
from .gridcompare import (
    DiffRow,
    GridCell,
    census_diff,
    flagged_cells_geojson,
    grid_aggregate,
    load_census,
)
from .ingest import EventBatch, canonicalize, merge_batches, parse_events, parse_timestamp
from .model import (
    ModelParams,
    MovementEdge,
    PersonProfile,
    build_profiles,
    cumulative_estimate,
    location_agglomeration,
    summarize_population,
    transient_duration,
)

THREADS_ENV = "TRANSIENT_DYN_THREADS"

OUTPUT_FILES = (
    "profiles.csv",
    "locations.csv",
    "categories.csv",
    "grid_diff.csv",
    "rejected.csv",
    "flagged_locations.geojson",
    "flagged_cells.geojson",
    "summary.json",
    "run_manifest.json",
)


class EmptyInputError(Exception):
    """No events survived ingest; carries the batch for the reject report."""

    def __init__(self, batch: EventBatch):
        super().__init__("no accepted events in input")
        self.batch = batch


@dataclass
class RunConfig:
    inputs: list[str]
    format: str = "jsonl"
    beta: float = 1.0
    pingpong_window_min: float = 15.0
    max_dwell_cap_h: float = 12.0          # math.inf disables the cap
    cell_size: float = 0.05
    night_window: tuple[int, int] = (21, 6)
    min_unique_visitors: int = 3
    absent_threshold: float = 0.0
    census: Optional[str] = None
    bases_path: Optional[str] = None
    t_start: Optional[Union[int, str]] = None   # epoch seconds or RFC3339
    t_end: Optional[Union[int, str]] = None
    seed: Optional[int] = None
    threads: int = 0                        # 0: use env var, else 1
    note: Optional[str] = None

    def pingpong_window_s(self) -> int:
        return int(round(self.pingpong_window_min * 60))

    def max_dwell_cap_s(self) -> Union[int, float]:
        if math.isinf(self.max_dwell_cap_h):
            return math.inf
        return int(round(self.max_dwell_cap_h * 3600))

    def window(self) -> Optional[tuple[int, int]]:
        if self.t_start is None and self.t_end is None:
            return None
        if self.t_start is None or self.t_end is None:
            raise ValueError("t_start and t_end must be given together")
        return parse_timestamp(self.t_start), parse_timestamp(self.t_end)

    def effective_threads(self) -> int:
        n = self.threads
        if n <= 0:
            raw = os.environ.get(THREADS_ENV, "1")
            try:
                n = int(raw)
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
        return max(1, min(n, os.cpu_count() or 1))


@dataclass
class RunResult:
    config: RunConfig
    batch: EventBatch
    bases: dict[str, BaseAssignment]
    params: ModelParams
    profiles: dict[str, PersonProfile]
    edges: list[MovementEdge]
    stats: list[LocationStats]
    ranks: list[CategoryRank]
    grid: dict[tuple[int, int], GridCell]
    diff: list[DiffRow]
    theta_per_person: dict[str, Union[int, float]]
    summary: dict = field(default_factory=dict)


def _parse_one(args: tuple[str, str, Optional[tuple[int, int]]]) -> EventBatch:
    path, fmt, window = args
    with open(path, "rb") as fh:
        return parse_events(fh, fmt, window)


def ingest_inputs(config: RunConfig) -> EventBatch:
    """Parse every input file and merge into one canonical batch.

    Files parse independently, optionally on a worker pool bounded by
    TRANSIENT_DYN_THREADS; the merge re-sorts, so chunking never changes
    the canonical result.
    """
    window = config.window()
    jobs = [(path, config.format, window) for path in config.inputs]
    workers = config.effective_threads()
    if workers > 1 and len(jobs) > 1:
        from multiprocessing import Pool

        with Pool(min(workers, len(jobs))) as pool:
            batches = pool.map(_parse_one, jobs)
    else:
        batches = [_parse_one(job) for job in jobs]
    merged = batches[0] if len(batches) == 1 else merge_batches(batches)
    return canonicalize(merged, config.cell_size)


def run_pipeline(config: RunConfig) -> RunResult:
    """Execute the full model over the configured inputs."""
    if config.format not in ("jsonl", "csv"):
        raise ValueError(f"unknown format: {config.format!r}")
    if config.cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    if config.min_unique_visitors < 1:
        raise ValueError("min_unique_visitors must be >= 1")
    if config.absent_threshold < 0:
        raise ValueError("absent_threshold must be >= 0")

    census_map: dict[tuple[int, int], float] = {}
    census_cell_size: Optional[float] = None
    if config.census:
        census_cell_size, census_map = load_census(config.census)

    batch = ingest_inputs(config)
    if not batch.events:
        raise EmptyInputError(batch)

    window = config.window()
    if window is None:
        window = (batch.events[0].ts, max(e.ts for e in batch.events))
    params = ModelParams(
        beta=config.beta,
        pingpong_window_s=config.pingpong_window_s(),
        max_dwell_cap_s=config.max_dwell_cap_s(),
        t_start=window[0],
        t_end=window[1],
    )

    overrides = load_base_overrides(config.bases_path) if config.bases_path else None
    assignments = assign_bases(batch, config.night_window, overrides)
    base_map = {p: a.base_location for p, a in assignments.items()}

    profiles, edges = build_profiles(batch, base_map, params)
    w = cumulative_estimate(profiles.values())
    arrivals = location_agglomeration(edges, base_map)
    stats = discover_transient_locations(
        arrivals, batch, assignments, config.min_unique_visitors
    )
    ranks = rank_categories(stats)
    theta, theta_per_person = transient_duration(profiles, params)
    grid = grid_aggregate(edges, params, config.cell_size)
    diff = census_diff(
        grid, census_map, config.cell_size, census_cell_size, config.absent_threshold
    )
    n, eta, gamma = summarize_population(batch, profiles)

    summary = {
        "N": n,
        "eta": eta,
        "gamma": gamma,
        "W": w,
        "theta_seconds": theta,
        "accepted_events": batch.accepted_count,
        "rejected_records": len(batch.rejected),
        "total_suppressed_edges": len(edges),
        "flagged_locations": sum(1 for s in stats if s.is_transient_location),
        "flagged_cells": sum(1 for d in diff if d.flagged),
        "beta": config.beta,
        "pingpong_window_s": params.pingpong_window_s,
        "max_dwell_cap_s": _json_safe(params.max_dwell_cap_s),
        "t_start": params.t_start,
        "t_end": params.t_end,
        "cell_size": config.cell_size,
    }
    return RunResult(
        config, batch, assignments, params, profiles, edges, stats, ranks,
        grid, diff, theta_per_person, summary,
    )


def _json_safe(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def build_manifest(config: RunConfig, extra: Optional[dict] = None) -> dict:
    """Effective configuration echo; the only output with a timestamp."""
    manifest = {k: _json_safe(v) for k, v in asdict(config).items()}
    manifest["night_window"] = list(config.night_window)
    manifest["effective_threads"] = config.effective_threads()
    manifest["pingpong_window_s"] = config.pingpong_window_s()
    manifest["max_dwell_cap_s"] = _json_safe(config.max_dwell_cap_s())
    manifest["version"] = __version__
    manifest["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    if extra:
        manifest.update(extra)
    return manifest


def _write_csv(path: Path, beta: float, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"#beta={beta!r}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rejected(path: Path, batch: EventBatch) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["line", "reason"])
        writer.writerows(batch.rejected)


def write_outputs(result: RunResult, outdir: Union[str, Path]) -> list[Path]:
    """Write every report; returns the created paths (manifest excluded)."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    beta = result.config.beta
    written: list[Path] = []

    path = out / "profiles.csv"
    _write_csv(
        path, beta,
        ["user", "base", "raw_edges", "suppressed_edges", "M", "is_transient"],
        (
            (
                p.person_id, p.base_location, p.raw_edge_count,
                p.suppressed_edge_count, repr(p.movement_profile_M),
                int(p.is_transient),
            )
            for p in (result.profiles[k] for k in sorted(result.profiles))
        ),
    )
    written.append(path)

    path = out / "locations.csv"
    _write_csv(
        path, beta,
        ["location", "Q", "unique_visitors", "resident_count", "category", "is_transient"],
        (
            (
                s.location_id, s.q, s.unique_visitors, s.resident_count,
                s.category or "", int(s.is_transient_location),
            )
            for s in result.stats
        ),
    )
    written.append(path)

    path = out / "categories.csv"
    _write_csv(
        path, beta,
        ["rank", "category", "total_Q", "location_count"],
        ((r.rank, r.category, r.total_q, r.location_count) for r in result.ranks),
    )
    written.append(path)

    path = out / "grid_diff.csv"
    _write_csv(
        path, beta,
        ["row", "col", "transient_W", "transient_persons", "census_pop", "flagged"],
        (
            (
                d.row, d.col, repr(d.transient_w), d.transient_persons,
                "" if d.census_pop is None else repr(d.census_pop), int(d.flagged),
            )
            for d in result.diff
        ),
    )
    written.append(path)

    path = out / "rejected.csv"
    write_rejected(path, result.batch)
    written.append(path)

    path = out / "flagged_locations.geojson"
    _write_json(path, flagged_locations_geojson(result.stats))
    written.append(path)

    path = out / "flagged_cells.geojson"
    _write_json(path, flagged_cells_geojson(result.diff, result.config.cell_size))
    written.append(path)

    path = out / "summary.json"
    _write_json(path, result.summary)
    written.append(path)

    return written
