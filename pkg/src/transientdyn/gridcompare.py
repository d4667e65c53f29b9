"""Grid aggregation of transient estimates and census comparison.

Suppressed-edge arrivals are binned onto a floor-quantized lat/lon grid;
the per-cell estimate is beta times the arrival count, so summing the cells
recovers the global estimate exactly.  Against a census baseline on the same
grid, cells with transient activity but no (or negligible) census population
are flagged: the interesting regions a static census misses.

Census exchange format: a ``#cell_size=<degrees>`` header line, then CSV
``row,col,population``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Sequence, Union

from .ingest import cell_of
from .model import ModelParams, MovementEdge


@dataclass
class GridCell:
    row: int
    col: int
    arrivals: int            # integer count; multiply by beta once for W
    transient_w: float
    transient_persons: int


class DiffRow(NamedTuple):
    row: int
    col: int
    transient_w: float
    transient_persons: int
    census_pop: Optional[float]
    flagged: bool


def grid_aggregate(
    edges: Sequence[MovementEdge],
    params: ModelParams,
    cell_size: float,
) -> dict[tuple[int, int], GridCell]:
    """Bin suppressed-edge arrivals into grid cells.

    The lower cell edge is inclusive (floor convention).  Counting is a
    commutative fold, so any edge order gives identical cells.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    counts: dict[tuple[int, int], int] = {}
    persons: dict[tuple[int, int], set[str]] = {}
    for e in edges:
        key = cell_of(e.arrive_lat, e.arrive_lon, cell_size)
        counts[key] = counts.get(key, 0) + 1
        persons.setdefault(key, set()).add(e.person_id)
    return {
        key: GridCell(key[0], key[1], n, params.beta * n, len(persons[key]))
        for key, n in counts.items()
    }


def load_census(path: Union[str, Path]) -> tuple[float, dict[tuple[int, int], float]]:
    """Read a census baseline file; returns (cell_size, cell -> population)."""
    cells: dict[tuple[int, int], float] = {}
    cell_size: Optional[float] = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("#cell_size="):
            raise ValueError(f"census file must start with '#cell_size=<degrees>', got {first!r}")
        try:
            cell_size = float(first.split("=", 1)[1])
        except ValueError:
            raise ValueError(f"bad census cell_size: {first!r}") from None
        if cell_size <= 0:
            raise ValueError("census cell_size must be > 0")
        header = fh.readline().strip()
        if header.replace(" ", "") != "row,col,population":
            raise ValueError(f"bad census header: {header!r}")
        for line_no, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"bad census row at line {line_no}: {line!r}")
            try:
                row, col = int(parts[0]), int(parts[1])
                pop = float(parts[2])
            except ValueError:
                raise ValueError(f"bad census row at line {line_no}: {line!r}") from None
            if pop < 0:
                raise ValueError(f"negative census population at line {line_no}")
            cells[(row, col)] = pop
    return cell_size, cells


def census_diff(
    grid: Mapping[tuple[int, int], GridCell],
    census: Mapping[tuple[int, int], float],
    grid_cell_size: float,
    census_cell_size: Optional[float] = None,
    absent_threshold: float = 0.0,
) -> list[DiffRow]:
    """Full per-cell diff of transient estimates against the census.

    A cell is flagged when it has transient activity but its census
    population is absent or at most ``absent_threshold``.  Census-only cells
    appear with a zero estimate so the table is the union of both maps.
    Mismatched grid resolutions are a configuration error.
    """
    if absent_threshold < 0:
        raise ValueError("absent_threshold must be >= 0")
    if census_cell_size is not None and not math.isclose(
        census_cell_size, grid_cell_size, rel_tol=1e-9, abs_tol=0.0
    ):
        raise ValueError(
            f"census cell_size {census_cell_size} does not match grid cell_size {grid_cell_size}"
        )
    rows: list[DiffRow] = []
    for key in sorted(set(grid) | set(census)):
        cell = grid.get(key)
        w = cell.transient_w if cell else 0.0
        persons = cell.transient_persons if cell else 0
        pop = census.get(key)
        flagged = w > 0 and (pop is None or pop <= absent_threshold)
        rows.append(DiffRow(key[0], key[1], w, persons, pop, flagged))
    return rows


def flagged_cells_geojson(diff: Sequence[DiffRow], cell_size: float) -> dict:
    """FeatureCollection of flagged cells as grid-square polygons."""
    features = []
    for row in diff:
        if not row.flagged:
            continue
        west = row.col * cell_size
        south = row.row * cell_size
        east = west + cell_size
        north = south + cell_size
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[
                        [west, south], [east, south], [east, north],
                        [west, north], [west, south],
                    ]],
                },
                "properties": {
                    "row": row.row,
                    "col": row.col,
                    "transient_W": row.transient_w,
                    "transient_persons": row.transient_persons,
                    "census_pop": row.census_pop,
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}
