from __future__ import annotations

import math

import pytest

from transientdyn.bases import assign_bases
from transientdyn.gridcompare import (
    census_diff,
    flagged_cells_geojson,
    grid_aggregate,
    load_census,
)
from transientdyn.ingest import canonicalize, cell_of, parse_events
from transientdyn.model import ModelParams, MovementEdge, build_profiles, cumulative_estimate
from transientdyn.synth import SynthConfig, generate
from util import HOUR, T0


def arrival(person, lat, lon, i=0):
    return MovementEdge(person, "a", "b", T0 + i, T0 + i + 1, lat, lon)


def params(beta=1.0):
    return ModelParams(beta=beta, t_start=T0, t_end=T0 + 30 * 24 * HOUR)


def test_counts_in_one_cell():
    edges = [arrival(f"u{i % 2}", -33.86, 151.21, i) for i in range(4)]
    grid = grid_aggregate(edges, params(), 0.05)
    (cell,) = grid.values()
    assert cell.arrivals == 4
    assert cell.transient_w == 4.0
    assert cell.transient_persons == 2
    assert (cell.row, cell.col) == cell_of(-33.86, 151.21, 0.05)


def test_boundary_lower_edge_inclusive():
    grid = grid_aggregate([arrival("u", 0.1, 0.05)], params(), 0.05)
    assert list(grid) == [(2, 1)]


def test_beta_applied_once_to_counts():
    edges = [arrival("u", -33.86, 151.21, i) for i in range(3)]
    grid = grid_aggregate(edges, params(beta=0.8), 0.05)
    (cell,) = grid.values()
    assert cell.arrivals == 3
    assert cell.transient_w == 0.8 * 3


def test_cell_conservation_against_global_w():
    cfg = SynthConfig(seed=83, n_persons=40, transient_fraction=0.5, n_days=5,
                      min_visits=1, max_visits=3, pingpong_injection_rate=0.4)
    lines, truth = generate(cfg)
    batch = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
    bases = {p: a.base_location for p, a in assign_bases(batch).items()}
    p = ModelParams(beta=0.5, t_start=truth["t_start"], t_end=truth["t_end"])
    profiles, edges = build_profiles(batch, bases, p)
    grid = grid_aggregate(edges, p, 0.05)
    assert sum(c.arrivals for c in grid.values()) == len(edges)
    w = cumulative_estimate(profiles.values())
    assert sum(c.transient_w for c in grid.values()) == pytest.approx(w, rel=1e-12)


def test_census_round_trip(tmp_path):
    path = tmp_path / "census.csv"
    path.write_text("#cell_size=0.05\nrow,col,population\n-678,3024,1200.0\n0,0,5\n")
    cell_size, cells = load_census(path)
    assert cell_size == 0.05
    assert cells == {(-678, 3024): 1200.0, (0, 0): 5.0}


@pytest.mark.parametrize(
    "text,match",
    [
        ("row,col,population\n", "#cell_size"),
        ("#cell_size=zero\nrow,col,population\n", "bad census cell_size"),
        ("#cell_size=0.05\nrow,col\n", "bad census header"),
        ("#cell_size=0.05\nrow,col,population\n1,2\n", "bad census row"),
        ("#cell_size=0.05\nrow,col,population\n1,2,-3\n", "negative census"),
    ],
)
def test_census_file_errors(tmp_path, text, match):
    path = tmp_path / "census.csv"
    path.write_text(text)
    with pytest.raises(ValueError, match=match):
        load_census(path)


def test_diff_flags_missing_census_cells():
    grid = grid_aggregate([arrival("u", -33.86, 151.21)], params(), 0.05)
    key = cell_of(-33.86, 151.21, 0.05)
    flagged = census_diff(grid, {}, 0.05)
    assert [(d.row, d.col, d.flagged) for d in flagged] == [(key[0], key[1], True)]

    populated = census_diff(grid, {key: 10000.0}, 0.05)
    assert not populated[0].flagged


def test_diff_includes_census_only_cells():
    rows = census_diff({}, {(3, 4): 250.0}, 0.05)
    (row,) = rows
    assert row.transient_w == 0.0
    assert row.census_pop == 250.0
    assert not row.flagged


def test_cell_size_mismatch_fatal():
    with pytest.raises(ValueError, match="does not match"):
        census_diff({}, {}, 0.05, census_cell_size=0.1)
    # identical sizes pass
    census_diff({}, {}, 0.05, census_cell_size=0.05)


def test_absent_threshold_monotone():
    grid = grid_aggregate(
        [arrival("u", 0.01, 0.01), arrival("v", 0.06, 0.01), arrival("w", 0.11, 0.01)],
        params(), 0.05,
    )
    census = {(0, 0): 5.0, (1, 0): 50.0}
    previous: set = set()
    for threshold in (0.0, 5.0, 50.0, 500.0):
        flagged = {
            (d.row, d.col)
            for d in census_diff(grid, census, 0.05, absent_threshold=threshold)
            if d.flagged
        }
        assert previous <= flagged  # raising the threshold never unflags
        assert (2, 0) in flagged    # census-absent cell stays flagged throughout
        previous = flagged


def test_flagged_cells_geojson_polygons():
    grid = grid_aggregate([arrival("u", 0.07, 0.12)], params(), 0.05)
    diff = census_diff(grid, {}, 0.05)
    geo = flagged_cells_geojson(diff, 0.05)
    (feature,) = geo["features"]
    ring = feature["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1]
    assert sorted({point[0] for point in ring}) == pytest.approx([0.1, 0.15])
    assert sorted({point[1] for point in ring}) == pytest.approx([0.05, 0.1])


def test_outback_scenario_flags_exactly_the_attraction_cells(tmp_path):
    cfg = SynthConfig(seed=89, n_persons=30, transient_fraction=0.5, n_days=5,
                      min_visits=1, max_visits=3)
    lines, truth = generate(cfg)
    batch = canonicalize(parse_events("\n".join(lines), "jsonl"), 0.05)
    bases = {p: a.base_location for p, a in assign_bases(batch).items()}
    p = ModelParams(t_start=truth["t_start"], t_end=truth["t_end"])
    _, edges = build_profiles(batch, bases, p)

    # census covers home cells only; venue cells are deliberately empty
    census = {}
    for person, home in truth["homes"].items():
        lat, lon = truth["coordinates"][home]
        census[cell_of(lat, lon, 0.05)] = 1000.0
    grid = grid_aggregate(edges, p, 0.05)
    flagged = {(d.row, d.col) for d in census_diff(grid, census, 0.05) if d.flagged}

    venue_cells = {
        cell_of(*truth["coordinates"][v], 0.05) for v in truth["attraction_venues"]
    }
    visited_venue_cells = {
        key for key in venue_cells
        if any(cell_of(e.arrive_lat, e.arrive_lon, 0.05) == key for e in edges)
    }
    assert flagged == visited_venue_cells
    assert flagged  # scenario is non-degenerate
