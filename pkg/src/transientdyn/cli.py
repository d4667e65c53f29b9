"""Multi-command CLI: run the pipeline, generate synthetic traces, or
cross-check a small instance with the brute-force oracle.

    transient-dyn run    --input events.jsonl --out results/
    transient-dyn synth  --persons 200 --out-events e.jsonl --out-truth t.json
    transient-dyn oracle --input events.jsonl

Exit codes: 0 success, 1 fatal configuration or I/O error (partial outputs
are removed), 2 empty accepted input, 3 oracle size guard.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .bases import DEFAULT_NIGHT_WINDOW, assign_bases, load_base_overrides
from .ingest import parse_timestamp
from .oracle import OracleSizeError, brute_force_summary
from .pipeline import (
    OUTPUT_FILES,
    EmptyInputError,
    RunConfig,
    build_manifest,
    ingest_inputs,
    run_pipeline,
    write_outputs,
    write_rejected,
    _write_json,
)
from .synth import SynthConfig, save_synth


def _night_window(text: str) -> tuple[int, int]:
    """Parse START:END night hours, e.g. '21:06' for [21:00, 06:00)."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected HH:HH, got {text!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HH:HH, got {text!r}") from None
    if not (0 <= start <= 23 and 0 <= end <= 23):
        raise argparse.ArgumentTypeError("night window hours must be in [0, 23]")
    return start, end


def _hours(text: str) -> float:
    if text.strip().lower() in ("inf", "none"):
        return math.inf
    return float(text)


def _category_map(text: str, value_type):
    """Parse 'Restaurant:4,MarketPlace:3' style category maps."""
    out = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, raw = chunk.partition(":")
        if not name or not raw:
            raise argparse.ArgumentTypeError(f"expected Category:value, got {chunk!r}")
        try:
            out[name.strip()] = value_type(raw)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value in {chunk!r}") from None
    return out


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", nargs="+", required=True, metavar="PATH")
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p.add_argument("--beta", type=float, default=1.0,
                   help="movement profile constant in (0, 1] (default 1.0)")
    p.add_argument("--pingpong-window", type=float, default=15.0, metavar="MIN",
                   help="out-and-back suppression span in minutes; 0 disables")
    p.add_argument("--max-dwell-cap", type=_hours, default=12.0, metavar="H",
                   help="per-stay duration cap in hours; 'inf' disables")
    p.add_argument("--cell-size", type=float, default=0.05, metavar="DEG")
    p.add_argument("--night-window", type=_night_window, default=DEFAULT_NIGHT_WINDOW,
                   metavar="HH:HH", help="home inference hours, e.g. 21:06")
    p.add_argument("--bases", metavar="PATH", default=None,
                   help="optional user,base_location override CSV")
    p.add_argument("--t-start", default=None, metavar="TS",
                   help="observation window start (RFC3339 or epoch seconds)")
    p.add_argument("--t-end", default=None, metavar="TS")


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        inputs=list(args.input),
        format=args.format,
        beta=args.beta,
        pingpong_window_min=args.pingpong_window,
        max_dwell_cap_h=args.max_dwell_cap,
        cell_size=args.cell_size,
        night_window=args.night_window,
        min_unique_visitors=getattr(args, "min_unique_visitors", 3),
        absent_threshold=getattr(args, "absent_threshold", 0.0),
        census=getattr(args, "census", None),
        bases_path=args.bases,
        t_start=args.t_start,
        t_end=args.t_end,
        seed=getattr(args, "seed", None),
        threads=getattr(args, "threads", 0),
        note=getattr(args, "note", None),
    )


def _cleanup_outputs(outdir: Path) -> None:
    if not outdir.is_dir():
        return
    for name in OUTPUT_FILES:
        try:
            (outdir / name).unlink()
        except FileNotFoundError:
            pass


def cmd_run(args: argparse.Namespace) -> int:
    config = _run_config(args)
    outdir = Path(args.out)
    try:
        result = run_pipeline(config)
        write_outputs(result, outdir)
        _write_json(outdir / "run_manifest.json", build_manifest(config))
        return 0
    except EmptyInputError as err:
        outdir.mkdir(parents=True, exist_ok=True)
        write_rejected(outdir / "rejected.csv", err.batch)
        _write_json(outdir / "run_manifest.json",
                    build_manifest(config, {"empty_input": True}))
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as err:
        _cleanup_outputs(outdir)
        print(f"error: {err}", file=sys.stderr)
        return 1


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        min_visits, _, max_visits = args.visits.partition(":")
        config = SynthConfig(
            seed=args.seed,
            n_persons=args.persons,
            transient_fraction=args.transient_fraction,
            venues=args.venues,
            visit_weights=args.visit_weights,
            min_visits=int(min_visits),
            max_visits=int(max_visits or min_visits),
            min_visitors_per_venue=args.min_visitors_per_venue,
            pingpong_injection_rate=args.pingpong_rate,
            pingpong_span_s=args.pingpong_span,
            noise=args.noise,
            n_days=args.days,
            t_start=parse_timestamp(args.start),
        )
        save_synth(config, args.out_events, args.out_truth)
        return 0
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def cmd_oracle(args: argparse.Namespace) -> int:
    config = _run_config(args)
    try:
        batch = ingest_inputs(config)
        window = config.window()
        if window is None and batch.events:
            window = (batch.events[0].ts, max(e.ts for e in batch.events))
        t_end = window[1] if window else 0
        overrides = load_base_overrides(config.bases_path) if config.bases_path else None
        assignments = assign_bases(batch, config.night_window, overrides)
        summary = brute_force_summary(
            batch,
            {p: a.base_location for p, a in assignments.items()},
            config.beta,
            config.pingpong_window_s(),
            config.max_dwell_cap_s(),
            t_end,
        )
        text = json.dumps(summary, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
        else:
            print(text)
        return 0
    except OracleSizeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transient-dyn",
        description="Transient population dynamics from geolocated mobility events.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the full pipeline and write reports")
    _add_model_flags(run)
    run.add_argument("--min-unique-visitors", type=int, default=3, metavar="N")
    run.add_argument("--absent-threshold", type=float, default=0.0, metavar="F",
                     help="census population at or below this counts as missing")
    run.add_argument("--census", metavar="PATH", default=None,
                     help="baseline CSV with a #cell_size=<deg> header")
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--seed", type=int, default=None,
                     help="recorded in the manifest; the run itself is deterministic")
    run.add_argument("--threads", type=int, default=0,
                     help=f"parallel input parsing; 0 reads ${'{'}TRANSIENT_DYN_THREADS{'}'}")
    run.add_argument("--note", default=None,
                     help="free-form note recorded in the run manifest")
    run.set_defaults(func=cmd_run)

    synth = sub.add_parser("synth", help="generate synthetic traces with ground truth")
    synth.add_argument("--seed", type=int, default=7)
    synth.add_argument("--persons", type=int, default=100)
    synth.add_argument("--transient-fraction", type=float, default=0.4)
    synth.add_argument("--venues", type=lambda t: _category_map(t, int),
                       default=None, metavar="CAT:N,...")
    synth.add_argument("--visit-weights", type=lambda t: _category_map(t, float),
                       default=None, metavar="CAT:W,...")
    synth.add_argument("--visits", default="2:6", metavar="MIN:MAX",
                       help="extra weighted visits per mover (default 2:6)")
    synth.add_argument("--min-visitors-per-venue", type=int, default=3)
    synth.add_argument("--pingpong-rate", type=float, default=0.0)
    synth.add_argument("--pingpong-span", type=int, default=600, metavar="S")
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--days", type=int, default=7)
    synth.add_argument("--start", default="2016-03-01T00:00:00Z")
    synth.add_argument("--out-events", required=True, metavar="PATH")
    synth.add_argument("--out-truth", required=True, metavar="PATH")
    synth.set_defaults(func=cmd_synth)

    oracle = sub.add_parser(
        "oracle", help="brute-force summary of a small instance (exit 3 if too large)"
    )
    _add_model_flags(oracle)
    oracle.add_argument("--out", metavar="PATH", default=None,
                        help="write the summary JSON here instead of stdout")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "venues", "missing") is None:
        args.venues = {"Restaurant": 4, "MarketPlace": 3, "Pub": 2}
    if getattr(args, "visit_weights", "missing") is None:
        args.visit_weights = {"Restaurant": 6.0, "MarketPlace": 3.0, "Pub": 1.0}
    return args.func(args)


def script_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    script_entry()
