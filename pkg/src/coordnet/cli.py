"""Command-line entry point: ``coordnet <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from coordnet.actions import ACTION_TYPES
from coordnet.errors import ConfigurationError, CoordnetError, CorruptInputError
from coordnet.windows import DEFAULT_WINDOWS

log = logging.getLogger("coordnet")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _channels(text: str) -> tuple[str, ...]:
    chans = tuple(c.strip() for c in text.split(",") if c.strip())
    bad = [c for c in chans if c not in ACTION_TYPES]
    if bad or not chans:
        raise argparse.ArgumentTypeError(f"channels must be drawn from {','.join(ACTION_TYPES)}")
    return chans


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON run configuration")
    p.add_argument("--posts", help="single-event post file (JSONL), instead of --config")
    p.add_argument("--profiles", help="profile file (JSONL) for --posts")
    p.add_argument("--event-id", default="event", help="event id for --posts (default: event)")
    p.add_argument("--start", help="event start (RFC 3339) for --posts")
    p.add_argument("--end", help="event end (RFC 3339) for --posts")


def _add_run(p: argparse.ArgumentParser, sweep_default=None) -> None:
    p.add_argument("--window", type=int, help="fixed window in seconds")
    p.add_argument(
        "--sweep",
        type=_int_list,
        nargs="?",
        const=DEFAULT_WINDOWS,
        default=sweep_default,
        help="select the window by sweeping these seconds (comma-separated; bare flag uses the default grid)",
    )
    p.add_argument("--sample-fraction", type=float, default=None, help="post sample used by the sweep (default 0.5)")
    p.add_argument("--seed", type=int, help="clustering seed (default 42)")
    p.add_argument("--channels", type=_channels, help="comma-separated subset of semantic,referral,social")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coordnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="validate input files and print load counts")
    _add_input(p)

    p = sub.add_parser("sweep", help="score candidate windows and report the best one")
    _add_input(p)
    _add_run(p, sweep_default=DEFAULT_WINDOWS)

    p = sub.add_parser("detect", help="build, threshold and cluster coordination graphs")
    _add_input(p)
    _add_run(p)

    p = sub.add_parser("analyze", help="detect, then add themes and user analysis")
    _add_input(p)
    _add_run(p)

    p = sub.add_parser("bench", help="run the pipeline on a synthetic planted campaign and score it")
    p.add_argument("--spec", default="default", help="campaign JSON file or bundled name (default, window_sweep)")
    p.add_argument("--campaign-seed", type=int, help="override the generator seed")
    _add_run(p)

    p = sub.add_parser("report", help="render a manifest as readable text")
    p.add_argument("manifest", help="manifest.json or a run directory")
    return parser


def _config(args, require_window: bool = True):
    from coordnet.pipeline import EventConfig, RunConfig

    if bool(args.config) == bool(args.posts):
        raise ConfigurationError("give exactly one of --config or --posts")
    if args.config:
        config = RunConfig.load(args.config)
    else:
        ev = EventConfig(args.event_id, args.posts, args.profiles, args.start, args.end)
        config = RunConfig(events=(ev,), window=300)
    over = {}
    for name in ("window", "sweep", "sample_fraction", "seed", "channels", "out"):
        value = getattr(args, name, None)
        if value is not None:
            over[name] = value
    if over.get("window") is not None and over.get("sweep") is not None:
        raise ConfigurationError("--window and --sweep are mutually exclusive")
    return config.with_overrides(**over)


def cmd_ingest_check(args) -> int:
    from coordnet.pipeline import load_event

    config = _config(args)
    report = {}
    for ev in config.events:
        ds = load_event(ev)
        report[ev.id] = {**ds.summary.as_dict(), "n_profiles": len(ds.profiles)}
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    from coordnet.pipeline import load_event
    from coordnet.windows import sweep_windows, write_sweep_csv, write_sweep_json

    config = _config(args)
    grid = config.sweep or DEFAULT_WINDOWS
    event = config.sweep_event or config.events[0].id
    ev = next(e for e in config.events if e.id == event)
    result = sweep_windows(
        load_event(ev),
        grid,
        seed=config.seed,
        sample_fraction=config.sample_fraction,
        action_types=config.channels,
        passes=config.threshold_passes,
    )
    for c in result.candidates:
        qs = " ".join(f"{t}={c.modularity[t]:.4f}" for t in config.channels)
        print(f"{c.window_seconds:>6d}s  avg={c.average:.4f}  {qs}")
    print(f"selected window: {result.selected_window}s")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out / "sweep.csv", result)
        write_sweep_json(out / "sweep.json", result)
    return 0


def _run(args, analyze: bool) -> int:
    from coordnet.pipeline import run_pipeline

    config = _config(args)
    manifest = run_pipeline(config, analyze=analyze)
    n = sum(len(e["graphs"]) for e in manifest["events"].values())
    print(f"{n} graphs at window {manifest['window']['selected']}s written to {config.out}")
    return 0


def cmd_bench(args) -> int:
    from coordnet.pipeline import bench_spec_path, run_bench
    from coordnet.synth import CampaignSpec

    path = Path(args.spec)
    if not path.exists():
        path = bench_spec_path(args.spec)
        if not path.exists():
            raise ConfigurationError(f"no campaign file {args.spec!r}")
    spec = CampaignSpec.from_json(path)
    if args.campaign_seed is not None:
        spec = spec.replace(seed=args.campaign_seed)
    if args.window is not None and args.sweep is not None:
        raise ConfigurationError("--window and --sweep are mutually exclusive")
    result = run_bench(
        spec,
        args.out or "coordnet-bench",
        window=args.window if args.window is not None else 300,
        sweep=args.sweep,
        sample_fraction=0.5 if args.sample_fraction is None else args.sample_fraction,
        seed=42 if args.seed is None else args.seed,
        channels=args.channels or ACTION_TYPES,
    )
    print(json.dumps(result["score"], indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    from coordnet.pipeline import MANIFEST
    from coordnet.report import render_file

    path = Path(args.manifest)
    if path.is_dir():
        path = path / MANIFEST
    print(render_file(path))
    return 0


COMMANDS = {
    "ingest-check": cmd_ingest_check,
    "sweep": cmd_sweep,
    "detect": lambda a: _run(a, analyze=False),
    "analyze": lambda a: _run(a, analyze=True),
    "bench": cmd_bench,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except CorruptInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for s in exc.samples:
            print(f"  {s}", file=sys.stderr)
        return 1
    except CoordnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
