"""``atsltd`` command line: calibrate, track, eval, render, synth, convert, benchmark.

Every subcommand writes into a staging directory next to ``--out`` and moves the
results into place only after all of them are written, so a failed run leaves
no partial output. Exit status: 0 on success, 1 on a data or runtime error,
2 on a usage error. ``ATSLTD_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from .bench import BenchmarkConfig, run_benchmark
from .boxes import BoundingBox
from .config import ConfigError, RunConfig, load_config
from .detect import DetectorConfig
from .dump import dump_frames, load_frames, render_results
from .eval import EvalConfig, evaluate_results, run_protocol
from .events import iter_event_chunks, parse_ground_truth, read_events, write_events, write_ground_truth
from .nzge import (
    DEFAULT_INTERVAL, CalibrationSet, calibrate_interval, frame_samples, interval_from_stats, save_calibration,
)
from .surface import AdaptiveConverter, convert_fixed_time_window
from .synth import generate, load_script, save_script, square_scene
from .track import TrackerConfig, read_results, track_stream, write_results

log = logging.getLogger("atsltd")


class UsageError(Exception):
    pass


def _defaults_text() -> str:
    t, d, iv = TrackerConfig(), DetectorConfig(), DEFAULT_INTERVAL
    return (
        "defaults: grid 45x60 cells of 4x4 px on a 240x180 sensor; "
        f"interval [{iv.alpha:.4f}, {iv.beta:.4f}] (omega {iv.omega}); "
        f"tau {t.tau}, lambda {t.lam}, mu {t.mu}; "
        f"max_boxes {d.max_boxes}, min_box_area {d.min_box_area:g}. "
        "Override any config key with --set section.key=value."
    )


# ---------------------------------------------------------------------------
# helpers


@contextlib.contextmanager
def staged_output(out: str | None):
    """Yield a scratch directory whose entries are moved into ``out`` on success."""
    if not out:
        raise UsageError("--out is required")
    target = Path(out)
    if target.exists() and not target.is_dir():
        raise UsageError(f"--out is not a directory: {target}")
    parent = target.resolve().parent
    parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{target.name}.staging-", dir=parent))
    try:
        yield stage
        target.mkdir(exist_ok=True)
        for entry in sorted(stage.iterdir()):
            dest = target / entry.name
            if dest.is_dir():
                shutil.rmtree(dest)
            os.replace(entry, dest)
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def _overrides(args) -> dict[str, str]:
    out = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    for flag, key in (("events", "io.events"), ("gt", "io.gt"), ("out", "io.out"),
                      ("seed", "run.seed"), ("workers", "run.workers")):
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = str(value)
    if getattr(args, "dump_frames", False):
        out["io.dump_frames"] = "true"
    return out


def _config(args) -> RunConfig:
    cfg = load_config(args.config, _overrides(args))
    # fail before any work when there is nowhere to write
    _require(cfg.out, "--out")
    return cfg


def _parse_box(text: str) -> BoundingBox:
    try:
        x, y, w, h = (float(v) for v in text.split(","))
        return BoundingBox(x, y, w, h)
    except ValueError as exc:
        raise UsageError(f"--box expects x,y,w,h with positive size, got {text!r} ({exc})") from None


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


# ---------------------------------------------------------------------------
# subcommands


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    omega = cfg.omega if args.omega is None else args.omega
    sources = [s for s in (args.stats, args.samples, args.frames, cfg.events) if s is not None]
    if len(sources) != 1:
        raise UsageError("give exactly one of --stats, --samples, --frames, --events")
    samples: list[float] = []
    if args.stats is not None:
        text = sys.stdin.read() if args.stats == "-" else args.stats
        try:
            n, mean, std = (float(v) for v in text.replace(",", " ").split())
        except ValueError:
            raise UsageError("--stats expects 'N MEAN STD'") from None
        if n != int(n):
            raise UsageError("--stats sample count must be an integer")
        interval = interval_from_stats(int(n), mean, std, omega, cfg.log_base)
    else:
        if args.samples is not None:
            text = sys.stdin.read() if args.samples == "-" else Path(args.samples).read_text(encoding="utf-8")
            try:
                samples = [float(v) for v in text.replace(",", " ").split()]
            except ValueError as exc:
                raise ConfigError(f"bad sample value: {exc}") from None
        elif args.frames is not None:
            samples = frame_samples(load_frames(args.frames), cfg.grid, cfg.log_base)
        else:
            events = read_events(cfg.events, cfg.geometry)
            window = int(round((args.window_ms or cfg.calibration_window_ms) * 1000))
            frames = convert_fixed_time_window(events, window, cfg.geometry, cfg.grid, cfg.log_base)
            samples = [f.nzge_at_cut for f in frames if f.nzge_at_cut is not None]
        interval = calibrate_interval(CalibrationSet(samples), omega, cfg.log_base)
    with staged_output(cfg.out) as stage:
        save_calibration(stage / "calibration.json", interval, cfg.grid, samples)
    print(f"alpha={interval.alpha:.6f} beta={interval.beta:.6f} omega={interval.omega}")
    return 0


def cmd_track(args) -> int:
    cfg = _config(args)
    events_path = _require(cfg.events, "--events")
    boxes = [_parse_box(b) for b in args.box or []]
    ids = None
    if not boxes:
        if cfg.gt is None:
            raise UsageError("give --box or --gt for the initial boxes")
        with open(cfg.gt, "rb") as fh:
            tracks = parse_ground_truth(fh)
        if not tracks:
            raise ConfigError("ground truth has no tracks")
        boxes = [tr.boxes[0] for tr in tracks]
        ids = [tr.object_id for tr in tracks]
    if cfg.interval_source == "calibrate":
        events = read_events(events_path, cfg.geometry)
        interval = cfg.resolve_interval(events)
        chunks = [events]
    else:
        interval = cfg.resolve_interval()
        chunks = iter_event_chunks(events_path, cfg.geometry)
    result = track_stream(chunks, boxes, cfg.pipeline(interval), cfg.workers, ids)
    with staged_output(cfg.out) as stage:
        write_results(result.states, stage / "results.csv")
        if cfg.dump_frames:
            dump_frames(result.frames, stage / "frames")
    log.info("tracked %d object(s) over %d frames", len(boxes), len(result.frames))
    return 0


def cmd_eval(args) -> int:
    cfg = _config(args)
    gt_path = _require(cfg.gt, "--gt")
    with open(gt_path, "rb") as fh:
        tracks = parse_ground_truth(fh)
    ecfg = EvalConfig(n_rep=args.n_rep, reinit_on_failure=not args.no_reinit)
    if args.results is not None:
        report = evaluate_results(read_results(args.results), tracks, ecfg)
    elif cfg.events is not None:
        events = read_events(cfg.events, cfg.geometry)
        report = run_protocol(events, tracks, ecfg, cfg.pipeline(cfg.resolve_interval(events)))
    else:
        raise UsageError("give --results or --events")
    with staged_output(cfg.out) as stage:
        report.write_json(stage / "report.json")
        report.write_frames_csv(stage / "frames.csv")
    print(f"AP={report.ap:.4f} AR={report.ar:.4f}")
    return 0


def cmd_render(args) -> int:
    cfg = _config(args)
    rows = read_results(_require(args.results, "--results"))
    frames = {}
    shape = (cfg.geometry.h, cfg.geometry.w)
    if args.frames is not None:
        frames = {f.index: f for f in load_frames(args.frames)}
        if frames:
            shape = next(iter(frames.values())).on.shape
    with staged_output(cfg.out) as stage:
        written = render_results(rows, frames, shape, stage, cfg.workers)
    log.info("rendered %d image(s)", len(written))
    return 0


def cmd_synth(args) -> int:
    cfg = _config(args)
    if args.script is not None:
        script = load_script(args.script)
        if args.seed is not None:
            script.seed = args.seed
    else:
        script = square_scene(speed=args.speed, size=args.size, duration=args.duration,
                              edge_density=args.edge_density, noise_rate=args.noise_rate,
                              seed=cfg.seed, geometry=cfg.geometry)
    events, tracks = generate(script)
    with staged_output(cfg.out) as stage:
        write_events(events, stage / "events.txt")
        write_ground_truth(tracks, stage / "gt.csv")
        save_script(script, stage / "script.json")
    print(f"{len(events)} events, {len(tracks)} object(s)")
    return 0


def cmd_convert(args) -> int:
    cfg = _config(args)
    events_path = _require(cfg.events, "--events")
    if args.mode == "ftw":
        window_ms = args.window_ms if args.window_ms is not None else 9.0
        if not window_ms > 0:
            raise UsageError("--window-ms must be positive")
        events = read_events(events_path, cfg.geometry)
        frames = convert_fixed_time_window(events, int(round(window_ms * 1000)), cfg.geometry, cfg.grid, cfg.log_base)
    else:
        if cfg.interval_source == "calibrate":
            events = read_events(events_path, cfg.geometry)
            interval, chunks = cfg.resolve_interval(events), [events]
        else:
            interval, chunks = cfg.resolve_interval(), iter_event_chunks(events_path, cfg.geometry)
        p = cfg.pipeline(interval)
        conv = AdaptiveConverter(p.geometry, p.grid, p.interval, p.cadence, p.max_open_us)
        frames = list(conv.convert(chunks, emit_partial=args.emit_partial))
    with staged_output(cfg.out) as stage:
        n = dump_frames(frames, stage)
    print(f"{n} frame(s)")
    return 0


def cmd_benchmark(args) -> int:
    bcfg = BenchmarkConfig(duration=args.duration, edge_density=args.edge_density, noise_rate=args.noise_rate,
                           repeats=args.repeats, seed=args.seed if args.seed is not None else 7)
    res = run_benchmark(bcfg)
    print(
        f"events={res.events} frames={res.frames} confirmations={res.confirmations} alpha={res.alpha:.4f}\n"
        f"loop: {res.loop_rate:.3e} events/s\n"
        f"end-to-end (parse + loop): {res.end_to_end_rate:.3e} events/s"
    )
    if args.out is not None:
        with staged_output(args.out) as stage:
            with open(stage / "benchmark.json", "w", encoding="utf-8") as fh:
                json.dump(res.to_dict(), fh, indent=2)
                fh.write("\n")
    if args.min_rate is not None and res.end_to_end_rate < args.min_rate:
        log.error("end-to-end rate %.3e is below %.3e", res.end_to_end_rate, args.min_rate)
        return 1
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    root = _Parser(prog="atsltd", description="Adaptive event-to-frame conversion and tracking.")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_text, common=True):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=_defaults_text(),
                           formatter_class=fmt)
        p.set_defaults(func=func)
        if common:
            p.add_argument("--config", metavar="PATH", help="key=value config file")
            p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--out", metavar="DIR", help="output directory")
        return p

    p = add("calibrate", cmd_calibrate, "Compute the NZGE confidence interval and write calibration.json.")
    p.add_argument("--stats", metavar="'N MEAN STD'", help="sample statistics, or - to read them from stdin")
    p.add_argument("--samples", metavar="PATH", help="file of NZGE values, or - for stdin")
    p.add_argument("--frames", metavar="DIR", help="frame dump directory to measure")
    p.add_argument("--events", metavar="PATH", help="event stream to cut into fixed windows")
    p.add_argument("--window-ms", type=float, help="fixed window for --events (config default 9)")
    p.add_argument("--omega", type=float, help="significance level (config default 0.05)")

    p = add("track", cmd_track, "Convert an event stream and track objects; writes results.csv.")
    p.add_argument("--events", metavar="PATH")
    p.add_argument("--gt", metavar="PATH", help="ground truth; first box of each object seeds it")
    p.add_argument("--box", action="append", metavar="X,Y,W,H", help="initial box (repeatable)")
    p.add_argument("--dump-frames", action="store_true", help="also write frames/ with PGM pairs")
    p.add_argument("--workers", type=int, help="threads for per-object tracking (default 1)")
    p.add_argument("--seed", type=int)

    p = add("eval", cmd_eval, "Score tracking against ground truth; writes report.json and frames.csv.")
    p.add_argument("--results", metavar="PATH", help="results.csv from track")
    p.add_argument("--events", metavar="PATH", help="run the tracking protocol on this stream instead")
    p.add_argument("--gt", metavar="PATH")
    p.add_argument("--n-rep", type=int, default=1, help="protocol repetitions")
    p.add_argument("--no-reinit", action="store_true", help="do not restart from ground truth after failures")

    p = add("render", cmd_render, "Draw result boxes over dumped frames as PPM images.")
    p.add_argument("--results", metavar="PATH")
    p.add_argument("--frames", metavar="DIR", help="frame dump directory (black background without it)")
    p.add_argument("--workers", type=int, help="threads for writing images (default 1)")

    p = add("synth", cmd_synth, "Generate a synthetic event stream with ground truth.")
    p.add_argument("--script", metavar="PATH", help="scene script JSON; default is one moving square")
    p.add_argument("--speed", type=float, default=60.0, help="square speed, px/s")
    p.add_argument("--size", type=float, default=30.0, help="square side, px")
    p.add_argument("--duration", type=float, default=1.0, help="seconds")
    p.add_argument("--edge-density", type=float, default=1.0, help="events per contour px per px moved")
    p.add_argument("--noise-rate", type=float, default=0.0, help="background events/s")
    p.add_argument("--seed", type=int)

    p = add("convert", cmd_convert, "Convert events to frame dumps (adaptive or fixed window).")
    p.add_argument("--events", metavar="PATH")
    p.add_argument("--mode", choices=("atsltd", "ftw"), default="atsltd")
    p.add_argument("--window-ms", type=float, help="ftw window (default 9)")
    p.add_argument("--emit-partial", action="store_true", help="atsltd: also emit the open frame at the end")

    p = add("benchmark", cmd_benchmark, "Measure conversion throughput on a synthetic 240x180 stream.",
            common=False)
    p.add_argument("--duration", type=float, default=BenchmarkConfig.duration,
                   help="stream seconds; objects cross the sensor once in this time")
    p.add_argument("--edge-density", type=float, default=BenchmarkConfig.edge_density,
                   help="events per contour px per px moved")
    p.add_argument("--noise-rate", type=float, default=BenchmarkConfig.noise_rate, help="background events/s")
    p.add_argument("--repeats", type=int, default=BenchmarkConfig.repeats, help="best-of-N timing")
    p.add_argument("--seed", type=int)
    p.add_argument("--min-rate", type=float, help="exit 1 if end-to-end events/s is lower")
    return root


def _setup_logging() -> None:
    level = os.environ.get("ATSLTD_LOG", "WARNING").upper()
    if level.isdigit():
        lvl = int(level)
    else:
        lvl = logging.getLevelName(level)
        if not isinstance(lvl, int):
            lvl = logging.WARNING
    logging.basicConfig(level=lvl, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"atsltd: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"atsltd: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
