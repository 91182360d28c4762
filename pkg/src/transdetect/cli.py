"""Command-line entry point: ``transdetect <subcommand> ...``.

Exit codes: 0 success, 1 fatal benchmark failure, 2 benchmark with some
failed videos, 64 usage error, 65 invalid input data, 66 missing input,
70 detector or internal failure, 74 I/O error, 75 detector timeout.
Every error prints one JSON line on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import Config, load_config
from .errors import PreconditionError, TransDetectError

EX_USAGE = 64
EX_NOINPUT = 66
EX_SOFTWARE = 70
EX_IOERR = 74

log = logging.getLogger("transdetect")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        msg = record.getMessage()
        try:
            payload = json.loads(msg)
            if not isinstance(payload, dict):
                payload = {"message": payload}
        except (json.JSONDecodeError, TypeError):
            payload = {"message": msg}
        return json.dumps({"level": record.levelname.lower(), "logger": record.name, **payload})


def _setup_logging(trace: bool):
    root = logging.getLogger("transdetect")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if trace else logging.Formatter("%(levelname)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if trace else logging.WARNING)
    root.propagate = False


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "exit": code, "message": message}) + "\n")
    return code


def _common(parser):
    parser.add_argument("--config", help="JSON config file overlaid on built-in defaults")
    parser.add_argument("--trace", action="store_true", help="JSON-lines diagnostics on stderr")
    parser.add_argument("--jobs", type=int, help="parallel windows")


def _window_args(parser):
    parser.add_argument("--window", type=float, help="window length in seconds (default 10)")
    parser.add_argument("--stride", type=float, help="window stride in seconds (default 9)")
    parser.add_argument("--nms-iou", type=float, dest="nms_iou", help="NMS IoU threshold (default 0.5)")


def _detector_args(parser, with_labels: bool = True):
    parser.add_argument("--detector", default="content",
                        choices=["content", "hist", "adaptive", "threshold", "oracle", "external"])
    parser.add_argument("--cmd", help="external detector command; receives the window clip path")
    parser.add_argument("--timeout", type=float, help="external detector timeout in seconds")
    parser.add_argument("--threshold", type=float, help="heuristic detector threshold")
    parser.add_argument("--bins", type=int, help="histogram bins for the hist detector")
    parser.add_argument("--min-gap", type=float, dest="min_gap", help="merge detections closer than this (s)")
    if with_labels:
        parser.add_argument("--labels", help="label JSON (oracle detector)")
    parser.add_argument("--jitter", type=float, default=0.0, help="oracle boundary jitter (s)")
    parser.add_argument("--drop", type=float, default=0.0, help="oracle drop probability")
    parser.add_argument("--seed", type=int, help="seed for stochastic detectors (required for oracle)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="transdetect", description="Shot transition detection toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="splice shots with random transitions and write labels")
    _common(p)
    p.add_argument("--shots", help="directory of .stdv shots (or PPM sub-directories)")
    p.add_argument("--procedural", type=int, help="generate this many procedural shots instead of --shots")
    p.add_argument("--shot-seconds", type=float, default=8.0, dest="shot_seconds")
    p.add_argument("--size", default="80x48", help="procedural shot size WxH")
    p.add_argument("--fps", default="25", help="fps for PPM directories and procedural shots")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--cap", type=float, help="upper bound on transition duration (default 3.0)")
    p.add_argument("--mix", help="stratified duration mix CUT,NORMAL,LONG (default: uniform durations)")
    p.add_argument("--out", required=True, help="output .stdv path")
    p.add_argument("--labels", help="label JSON path (default: <out>.json)")

    p = sub.add_parser("flow", help="flow visualization clip, or a 6-channel fused clip")
    _common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fuse", action="store_true", help="write color+flow as a 6-channel STDVF601 file")
    p.add_argument("--block", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--pair-stride", type=int, default=1, dest="pair_stride",
                   help="compare each frame with the one this many frames earlier")

    p = sub.add_parser("detect", help="run a detector through the sliding-window pipeline")
    _common(p)
    _detector_args(p)
    _window_args(p)
    p.add_argument("--clip", required=True)
    p.add_argument("--out", help="write predictions JSON here instead of stdout")

    p = sub.add_parser("eval", help="score predictions against labels")
    _common(p)
    p.add_argument("--preds", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--fps", help="frame rate, e.g. 25 or 30000/1001 (default: from labels)")
    p.add_argument("--duration", type=float, help="video duration (default: from labels)")
    p.add_argument("--tau", help="tolerance grid start:stop:step or comma list (default 0:0.5:0.1)")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--name", default=None, help="video name for the CSV rows")

    p = sub.add_parser("bench", help="benchmark a detector over manifests")
    _common(p)
    _detector_args(p, with_labels=False)
    _window_args(p)
    p.add_argument("--manifest", nargs="+", required=True)
    p.add_argument("--tau")
    p.add_argument("--out", help="CSV report path (default stdout)")
    p.add_argument("--table", help="also write the markdown tables here")

    p = sub.add_parser("report", help="render report CSVs as markdown tables")
    _common(p)
    p.add_argument("csv", nargs="+")
    p.add_argument("--all-taus", action="store_true", dest="all_taus")
    return parser


def resolve_config(args) -> Config:
    """Overlay the config file and then explicit flags on the built-in defaults."""
    config = load_config(getattr(args, "config", None))
    flags = {}
    for name in ("window", "stride", "nms_iou", "jobs"):
        if getattr(args, name, None) is not None:
            flags[name] = getattr(args, name)
    if getattr(args, "cap", None) is not None:
        flags["synth_cap"] = args.cap
    if getattr(args, "bins", None) is not None:
        flags["hist_bins"] = args.bins
    if getattr(args, "min_gap", None) is not None:
        flags["min_gap_s"] = args.min_gap
    if getattr(args, "timeout", None) is not None:
        flags["external_timeout_s"] = args.timeout
    if getattr(args, "block", None) is not None:
        flags["flow_block"] = args.block
    if getattr(args, "radius", None) is not None:
        flags["flow_radius"] = args.radius
    if getattr(args, "tau", None):
        from .metrics import parse_tau_grid

        flags["tau_grid"] = parse_tau_grid(args.tau)
    if getattr(args, "threshold", None) is not None and getattr(args, "detector", None):
        flags["thresholds"] = {args.detector: args.threshold}
    try:
        return config.overlay(flags).validate()
    except PreconditionError as exc:
        raise UsageError(str(exc)) from exc


def _detector_options(args, config: Config) -> dict:
    opts = {}
    if args.detector in config.thresholds:
        opts["threshold"] = config.thresholds[args.detector]
        opts["bins"] = config.hist_bins
        opts["min_gap_s"] = config.min_gap_s
    elif args.detector == "oracle":
        if args.seed is None:
            raise UsageError("the oracle detector needs --seed")
        opts.update(jitter_s=args.jitter, drop_prob=args.drop, seed=args.seed)
    elif args.detector == "external":
        if not args.cmd:
            raise UsageError("the external detector needs --cmd")
        opts.update(command=args.cmd, timeout_s=config.external_timeout_s)
    return opts


def _write_text(text: str, path=None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args, config: Config) -> int:
    from .segments import write_label_file
    from .synth import procedural_shots, sample_plan, synthesize
    from .video import VideoClip, import_ppm_sequence, load_rawvid, save_rawvid

    if args.procedural:
        try:
            w, h = (int(x) for x in args.size.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad --size {args.size!r}, expected WxH")
        shots = procedural_shots(args.procedural, w, h, args.shot_seconds, args.fps, seed=args.seed)
    elif args.shots:
        root = Path(args.shots)
        if not root.is_dir():
            raise FileNotFoundError(f"shots directory not found: {root}")
        shots: list[VideoClip] = []
        for item in sorted(root.iterdir()):
            if item.suffix == ".stdv":
                shots.append(load_rawvid(item))
            elif item.is_dir():
                shots.append(import_ppm_sequence(item, args.fps))
    else:
        raise UsageError("synth needs --shots or --procedural")
    mix = None
    if args.mix:
        try:
            mix = tuple(float(x) for x in args.mix.split(","))
        except ValueError:
            raise UsageError(f"bad --mix {args.mix!r}")
        if len(mix) != 3 or min(mix) < 0 or sum(mix) <= 0:
            raise UsageError("--mix needs three non-negative weights CUT,NORMAL,LONG")
    plan = sample_plan(shots, args.seed, config.synth_cap, mix=mix)
    clip, labels = synthesize(plan)
    out = Path(args.out)
    save_rawvid(clip, out)
    label_path = Path(args.labels) if args.labels else out.with_suffix(".json")
    write_label_file(label_path, out.name, clip.fps, clip.duration, labels)
    log.info(json.dumps({"event": "synth", "out": str(out), "labels": str(label_path),
                         "frames": len(clip), "transitions": len(labels)}))
    return 0


def cmd_flow(args, config: Config) -> int:
    from .flow import flow_clip, fuse_clip
    from .video import load_rawvid, save_fused_rawvid, save_rawvid

    clip = load_rawvid(args.input)
    viz = flow_clip(clip, config.flow_block, config.flow_radius, args.pair_stride)
    if args.fuse:
        save_fused_rawvid(fuse_clip(clip, viz), clip.fps, args.out)
    else:
        save_rawvid(viz, args.out)
    return 0


def cmd_detect(args, config: Config) -> int:
    from .detectors import make_detector
    from .segments import load_label_file
    from .video import load_rawvid
    from .windowing import run_pipeline

    clip = load_rawvid(args.clip)
    opts = _detector_options(args, config)
    if args.detector == "oracle":
        if not args.labels:
            raise UsageError("the oracle detector needs --labels")
        opts["labels"] = load_label_file(args.labels)["transitions"]
        opts["duration"] = float(clip.duration)
    detector = make_detector(args.detector, **opts)
    result = run_pipeline(clip, detector, config.window, config.stride, config.nms_iou, jobs=config.jobs)
    for entry in result.trace:
        log.debug(json.dumps({"event": "window", **entry}))
    doc = {
        "video": Path(args.clip).name,
        "fps": [clip.fps.numerator, clip.fps.denominator],
        "duration_s": float(clip.duration),
        "transitions": [s.to_json() for s in result.segments],
        "wall_time_s": result.wall_time_s,
        "io_time_s": result.io_time_s,
    }
    _write_text(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_eval(args, config: Config) -> int:
    from .detectors import DetectionResult
    from .metrics import evaluate
    from .report import report_rows, write_csv
    from .segments import load_label_file
    from .video import as_fps

    labels = load_label_file(args.labels)
    preds = load_label_file(args.preds)
    fps = as_fps(args.fps) if args.fps else labels["fps"]
    if fps is None:
        raise UsageError("--fps is required when the label file has no fps")
    duration = args.duration or labels["duration_s"] or preds["duration_s"]
    if not duration:
        raise UsageError("--duration is required when the label file has no duration_s")

    detections = DetectionResult(preds["transitions"], preds["wall_time_s"] or 0.0)
    report = evaluate(detections, labels["transitions"], fps, duration, config.tau_grid)
    name = args.name or labels["video"] or Path(args.labels).stem
    _write_text(write_csv(report_rows(report, name)), args.out)
    return 0


def cmd_bench(args, config: Config) -> int:
    from .bench import load_manifest, run_benchmark
    from .report import category_markdown, markdown_table, report_rows, write_csv

    manifests = [load_manifest(m) for m in args.manifest]
    opts = _detector_options(args, config)
    result = run_benchmark(
        manifests, args.detector, config.window, config.stride, config.nms_iou,
        config.tau_grid, detector_options=opts, jobs=config.jobs,
    )
    if result.micro is None:
        for f in result.failures:
            sys.stderr.write(json.dumps({"error": "VideoFailed", "video": f.video, "message": f.error}) + "\n")
        return _fail("BenchmarkFailed", "every video failed", 1)
    rows = []
    for o in result.outcomes:
        if o.report is not None:
            rows.extend(report_rows(o.report, o.video))
    rows.extend(report_rows(result.micro, "ALL(micro)"))
    if len(result.per_dataset) > 1:
        for name, rep in result.per_dataset.items():
            rows.extend(report_rows(rep, f"dataset:{name}"))
        macro = result.macro()
        macro["video"] = "ALL(macro)"
        rows.append(macro)
    _write_text(write_csv(rows), args.out)
    if args.table:
        text = markdown_table([r for r in rows if str(r["video"]).startswith(("ALL", "dataset:"))])
        text += "\n" + category_markdown(result.micro)
        Path(args.table).write_text(text, encoding="utf-8")
    for f in result.failures:
        sys.stderr.write(json.dumps({"error": "VideoFailed", "video": f.video, "message": f.error}) + "\n")
    if result.failures:
        summary = {"videos": len(result.outcomes), "failed": len(result.failures), "exit": result.exit_status}
        sys.stderr.write(json.dumps({"summary": summary}) + "\n")
    return result.exit_status


def cmd_report(args, config: Config) -> int:
    from .report import markdown_table, read_csv

    rows = []
    for path in args.csv:
        rows.extend(read_csv(Path(path).read_text(encoding="utf-8")))
    sys.stdout.write(markdown_table(rows, mean_only=not args.all_taus))
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "flow": cmd_flow,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "report": cmd_report,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail("UsageError", str(exc), EX_USAGE)
    if args.command is None:
        parser.print_help(sys.stderr)
        return _fail("UsageError", "no subcommand given", EX_USAGE)
    _setup_logging(getattr(args, "trace", False))
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        return _fail("UsageError", str(exc), EX_USAGE)
    except TransDetectError as exc:
        return _fail(type(exc).__name__, str(exc), exc.exit_code)
    except FileNotFoundError as exc:
        return _fail("FileNotFoundError", str(exc), EX_NOINPUT)
    except OSError as exc:
        return _fail(type(exc).__name__, str(exc), EX_IOERR)


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
