"""Command-line entry points: analyze, serve, synth, eval, bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import ScenesiftError
from .evaluate import benchmark, format_benchmark, recall_at_k
from .gmm import GmmConfig
from .ingest import ImputePolicy, impute_missing, normalize, parse_frames, parse_manifest
from .report import parse_report, render_report, select_top_k
from .scoring import score_stream, serialize_series
from .store import SessionStore, _content_id
from .synth import AnomalySpec, generate_stream, parse_annotations, serialize_annotations
from .ingest import serialize_frames, serialize_manifest


def _cmd_analyze(args) -> int:
    manifest_text = Path(args.manifest).read_text()
    frames_text = Path(args.frames).read_text()
    layout = parse_manifest(manifest_text)
    session_id = args.session or _content_id(manifest_text, frames_text)
    stream = parse_frames(frames_text, layout, meta={"session": session_id})
    stream = impute_missing(stream, ImputePolicy(args.conf_threshold, args.max_gap))
    stream, _ = normalize(stream)

    config = GmmConfig(k=args.components, discount_r=args.discount,
                       covariance=args.covariance, seed=args.seed)
    trace = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        series = score_stream(stream, config, window_s=args.window,
                              window_agg=args.agg,
                              dim_normalized=not args.raw_attribution,
                              trace=trace)
    finally:
        if trace:
            trace.close()

    if args.video:
        series.config["video"] = args.video
    if args.series_out:
        Path(args.series_out).write_text(serialize_series(series))
    report = select_top_k(series, args.top_k)
    document = render_report(report)
    if args.out:
        Path(args.out).write_text(document)
    else:
        sys.stdout.write(document)
    return 0


def _cmd_serve(args) -> int:
    from .service import serve_forever

    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    port = args.port or int(os.environ.get("SCENESIFT_PORT", config.get("port", 8800)))
    data_dir = args.data or os.environ.get("SCENESIFT_DATA", config.get("data_dir", "./data"))
    static_dir = args.static or config.get("static_dir")
    if static_dir is None:
        default_static = Path("frontend/dist")
        static_dir = default_static if default_static.is_dir() else None

    store = SessionStore(data_dir)
    print(f"scenesift {__version__} serving on http://{args.host}:{port} (data: {data_dir})")
    serve_forever(store, args.host, port, static_dir)
    return 0


def _cmd_synth(args) -> int:
    spec_doc = json.loads(Path(args.spec).read_text())
    layout = parse_manifest(spec_doc["layout"])
    anomalies = [AnomalySpec(
        start_s=float(a["start_s"]), end_s=float(a["end_s"]),
        target_modality=a["modality"], kind=a.get("kind", "mean_shift"),
        magnitude=float(a.get("magnitude", 4.0)),
    ) for a in spec_doc.get("anomalies", [])]
    stream, annotations = generate_stream(
        layout, float(spec_doc["duration_s"]), args.seed, anomalies)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(serialize_manifest(layout))
    (out / "frames.jsonl").write_text(serialize_frames(stream))
    (out / "annotations.json").write_text(serialize_annotations(annotations))
    print(f"wrote {len(stream.frames)} frames and {len(annotations.intervals)} "
          f"annotations to {out}")
    return 0


def _cmd_eval(args) -> int:
    report = parse_report(Path(args.report).read_text())
    annotations = parse_annotations(Path(args.annotations).read_text())
    metrics = recall_at_k(report, annotations, min_overlap=args.overlap)
    doc = {
        "k": report.k,
        "recall_at_k": metrics.recall_at_k,
        "matched": metrics.matched,
        "total_annotations": metrics.total,
        "attribution_accuracy": metrics.attribution_accuracy,
    }
    print(json.dumps(doc, indent=2))
    return 0


def _cmd_bench(args) -> int:
    grid = [{"name": "standard"}]
    if args.grid:
        grid = json.loads(Path(args.grid).read_text())
    table = benchmark(grid, range(args.trials))
    sys.stdout.write(format_benchmark(table))
    if args.out:
        Path(args.out).write_text(json.dumps(table, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenesift",
        description="Surface the most anomalous scenes of a behavioral "
                    "recording for human review.")
    parser.add_argument("--version", action="version", version=f"scenesift {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="score a feature file and emit a scene report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--video", default=None, help="video path recorded in metadata only")
    p.add_argument("--window", type=float, default=15.0)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="report path (stdout when omitted)")
    p.add_argument("--series-out", default=None, help="also write the window series")
    p.add_argument("--trace", default=None, help="write per-frame score trace")
    p.add_argument("--session", default=None, help="session id (default: content hash)")
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--discount", type=float, default=0.005)
    p.add_argument("--covariance", choices=["diagonal", "full"], default="diagonal")
    p.add_argument("--agg", choices=["mean", "max"], default="mean")
    p.add_argument("--raw-attribution", action="store_true",
                   help="skip per-dimension normalization of contributions")
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("--max-gap", type=float, default=1.0)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data", default=None)
    p.add_argument("--static", default=None, help="directory of built UI assets")
    p.add_argument("--config", default=None, help="JSON config file")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("synth", help="generate a synthetic session with ground truth")
    p.add_argument("--spec", required=True, help="JSON spec: layout, duration_s, anomalies")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("eval", help="agreement metrics between a report and annotations")
    p.add_argument("--report", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--overlap", type=float, default=None,
                   help="minimum overlap fraction (default: any positive overlap)")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("bench", help="run the seeded synthetic benchmark")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--grid", default=None, help="JSON list of config overrides")
    p.add_argument("--out", default=None, help="write the machine-readable table")
    p.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenesiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
