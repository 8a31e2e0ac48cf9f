"""Command line interface: replay, calibration, benchmark, service, config dump."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import (
    ConfigError,
    PipelineConfig,
    dump_config,
    load_calibration,
    load_config,
    save_calibration,
)
from .gestures import CalibrationError
from .imaging import PpmFormatError, iter_frame_dir
from .pipeline import bench, render_event_log, run_calibration, run_pipeline
from .service import serve


def _config_from(path: Optional[str]) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tapemouse",
        description="Virtual mouse engine driven by two colored finger tapes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="replay a frame directory into an event log")
    run_p.add_argument("--frames", required=True, help="directory of numbered .ppm frames")
    run_p.add_argument("--config", help="key=value config file")
    run_p.add_argument("--calib", required=True, help="calibration file (D, D_prime)")
    run_p.add_argument("--out", required=True, help="event log output path")

    cal_p = sub.add_parser("calibrate", help="derive D and D' from two pose directories")
    cal_p.add_argument("--open", dest="open_dir", required=True, help="open-hand frames")
    cal_p.add_argument("--pinch", dest="pinch_dir", required=True, help="pinched frames")
    cal_p.add_argument("--config", help="key=value config file")
    cal_p.add_argument("--out", required=True, help="calibration output path")

    bench_p = sub.add_parser("bench", help="measure pipeline throughput over a frame directory")
    bench_p.add_argument("--frames", required=True)
    bench_p.add_argument("--config", help="key=value config file")

    serve_p = sub.add_parser("serve", help="run the WebSocket frame-stream service")
    serve_p.add_argument("--port", type=int, required=True)
    serve_p.add_argument("--config", help="key=value config file")
    serve_p.add_argument("--host", default="127.0.0.1")

    config_p = sub.add_parser("config", help="configuration utilities")
    config_sub = config_p.add_subparsers(dest="config_command", required=True)
    dump_p = config_sub.add_parser("dump", help="print the merged configuration")
    dump_p.add_argument("--config", help="key=value config file")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from(args.config)
            calibration = load_calibration(args.calib)
            events = run_pipeline(iter_frame_dir(args.frames, cfg.fps), cfg, calibration)
            Path(args.out).write_text(render_event_log(events), "utf-8")
            print(f"{len(events)} events -> {args.out}")
        elif args.command == "calibrate":
            cfg = _config_from(args.config)
            calibration = run_calibration(
                iter_frame_dir(args.open_dir, cfg.fps),
                iter_frame_dir(args.pinch_dir, cfg.fps),
                cfg,
            )
            save_calibration(calibration, args.out)
            print(f"D={calibration.D} D_prime={calibration.D_prime} -> {args.out}")
        elif args.command == "bench":
            cfg = _config_from(args.config)
            report = bench(iter_frame_dir(args.frames, cfg.fps), cfg)
            sys.stdout.write(report.render())
        elif args.command == "serve":
            cfg = _config_from(args.config)
            print(f"listening on ws://{args.host}:{args.port}", flush=True)
            serve(args.port, cfg, host=args.host)
        elif args.command == "config":
            cfg = _config_from(args.config)
            sys.stdout.write(dump_config(cfg))
    except (ConfigError, CalibrationError, PpmFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
