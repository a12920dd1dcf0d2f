"""Command line entry point: ``mandelbrot-area {compute,area,validate,pixel,checkpoint-info}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import area, oracle, pixel
from .arith import DyadicRational
from .checkpoint import CheckpointError, checkpoint_info, checkpoint_load
from .engine import DEFAULT_EXACT_CAP, EXACT, FLOAT, BetaTable, CoeffStream, EngineError, check_plan, min_threshold, run

log = logging.getLogger("mandelbrot_area")

DEFAULT_CHECKPOINT_INTERVAL = 100_000


# ---------------------------------------------------------------------------
# coefficient files


def write_coefficients(stream: CoeffStream, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "b_m"])
        for m in range(len(stream)):
            v = stream[m]
            w.writerow([m, format(float(v), ".17g") if stream.mode == FLOAT else str(v)])


def read_coefficients(path) -> CoeffStream:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["m", "b_m"]:
        raise ValueError(f"{path}: expected header 'm,b_m'")
    body = rows[1:]
    for i, r in enumerate(body):
        if int(r[0]) != i:
            raise ValueError(f"{path}: row {i + 1} has index {r[0]}, expected {i}")
    exact = bool(body) and "/" in body[0][1]
    if exact:
        return CoeffStream([DyadicRational.parse(r[1]) for r in body], EXACT)
    return CoeffStream(np.array([float(r[1]) for r in body], dtype=np.float64), FLOAT)


def parse_points(text: str) -> list[int]:
    if text == "reference":
        return list(area.REFERENCE_SAMPLE_POINTS)
    return [int(p) for p in text.split(",") if p.strip()]


# ---------------------------------------------------------------------------


def _table_for(args) -> BetaTable:
    cap = None if args.no_exact_cap else DEFAULT_EXACT_CAP
    if args.checkpoint and os.path.exists(args.checkpoint):
        table = checkpoint_load(args.checkpoint, args.mode, exact_cap=cap)
        log.info("resumed from %s at m = %d", args.checkpoint, table.m_done)
        return table
    return BetaTable(args.mode, exact_cap=cap)


def _compute(args) -> tuple[BetaTable, CoeffStream]:
    threshold = min_threshold(args.width) if args.threshold is None else args.threshold
    check_plan(args.width, threshold)
    table = _table_for(args)
    stream = run(
        table,
        args.m_target,
        width=args.width,
        threshold=threshold,
        workers=args.workers,
        checkpoint=args.checkpoint,
        checkpoint_interval=args.checkpoint_interval if args.checkpoint else None,
    )
    return table, stream


def cmd_compute(args) -> int:
    _, stream = _compute(args)
    write_coefficients(stream, args.out)
    log.info("wrote %d coefficients to %s", len(stream), args.out)
    return 0


def cmd_area(args) -> int:
    points = parse_points(args.sample_points)
    if args.input:
        stream = read_coefficients(args.input)
    else:
        if args.m_target is None:
            args.m_target = max(points) + 1
        _, stream = _compute(args)
    series = area.accumulate(stream, points)
    if args.out:
        area.export_series(series, args.out)
    print(json.dumps(series.summary()))
    return 0


def cmd_validate(args) -> int:
    checks = oracle.CHECKS if args.checks == "all" else tuple(c.strip() for c in args.checks.split(","))
    if args.input:
        stream = read_coefficients(args.input)
        report = oracle.run_suite(checks, limit=min(args.limit, len(stream) - 1), stream=stream)
    else:
        table = BetaTable(args.mode, exact_cap=None if args.no_exact_cap else DEFAULT_EXACT_CAP)
        run(table, args.limit + 1, width=args.width, workers=args.workers)
        report = oracle.run_suite(checks, limit=args.limit, table=table)
    for r in report.records:
        print(r.line())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json(indent=2))
    return 0 if report.verdict else 1


def cmd_pixel(args) -> int:
    xmin, xmax, ymin, ymax = (float(v) for v in args.bounds.split(","))
    res = [int(v) for v in args.resolution.split(",")]
    nx, ny = (res[0], res[0]) if len(res) == 1 else res
    spec = pixel.GridSpec(xmin, xmax, ymin, ymax, nx, ny, args.max_iter)
    doc = pixel.estimate_report(spec, args.workers)
    text = json.dumps(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_checkpoint_info(args) -> int:
    print(json.dumps(checkpoint_info(args.checkpoint)))
    return 0


def _engine_flags(p: argparse.ArgumentParser, m_target_required: bool) -> None:
    p.add_argument("--m-target", type=int, required=m_target_required, help="last column to compute")
    p.add_argument("--mode", choices=(FLOAT, EXACT), default=FLOAT)
    p.add_argument("--width", type=int, default=1, help="columns per batch")
    p.add_argument("--threshold", type=int, default=None, help="first parallel row (default: smallest valid)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", default=None, help="checkpoint file (resumed if present)")
    p.add_argument("--checkpoint-interval", type=int, default=DEFAULT_CHECKPOINT_INTERVAL, help="columns between saves")
    p.add_argument("--no-exact-cap", action="store_true", help=f"allow exact runs past m = {DEFAULT_EXACT_CAP}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mandelbrot-area", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute b_m and write 'm,b_m' CSV")
    _engine_flags(p, True)
    p.add_argument("--out", default="coefficients.csv")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("area", help="upper bounds A_N at sample points")
    _engine_flags(p, False)
    p.add_argument("--input", help="coefficient CSV instead of a live run")
    p.add_argument("--sample-points", default="reference", help="comma list of N, or 'reference'")
    p.add_argument("--out", help="N,A_N CSV (or .json)")
    p.set_defaults(func=cmd_area)

    p = sub.add_parser("validate", help="run the oracle checks; exit 1 on any failure")
    p.add_argument("--input", help="coefficient CSV (table-based checks are skipped)")
    p.add_argument("--limit", type=int, default=1023)
    p.add_argument("--checks", default="all", help=f"comma list from {','.join(oracle.CHECKS)}")
    p.add_argument("--mode", choices=(FLOAT, EXACT), default=EXACT)
    p.add_argument("--width", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-exact-cap", action="store_true")
    p.add_argument("--out", help="report JSON")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("pixel", help="pixel-counting area estimate")
    p.add_argument("--bounds", default="-2,0.5,0,1.25", help="xmin,xmax,ymin,ymax")
    p.add_argument("--resolution", default="4096", help="N or NX,NY")
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pixel)

    p = sub.add_parser("checkpoint-info", help="describe a checkpoint file")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_checkpoint_info)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (EngineError, CheckpointError, oracle.OracleError, area.AreaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
