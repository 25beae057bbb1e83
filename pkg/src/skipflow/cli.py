"""``skipflow`` command line: track, eval, synth, bench, overlay.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .config import Config, parse_config
from .errors import SkipflowError
from .imaging import load_pgm, write_ppm
from .metrics import evaluate
from .motio import parse_det, parse_gt, parse_results, write_results
from .overlay import render
from .pipeline import Tracker, frame_path, sequence_from_disk

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

_FRAME_RE = re.compile(r"^(\d{6})\.pgm$")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we reserve 2 for bad data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def _load_config(path: Optional[str]) -> Config:
    if path is None:
        return Config()
    return parse_config(_read_text(path))


def _scan_frames(frames_dir: str) -> int:
    """Count frames, insisting on 000001.pgm, 000002.pgm, ... with no gaps."""
    if not os.path.isdir(frames_dir):
        raise DataError(f"frames directory not found: {frames_dir}")
    indices = sorted(int(m.group(1)) for n in os.listdir(frames_dir) if (m := _FRAME_RE.match(n)))
    if not indices:
        raise DataError(f"missing frame {os.path.basename(frame_path(frames_dir, 1))} in {frames_dir}")
    present = set(indices)
    for t in range(1, indices[-1] + 1):
        if t not in present:
            raise DataError(f"missing frame {os.path.basename(frame_path(frames_dir, t))} in {frames_dir}")
    return indices[-1]


def _load_frame(frames_dir: str, t: int):
    path = frame_path(frames_dir, t)
    try:
        with open(path, "rb") as fh:
            return load_pgm(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read frame {path}: {exc.strerror}") from exc
    except SkipflowError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror}") from exc


def _parse_L_list(text: str) -> List[int]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError("--L needs at least one interval")
    try:
        values = [int(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"--L expects comma-separated integers, got {text!r}") from exc
    if any(v < 1 for v in values):
        raise UsageError("--L intervals must be >= 1")
    return values


def _parse_points(text: str) -> Dict[int, List[Tuple[int, float, float]]]:
    out: Dict[int, List[Tuple[int, float, float]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            frame, tid, x, y = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
        except (IndexError, ValueError) as exc:
            raise DataError(f"points file line {lineno}: expected frame,id,x,y") from exc
        out.setdefault(frame, []).append((tid, x, y))
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_track(args) -> int:
    config = _load_config(args.config)
    n = _scan_frames(args.frames)
    dets = parse_det(_read_text(args.det))
    if args.masks is not None and not os.path.isdir(args.masks):
        raise DataError(f"masks directory not found: {args.masks}")

    tracker = Tracker(config)
    rows = []
    point_lines = []
    for bundle in sequence_from_disk(args.frames, dets, config, args.masks, num_frames=n):
        rows.extend(tracker.step(bundle))
        if args.points_out:
            for tr in sorted(tracker.tracks, key=lambda tr: tr.id):
                for x, y in tr.points:
                    point_lines.append(f"{bundle.index},{tr.id},{float(x)!r},{float(y)!r}\n")
    _write_text(args.out, write_results(rows))
    if args.points_out:
        _write_text(args.points_out, "".join(point_lines))

    tm = tracker.timing
    print(f"frames: {tm.frames}  detection frames: {sum(tm.detection_frames)}  tracks: {tracker.next_id - 1}")
    print(f"flow:        {tm.mean_ms('flow'):8.3f} ms/frame")
    print(f"association: {tm.mean_ms('association'):8.3f} ms/frame")
    print(f"sampling:    {tm.mean_ms('sampling'):8.3f} ms/frame")
    print(f"total:       {tm.mean_ms('total'):8.3f} ms/frame  ({tm.fps():.1f} fps, detection excluded)")
    return EXIT_OK


def cmd_eval(args) -> int:
    if not 0.0 < args.iou <= 1.0:
        raise UsageError("--iou must lie in (0, 1]")
    gt = parse_gt(_read_text(args.gt))
    res = parse_results(_read_text(args.res))
    report = evaluate(gt, res, iou_gate=args.iou)
    sys.stdout.write(report.as_text())
    sys.stdout.write(report.as_csv())
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import SceneSpec, generate_scene, save_scene

    try:
        spec = SceneSpec(
            num_objects=args.objects,
            num_frames=args.frames,
            width=args.width,
            height=args.height,
            fn_rate=args.fn,
            fp_rate=args.fp,
            bbox_jitter_sigma=args.jitter,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    scene = generate_scene(spec)
    try:
        save_scene(scene, args.out)
    except OSError as exc:
        raise DataError(f"cannot write scene to {args.out}: {exc.strerror}") from exc
    print(f"wrote {len(scene.frames)} frames, {len(scene.det)} detections, {len(scene.gt)} gt boxes to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .synth import BenchRow, DetectorLatencyModel, bench, load_scene

    L_values = _parse_L_list(args.L)
    if args.det_latency_ms < 0:
        raise UsageError("--det-latency-ms must be >= 0")
    config = _load_config(args.config)
    try:
        scene = load_scene(args.scene)
    except FileNotFoundError as exc:
        raise DataError(f"missing scene artifact: {exc}") from exc
    if not scene.frames:
        raise DataError(f"missing frame 000001.pgm in {os.path.join(args.scene, 'frames')}")
    rows = bench(scene, L_values, DetectorLatencyModel(args.det_latency_ms), config)
    text = BenchRow.HEADER + "\n" + "".join(r.csv() + "\n" for r in rows)
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    return EXIT_OK


def cmd_overlay(args) -> int:
    n = _scan_frames(args.frames)
    res = parse_results(_read_text(args.res))
    bad = sorted(t for t in res if not 1 <= t <= n)
    if bad:
        raise DataError(f"results reference frame {bad[0]} but {args.frames} holds frames 1..{n}")
    points = _parse_points(_read_text(args.points)) if args.points else {}
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create {args.out}: {exc.strerror}") from exc
    for t in range(1, n + 1):
        img = render(_load_frame(args.frames, t), res.get(t, []), points.get(t))
        path = os.path.join(args.out, f"{t:06d}.ppm")
        try:
            with open(path, "wb") as fh:
                fh.write(write_ppm(img))
        except OSError as exc:
            raise DataError(f"cannot write {path}: {exc.strerror}") from exc
    print(f"wrote {n} frames to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skipflow", description="Multi-object tracking with sparse detections and optical flow.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("track", help="run the tracker over a frame directory")
    t.add_argument("--frames", required=True, help="directory of 000001.pgm, 000002.pgm, ...")
    t.add_argument("--det", required=True, help="MOT detection file")
    t.add_argument("--masks", help="directory of per-detection PBM masks")
    t.add_argument("--config", help="key = value config file")
    t.add_argument("--out", required=True, help="MOT results file to write")
    t.add_argument("--points-out", help="also write interest points as frame,id,x,y")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("eval", help="CLEAR-MOT scores of results against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--res", required=True)
    e.add_argument("--iou", type=float, default=0.5, help="match threshold (default 0.5)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate a synthetic scene")
    s.add_argument("--out", required=True)
    s.add_argument("--objects", type=int, default=10)
    s.add_argument("--frames", type=int, default=200)
    s.add_argument("--fn", type=float, default=0.0, help="per-object detection drop rate")
    s.add_argument("--fp", type=float, default=0.0, help="mean false positives per frame")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--width", type=int, default=640)
    s.add_argument("--height", type=int, default=480)
    s.add_argument("--jitter", type=float, default=0.0, help="detection box noise sigma, px")
    s.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="sweep the detection interval on a scene")
    b.add_argument("--scene", required=True, help="directory written by 'synth'")
    b.add_argument("--L", default="1,2,5,10,15", help="comma-separated detection intervals")
    b.add_argument("--det-latency-ms", type=float, default=100.0)
    b.add_argument("--config", help="base config; L is overridden per row")
    b.add_argument("--out", help="also write the CSV here")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("overlay", help="draw results onto frames as PPM images")
    o.add_argument("--frames", required=True)
    o.add_argument("--res", required=True)
    o.add_argument("--out", required=True)
    o.add_argument("--points", help="interest points written by 'track --points-out'")
    o.set_defaults(func=cmd_overlay)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"skipflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SkipflowError, ValueError) as exc:
        print(f"skipflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
