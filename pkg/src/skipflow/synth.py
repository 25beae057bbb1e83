"""Synthetic scenes with exact ground truth, plus the L-sweep benchmark."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config
from .errors import ObjectLeavesImage
from .imaging import load_pbm, load_pgm, smooth, write_pbm, write_pgm
from .metrics import evaluate
from .motio import (
    DetRow,
    GtRow,
    mask_filename,
    parse_det,
    parse_gt,
    write_det,
    write_gt,
)
from .pipeline import count_frames, frame_path, run, sequence_from_memory


@dataclass(frozen=True)
class SceneSpec:
    num_objects: int = 10
    num_frames: int = 200
    width: int = 640
    height: int = 480
    min_size: Tuple[int, int] = (30, 70)  # (w, h) lower bounds
    max_size: Tuple[int, int] = (60, 140)
    max_velocity: float = 1.0  # linear drift, px/frame
    max_amplitude: float = 20.0  # sinusoidal sway, px
    period_range: Tuple[float, float] = (60.0, 160.0)  # frames
    texture_amplitude: float = 60.0
    background_amplitude: float = 25.0
    margin: int = 16
    fn_rate: float = 0.0
    fp_rate: float = 0.0
    bbox_jitter_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.fn_rate <= 1.0 and 0.0 <= self.fp_rate <= 1.0):
            raise ValueError("fn_rate and fp_rate must lie in [0, 1]")
        if self.num_frames < 1 or self.num_objects < 0:
            raise ValueError("need num_frames >= 1 and num_objects >= 0")
        if self.bbox_jitter_sigma < 0:
            raise ValueError("bbox_jitter_sigma must be >= 0")


@dataclass
class Scene:
    spec: SceneSpec
    frames: List[np.ndarray]
    gt: List[GtRow]
    det: List[DetRow]
    masks: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    def gt_by_frame(self) -> Dict[int, List[GtRow]]:
        out: Dict[int, List[GtRow]] = {}
        for r in self.gt:
            out.setdefault(r.frame, []).append(r)
        return out

    def det_by_frame(self) -> Dict[int, List[DetRow]]:
        out: Dict[int, List[DetRow]] = {}
        for r in self.det:
            out.setdefault(r.frame, []).append(r)
        return out


@dataclass(frozen=True)
class DetectorLatencyModel:
    latency_ms: float = 0.0

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency must be >= 0")


def _texture(rng: np.random.Generator, h: int, w: int, mean: float, amplitude: float) -> np.ndarray:
    # one binomial blur keeps the texture inside the flow tracker's basin
    noise = smooth(rng.uniform(-1.0, 1.0, (h, w)))
    noise /= max(np.abs(noise).max(), 1e-9)
    return mean + amplitude * noise


def _trajectory(rng, spec: SceneSpec, w: int, h: int) -> np.ndarray:
    """Integer top-left corners, shape (num_frames, 2); raises if it cannot stay inside."""
    t = np.arange(spec.num_frames, dtype=np.float64)
    room = (spec.width - 2 * spec.margin - w, spec.height - 2 * spec.margin - h)
    if room[0] < 0 or room[1] < 0:
        raise ObjectLeavesImage(f"a {w}x{h} object does not fit in the frame")
    for _ in range(100):
        offs = []
        for axis in range(2):
            v = rng.uniform(-spec.max_velocity, spec.max_velocity)
            a = rng.uniform(0.0, spec.max_amplitude)
            period = rng.uniform(*spec.period_range)
            phase = rng.uniform(0.0, 2 * math.pi)
            offs.append(v * t + a * np.sin(2 * math.pi * t / period + phase))
        offs = np.stack(offs, axis=1)
        span = offs.max(axis=0) - offs.min(axis=0)
        if (span <= room).all():
            lo = spec.margin - offs.min(axis=0)
            start = lo + rng.uniform(0.0, 1.0, 2) * (np.asarray(room) - span)
            return np.floor(start + offs).astype(int)
    raise ObjectLeavesImage("could not find a trajectory that stays inside the frame")


def generate_scene(spec: SceneSpec) -> Scene:
    geo_rng, tex_rng, det_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(3)
    )
    H, W = spec.height, spec.width
    background = _texture(tex_rng, H, W, 110.0, spec.background_amplitude)

    objects = []
    for _ in range(spec.num_objects):
        w = int(geo_rng.integers(spec.min_size[0], spec.max_size[0] + 1))
        h = int(geo_rng.integers(spec.min_size[1], spec.max_size[1] + 1))
        path = _trajectory(geo_rng, spec, w, h)
        tex = _texture(tex_rng, h, w, float(tex_rng.uniform(60.0, 200.0)), spec.texture_amplitude)
        objects.append((w, h, path, tex))

    frames: List[np.ndarray] = []
    gt: List[GtRow] = []
    det: List[DetRow] = []
    masks: Dict[Tuple[int, int], np.ndarray] = {}
    for f in range(spec.num_frames):
        t = f + 1
        img = background.copy()
        boxes = []
        for oid, (w, h, path, tex) in enumerate(objects, start=1):
            x, y = (int(v) for v in path[f])
            img[y : y + h, x : x + w] = tex  # later objects occlude earlier ones
            boxes.append((oid, x, y, w, h))
            gt.append(GtRow(t, oid, float(x), float(y), float(w), float(h), 1, 1, 1.0))
        frames.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))

        index = 0
        for oid, x, y, w, h in boxes:
            if det_rng.random() < spec.fn_rate:
                continue
            if spec.bbox_jitter_sigma > 0:
                jx, jy, jw, jh = det_rng.normal(0.0, spec.bbox_jitter_sigma, 4)
            else:
                jx = jy = jw = jh = 0.0
            row = DetRow(t, x + jx, y + jy, max(w + jw, 1.0), max(h + jh, 1.0), 1.0)
            det.append(row)
            masks[(t, index)] = _footprint(row, (x, y, w, h))
            index += 1
        for _ in range(det_rng.poisson(spec.fp_rate) if spec.fp_rate > 0 else 0):
            w = int(det_rng.integers(spec.min_size[0], spec.max_size[0] + 1))
            h = int(det_rng.integers(spec.min_size[1], spec.max_size[1] + 1))
            x = float(det_rng.integers(0, W - w))
            y = float(det_rng.integers(0, H - h))
            row = DetRow(t, x, y, float(w), float(h), float(round(det_rng.uniform(0.3, 1.0), 3)))
            det.append(row)
            masks[(t, index)] = np.ones((h, w), dtype=bool)
            index += 1
    return Scene(spec, frames, gt, det, masks)


def _footprint(row: DetRow, rect) -> np.ndarray:
    """Mask cropped to the detection box, set where the true rectangle lies."""
    ox, oy = math.floor(row.x), math.floor(row.y)
    mh, mw = max(int(round(row.h)), 1), max(int(round(row.w)), 1)
    x, y, w, h = rect
    mask = np.zeros((mh, mw), dtype=bool)
    c0, c1 = max(x - ox, 0), min(x + w - ox, mw)
    r0, r1 = max(y - oy, 0), min(y + h - oy, mh)
    if c0 < c1 and r0 < r1:
        mask[r0:r1, c0:c1] = True
    return mask


# ---------------------------------------------------------------------------
# Disk layout: frames/000001.pgm, det.txt, gt.txt, masks/000001_000.pbm
# ---------------------------------------------------------------------------


def save_scene(scene: Scene, directory) -> None:
    frames_dir = os.path.join(directory, "frames")
    masks_dir = os.path.join(directory, "masks")
    os.makedirs(frames_dir, exist_ok=True)
    os.makedirs(masks_dir, exist_ok=True)
    for t, img in enumerate(scene.frames, start=1):
        with open(frame_path(frames_dir, t), "wb") as fh:
            fh.write(write_pgm(img))
    with open(os.path.join(directory, "det.txt"), "w") as fh:
        fh.write(write_det(scene.det))
    with open(os.path.join(directory, "gt.txt"), "w") as fh:
        fh.write(write_gt(scene.gt))
    for (t, i), mask in sorted(scene.masks.items()):
        with open(os.path.join(masks_dir, mask_filename(t, i)), "wb") as fh:
            fh.write(write_pbm(mask))


def load_scene(directory) -> Scene:
    frames_dir = os.path.join(directory, "frames")
    for name in ("det.txt", "gt.txt"):
        if not os.path.isfile(os.path.join(directory, name)):
            raise FileNotFoundError(os.path.join(directory, name))
    if not os.path.isdir(frames_dir):
        raise FileNotFoundError(frames_dir)
    frames = []
    for t in range(1, count_frames(frames_dir) + 1):
        with open(frame_path(frames_dir, t), "rb") as fh:
            frames.append(load_pgm(fh.read()))
    with open(os.path.join(directory, "det.txt")) as fh:
        det_groups = parse_det(fh.read())
    with open(os.path.join(directory, "gt.txt")) as fh:
        gt_groups = parse_gt(fh.read())
    masks = {}
    masks_dir = os.path.join(directory, "masks")
    for t, rows in det_groups.items():
        for i in range(len(rows)):
            path = os.path.join(masks_dir, mask_filename(t, i))
            if os.path.isfile(path):
                with open(path, "rb") as fh:
                    masks[(t, i)] = load_pbm(fh.read())
    det = [r for t in sorted(det_groups) for r in det_groups[t]]
    gt = [r for t in sorted(gt_groups) for r in gt_groups[t]]
    h, w = frames[0].shape if frames else (0, 0)
    spec = SceneSpec(num_frames=max(len(frames), 1), width=w, height=h, num_objects=len({r.id for r in gt}))
    return Scene(spec, frames, gt, det, masks)


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchRow:
    L: int
    mota: float
    idsw: int
    tracking_ms: float
    total_fps: float

    HEADER = "L,MOTA,IDsw,tracking_ms_per_frame,simulated_total_fps"

    def csv(self) -> str:
        return f"{self.L},{self.mota:.4f},{self.idsw},{self.tracking_ms:.3f},{self.total_fps:.3f}"


def track_scene(scene: Scene, config: Config):
    frames = sequence_from_memory(scene.frames, scene.det_by_frame(), config, scene.masks)
    return run(frames, config)


def bench(
    scene: Scene,
    L_values: Sequence[int],
    latency: DetectorLatencyModel = DetectorLatencyModel(100.0),
    config: Config = Config(),
) -> List[BenchRow]:
    """Run the tracker once per detection interval and score each run.

    Simulated fps charges the detector latency on every detection frame on
    top of the measured tracking time.
    """
    if not L_values:
        raise ValueError("need at least one detection interval")
    gt = scene.gt_by_frame()
    out = []
    for L in L_values:
        cfg = replace(config, L=int(L))
        rows, timing = track_scene(scene, cfg)
        by_frame: Dict[int, list] = {}
        for r in rows:
            by_frame.setdefault(r.frame, []).append(r)
        report = evaluate(gt, by_frame)
        out.append(BenchRow(cfg.L, report.mota, report.idsw, timing.mean_ms("total"), timing.fps(latency.latency_ms)))
    return out
