"""Online tracker: flow every frame, detections every L frames.

Per frame ``t`` the tracker

1. moves every live track by the median LK flow of its interest points and
   drops tracks that lost too many points or whose points spread out,
2. on detection frames, matches the moved boxes to thresholded detections,
   re-seeds points on matched tracks, starts tracks for unmatched detections
   and lets unmatched tracks coast for at most ``M`` frames,
3. reports ``(t, id, box)`` for every live track.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, List, Optional, Tuple

import numpy as np

from .association import gated_match
from .config import Config
from .errors import AllPointsLost, MissingDetections, NoEligiblePixels, NonMonotonicFrameIndex
from .imaging import Pyramid, build_pyramid, load_pgm
from .motio import DetRow, ResultRow, to_detections
from .optflow import FlowStatus, track_points
from .tracking import Detection, Termination, Track, propagate_arrays, sample_points, should_terminate

log = logging.getLogger(__name__)


def is_detection_frame(t: int, L: int) -> bool:
    if t < 1 or L < 1:
        raise ValueError("frame index and interval must be >= 1")
    return (t - 1) % L == 0


@dataclass
class FrameBundle:
    index: int
    image: np.ndarray
    detections: Optional[List[Detection]] = None


@dataclass
class TimingReport:
    """Wall-clock seconds per frame, split by stage."""

    detection_frames: List[bool] = field(default_factory=list)
    flow: List[float] = field(default_factory=list)
    association: List[float] = field(default_factory=list)
    sampling: List[float] = field(default_factory=list)
    total: List[float] = field(default_factory=list)

    @property
    def frames(self) -> int:
        return len(self.total)

    def mean_ms(self, stage: str = "total") -> float:
        values = getattr(self, stage)
        return 1000.0 * float(np.mean(values)) if values else 0.0

    def fps(self, detector_latency_ms: float = 0.0) -> float:
        """Frames per second, optionally charging a fixed latency per detection frame."""
        if not self.total:
            return 0.0
        seconds = sum(self.total) + detector_latency_ms / 1000.0 * sum(self.detection_frames)
        return self.frames / seconds if seconds > 0 else float("inf")

    def summary(self) -> str:
        return (
            f"frames={self.frames} flow={self.mean_ms('flow'):.2f}ms "
            f"association={self.mean_ms('association'):.2f}ms "
            f"sampling={self.mean_ms('sampling'):.2f}ms total={self.mean_ms('total'):.2f}ms "
            f"tracking_fps={self.fps():.1f}"
        )


@dataclass
class _Live:
    track: Track
    coasting: bool = False


class Tracker:
    """Holds the evolving tracker state; feed frames in order through :meth:`step`."""

    def __init__(self, config: Config = Config()):
        self.config = config
        self.live: List[_Live] = []
        self.next_id = 1
        self.prev_pyramid: Optional[Pyramid] = None
        self.last_index = 0
        self.rng = np.random.default_rng(config.seed)
        self.timing = TimingReport()

    @property
    def tracks(self) -> List[Track]:
        return [lv.track for lv in self.live]

    # -- stages ---------------------------------------------------------

    def _flow(self, pyramid: Pyramid) -> None:
        cfg = self.config
        counts = [len(lv.track.points) for lv in self.live]
        if not self.live or self.prev_pyramid is None:
            return
        if sum(counts):
            pts = np.concatenate([lv.track.points for lv in self.live if len(lv.track.points)])
            disp, status, _ = track_points(self.prev_pyramid, pyramid, pts, cfg.lk)
        else:
            disp = np.zeros((0, 2))
            status = np.zeros(0, dtype=np.int8)
        survivors = []
        start = 0
        for lv, n in zip(self.live, counts):
            d = disp[start : start + n]
            ok = status[start : start + n] == FlowStatus.OK
            start += n
            try:
                moved, alpha = propagate_arrays(lv.track, d, ok, cfg.hotelling_confidence)
            except AllPointsLost:
                log.debug("track %d: all points lost", lv.track.id)
                continue
            moved = replace(moved, miss_frames=moved.miss_frames + 1)
            verdict = should_terminate(
                moved,
                alpha,
                min_points=cfg.R,
                tau_var=cfg.tau_var,
                # the timeout only applies once a detection round has missed
                max_miss=cfg.M if lv.coasting else np.inf,
                use_variance=cfg.enable_termination,
            )
            if verdict is Termination.CONTINUE:
                survivors.append(_Live(moved, lv.coasting))
            else:
                log.debug("track %d terminated: %s", lv.track.id, verdict.value)
        self.live = survivors

    def _sample(self, det: Detection, shape) -> np.ndarray:
        cfg = self.config
        hw = cfg.lk.window_half
        # only pixels whose flow window fits inside the frame
        limits = (hw, hw, shape[1] - 1 - hw, shape[0] - 1 - hw)
        mask = det.mask if cfg.enable_segmentation else None
        for m in (mask, None) if mask is not None else (None,):
            try:
                return sample_points(
                    det.bbox, m, cfg.Q, cfg.erosion_iters, self.rng, cfg.head_frac, limits
                )
            except NoEligiblePixels:
                continue
        return np.zeros((0, 2))

    def _associate(self, detections: List[Detection], shape) -> float:
        cfg = self.config
        t0 = time.perf_counter()
        dets = [d for d in detections if d.score >= cfg.score_thresh]
        result = gated_match([lv.track.bbox for lv in self.live], [d.bbox for d in dets], cfg.epsilon)
        assoc_time = time.perf_counter() - t0

        t1 = time.perf_counter()
        updated: List[Optional[_Live]] = list(self.live)
        for ti, di in result.matches:
            old = self.live[ti].track
            det = dets[di]
            updated[ti] = _Live(
                replace(old, bbox=det.bbox, points=self._sample(det, shape), miss_frames=0, hits=old.hits + 1)
            )
        for ti in result.unmatched_tracks:
            lv = self.live[ti]
            if cfg.enable_continuation and lv.track.miss_frames <= cfg.M:
                updated[ti] = _Live(lv.track, coasting=True)
            else:
                updated[ti] = None
        self.live = [lv for lv in updated if lv is not None]
        for di in result.unmatched_detections:
            det = dets[di]
            self.live.append(_Live(Track(self.next_id, det.bbox, self._sample(det, shape))))
            self.next_id += 1
        self._sampling_time = time.perf_counter() - t1
        return assoc_time

    # -- public ---------------------------------------------------------

    def step(self, bundle: FrameBundle) -> List[ResultRow]:
        cfg = self.config
        t = bundle.index
        if t != self.last_index + 1:
            raise NonMonotonicFrameIndex(f"expected frame {self.last_index + 1}, got {t}")
        detect = is_detection_frame(t, cfg.L)
        if detect and bundle.detections is None:
            raise MissingDetections(f"frame {t} is a detection frame but carries no detections")

        start = time.perf_counter()
        pyramid = build_pyramid(bundle.image, cfg.lk.levels, with_gradients=True)
        if self.prev_pyramid is not None and pyramid.shape != self.prev_pyramid.shape:
            raise ValueError(f"frame {t} size {pyramid.shape} differs from previous frame")
        self._flow(pyramid)
        flow_time = time.perf_counter() - start

        assoc_time = 0.0
        self._sampling_time = 0.0
        if detect:
            assoc_time = self._associate(bundle.detections, pyramid.shape)

        self.prev_pyramid = pyramid
        self.last_index = t
        rows = [
            ResultRow(t, lv.track.id, lv.track.bbox.x, lv.track.bbox.y, lv.track.bbox.w, lv.track.bbox.h, 1.0)
            for lv in sorted(self.live, key=lambda lv: lv.track.id)
        ]
        tm = self.timing
        tm.detection_frames.append(detect)
        tm.flow.append(flow_time)
        tm.association.append(assoc_time)
        tm.sampling.append(self._sampling_time)
        tm.total.append(time.perf_counter() - start)
        return rows


def run(frames: Iterable[FrameBundle], config: Config = Config()) -> Tuple[List[ResultRow], TimingReport]:
    tracker = Tracker(config)
    rows: List[ResultRow] = []
    seen = False
    for bundle in frames:
        seen = True
        rows.extend(tracker.step(bundle))
    if not seen:
        raise ValueError("empty frame sequence")
    return rows, tracker.timing


def frame_path(frames_dir, t: int) -> str:
    return os.path.join(frames_dir, f"{t:06d}.pgm")


def count_frames(frames_dir) -> int:
    """Number of contiguous frames 000001.pgm, 000002.pgm, ... in a directory."""
    names = {n for n in os.listdir(frames_dir) if n.endswith(".pgm")}
    n = 0
    while f"{n + 1:06d}.pgm" in names:
        n += 1
    return n


def sequence_from_disk(
    frames_dir, detections: dict, config: Config, masks_dir=None, num_frames: Optional[int] = None
) -> Iterator[FrameBundle]:
    """Yield bundles for frames on disk; detections only ride along on detection frames."""
    if num_frames is None:
        num_frames = count_frames(frames_dir)
    for t in range(1, num_frames + 1):
        with open(frame_path(frames_dir, t), "rb") as fh:
            image = load_pgm(fh.read())
        dets = None
        if is_detection_frame(t, config.L):
            dets = to_detections(detections.get(t, []), masks_dir)
        yield FrameBundle(t, image, dets)


def sequence_from_memory(frames, detections: dict, config: Config, masks=None) -> Iterator[FrameBundle]:
    """Like :func:`sequence_from_disk` for in-memory frames and ``{frame: [DetRow]}``.

    ``masks`` maps ``(frame, index)`` to a cropped mask.
    """
    for t, image in enumerate(frames, start=1):
        dets = None
        if is_detection_frame(t, config.L):
            rows: List[DetRow] = detections.get(t, [])
            dets = [
                Detection(r.bbox, float(min(max(r.score, 0.0), 1.0)), (masks or {}).get((t, i)))
                for i, r in enumerate(rows)
            ]
        yield FrameBundle(t, image, dets)
