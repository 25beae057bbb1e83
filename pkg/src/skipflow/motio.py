"""MOTChallenge text formats and PBM mask sidecars.

Coordinates are kept exactly as written in the files; nothing is shifted
between the 1-based MOT convention and array indices.
"""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .errors import NegativeDimensions, ParseError, UnsortedInput
from .imaging import load_pbm, write_pbm
from .tracking import BBox, Detection


@dataclass(frozen=True)
class DetRow:
    frame: int
    x: float
    y: float
    w: float
    h: float
    score: float
    id: int = -1

    @property
    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class ResultRow:
    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    conf: float = 1.0

    @property
    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class GtRow:
    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    considered: int = 1
    cls: int = 1
    visibility: float = 1.0

    @property
    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.w, self.h)


def fmt_num(v: float) -> str:
    """Shortest text that parses back to the same float; integral values lose the '.0'."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _rows(text: str, min_fields: int, max_fields: int):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if not min_fields <= len(parts) <= max_fields:
            raise ParseError(
                f"expected {min_fields}-{max_fields} fields, got {len(parts)}", lineno
            )
        try:
            nums = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not all(np.isfinite(nums)):
            raise ParseError("non-finite field", lineno)
        yield lineno, nums


def _int_field(value: float, name: str, lineno: int) -> int:
    if not value.is_integer():
        raise ParseError(f"{name} must be an integer, got {value}", lineno)
    return int(value)


def _check_box(nums: List[float], lineno: int) -> None:
    if nums[4] <= 0 or nums[5] <= 0:
        raise NegativeDimensions(f"box size must be positive, got {nums[4]}x{nums[5]}", lineno)


def parse_det(text: str) -> Dict[int, List[DetRow]]:
    """Group detection rows by frame. Low scores are kept; filtering happens downstream."""
    out: Dict[int, List[DetRow]] = defaultdict(list)
    for lineno, nums in _rows(text, 7, 10):
        frame = _int_field(nums[0], "frame", lineno)
        if frame < 1:
            raise ParseError("frame numbers start at 1", lineno)
        _check_box(nums, lineno)
        out[frame].append(
            DetRow(frame, nums[2], nums[3], nums[4], nums[5], nums[6], _int_field(nums[1], "id", lineno))
        )
    return dict(out)


def write_det(rows: Iterable[DetRow]) -> str:
    return "".join(
        f"{r.frame},{r.id},{fmt_num(r.x)},{fmt_num(r.y)},{fmt_num(r.w)},{fmt_num(r.h)},"
        f"{fmt_num(r.score)},-1,-1,-1\n"
        for r in rows
    )


def parse_results(text: str) -> Dict[int, List[ResultRow]]:
    out: Dict[int, List[ResultRow]] = defaultdict(list)
    for lineno, nums in _rows(text, 7, 10):
        frame = _int_field(nums[0], "frame", lineno)
        tid = _int_field(nums[1], "id", lineno)
        if frame < 1 or tid < 1:
            raise ParseError("frame and id must be >= 1", lineno)
        _check_box(nums, lineno)
        out[frame].append(ResultRow(frame, tid, nums[2], nums[3], nums[4], nums[5], nums[6]))
    return dict(out)


def write_results(rows: Sequence[ResultRow]) -> str:
    keys = [(r.frame, r.id) for r in rows]
    if any(a > b for a, b in zip(keys, keys[1:])):
        raise UnsortedInput("result rows must be sorted by (frame, id)")
    return "".join(
        f"{r.frame},{r.id},{fmt_num(r.x)},{fmt_num(r.y)},{fmt_num(r.w)},{fmt_num(r.h)},"
        f"{fmt_num(r.conf)},-1,-1,-1\n"
        for r in rows
    )


def parse_gt(text: str) -> Dict[int, List[GtRow]]:
    out: Dict[int, List[GtRow]] = defaultdict(list)
    for lineno, nums in _rows(text, 6, 9):
        frame = _int_field(nums[0], "frame", lineno)
        tid = _int_field(nums[1], "id", lineno)
        if frame < 1 or tid < 1:
            raise ParseError("frame and id must be >= 1", lineno)
        _check_box(nums, lineno)
        extra = nums[6:] + [1.0, 1.0, 1.0][len(nums) - 6 :]
        out[frame].append(
            GtRow(
                frame, tid, nums[2], nums[3], nums[4], nums[5],
                _int_field(extra[0], "considered", lineno),
                _int_field(extra[1], "class", lineno),
                extra[2],
            )
        )
    return dict(out)


def write_gt(rows: Iterable[GtRow]) -> str:
    return "".join(
        f"{r.frame},{r.id},{fmt_num(r.x)},{fmt_num(r.y)},{fmt_num(r.w)},{fmt_num(r.h)},"
        f"{r.considered},{r.cls},{fmt_num(r.visibility)}\n"
        for r in rows
    )


def flatten(groups: Dict[int, list]) -> list:
    return [row for frame in sorted(groups) for row in groups[frame]]


def mask_filename(frame: int, index: int) -> str:
    return f"{frame:06d}_{index:03d}.pbm"


def load_masks(directory, frame: int, index: int) -> Optional[np.ndarray]:
    """Mask for detection ``index`` of ``frame``, or None when no sidecar exists."""
    if directory is None:
        return None
    path = os.path.join(directory, mask_filename(frame, index))
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        return None
    return load_pbm(data)


def save_mask(directory, frame: int, index: int, mask: np.ndarray) -> None:
    with open(os.path.join(directory, mask_filename(frame, index)), "wb") as fh:
        fh.write(write_pbm(mask))


def to_detections(rows: Sequence[DetRow], masks_dir=None) -> List[Detection]:
    """Turn parsed rows into detections, attaching mask sidecars when present.

    Scores outside [0, 1] (some public detectors emit raw logits) are clipped.
    """
    dets = []
    for index, r in enumerate(rows):
        mask = load_masks(masks_dir, r.frame, index)
        dets.append(Detection(r.bbox, float(min(max(r.score, 0.0), 1.0)), mask))
    return dets
