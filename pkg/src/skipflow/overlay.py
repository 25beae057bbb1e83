"""Render tracking results onto frames as RGB rasters."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .motio import ResultRow

# 3x5 digit glyphs, one string per row
_GLYPHS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "001", "001", "001"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}


def id_color(track_id: int) -> Tuple[int, int, int]:
    """Stable, saturated colour for a track id."""
    h = (track_id * 2654435761) & 0xFFFFFFFF
    rgb = [(h >> 0) & 0xFF, (h >> 8) & 0xFF, (h >> 16) & 0xFF]
    # push one channel high and one low so colours stand out from gray frames
    k = track_id % 3
    rgb[k] = 255
    rgb[(k + 1) % 3] //= 3
    return tuple(int(c) for c in rgb)


def to_rgb(gray: np.ndarray) -> np.ndarray:
    return np.repeat(np.asarray(gray, dtype=np.uint8)[:, :, None], 3, axis=2)


def box_edges(x: float, y: float, w: float, h: float) -> Tuple[int, int, int, int]:
    """Pixel columns/rows of the outline: (left, top, right, bottom), inclusive."""
    left = int(round(x))
    top = int(round(y))
    right = max(int(round(x + w)) - 1, left)
    bottom = max(int(round(y + h)) - 1, top)
    return left, top, right, bottom


def draw_box(img: np.ndarray, row: ResultRow, color) -> None:
    H, W = img.shape[:2]
    left, top, right, bottom = box_edges(row.x, row.y, row.w, row.h)
    c0, c1 = max(left, 0), min(right, W - 1)
    r0, r1 = max(top, 0), min(bottom, H - 1)
    if c0 > c1 or r0 > r1:
        return
    if 0 <= top < H:
        img[top, c0 : c1 + 1] = color
    if 0 <= bottom < H:
        img[bottom, c0 : c1 + 1] = color
    if 0 <= left < W:
        img[r0 : r1 + 1, left] = color
    if 0 <= right < W:
        img[r0 : r1 + 1, right] = color


def draw_text(img: np.ndarray, text: str, x: int, y: int, color) -> None:
    H, W = img.shape[:2]
    for i, ch in enumerate(text):
        glyph = _GLYPHS.get(ch)
        if glyph is None:
            continue
        for gy, line in enumerate(glyph):
            for gx, bit in enumerate(line):
                px, py = x + 4 * i + gx, y + gy
                if bit == "1" and 0 <= px < W and 0 <= py < H:
                    img[py, px] = color


def draw_point(img: np.ndarray, x: float, y: float, color) -> None:
    H, W = img.shape[:2]
    cx, cy = int(np.floor(x)), int(np.floor(y))
    for dx, dy in ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)):
        px, py = cx + dx, cy + dy
        if 0 <= px < W and 0 <= py < H:
            img[py, px] = color


def render(
    gray: np.ndarray,
    rows: Sequence[ResultRow],
    points: Optional[Iterable[Tuple[int, float, float]]] = None,
) -> np.ndarray:
    """Boxes with id labels, plus optional ``(id, x, y)`` interest points."""
    img = to_rgb(gray)
    for r in rows:
        color = id_color(r.id)
        draw_box(img, r, color)
        left, top, _, _ = box_edges(r.x, r.y, r.w, r.h)
        draw_text(img, str(r.id), left + 2, top - 6 if top >= 6 else top + 2, color)
    for tid, x, y in points or ():
        draw_point(img, x, y, id_color(tid))
    return img
