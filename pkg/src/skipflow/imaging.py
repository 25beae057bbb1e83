"""Grayscale rasters, pyramids, gradients, sampling, erosion and Netpbm I/O.

Images are plain numpy arrays indexed ``[row, col]``:

* 8-bit frames are ``uint8`` arrays of shape ``(height, width)``
* working images are ``float64`` arrays of the same shape
* bit masks are ``bool`` arrays
* RGB rasters (overlay output only) are ``uint8`` arrays of shape ``(h, w, 3)``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import _kernels
from .errors import (
    ImageTooSmall,
    MalformedHeader,
    MalformedPbm,
    OutOfBounds,
    TooManyLevels,
    TruncatedData,
    UnsupportedMaxval,
)

_WHITESPACE = b" \t\n\r\v\f"
PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


# ---------------------------------------------------------------------------
# Netpbm
# ---------------------------------------------------------------------------


class _HeaderReader:
    """Tokenizer for Netpbm headers (whitespace separated, ``#`` comments)."""

    def __init__(self, data: bytes, error=MalformedHeader):
        self.data = data
        self.pos = 0
        self.error = error

    def skip_space(self) -> None:
        data = self.data
        while self.pos < len(data):
            c = data[self.pos : self.pos + 1]
            if c == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                break

    def integer(self, what: str) -> int:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.data) and 48 <= self.data[self.pos] <= 57:
            self.pos += 1
        if start == self.pos:
            raise self.error(f"expected {what}", start)
        return int(self.data[start : self.pos])

    def raster_start(self) -> int:
        # exactly one whitespace byte separates the header from binary data
        if self.pos >= len(self.data) or self.data[self.pos] not in _WHITESPACE:
            raise self.error("missing whitespace before raster", self.pos)
        return self.pos + 1


def _magic(data: bytes, error=MalformedHeader) -> bytes:
    if len(data) < 2 or data[0:1] != b"P":
        raise error("missing Netpbm magic number", 0)
    return data[:2]


def load_pgm(data: bytes) -> np.ndarray:
    """Decode a P5 (binary) or P2 (ASCII) PGM with maxval <= 255."""
    magic = _magic(data)
    if magic not in (b"P5", b"P2"):
        raise MalformedHeader(f"unsupported magic {magic!r}", 0)
    reader = _HeaderReader(data)
    reader.pos = 2
    width = reader.integer("width")
    height = reader.integer("height")
    maxval_at = reader.pos
    maxval = reader.integer("maxval")
    if width < 1 or height < 1:
        raise MalformedHeader("image dimensions must be positive", maxval_at)
    if maxval < 1 or maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} not in 1..255", maxval_at)
    count = width * height

    if magic == b"P5":
        start = reader.raster_start()
        raster = data[start : start + count]
        if len(raster) < count:
            raise TruncatedData(f"expected {count} pixel bytes, got {len(raster)}", len(data))
        pixels = np.frombuffer(raster, dtype=np.uint8)
    else:
        values = []
        for _ in range(count):
            reader.skip_space()
            if reader.pos >= len(data):
                raise TruncatedData(f"expected {count} samples, got {len(values)}", len(data))
            at = reader.pos
            v = reader.integer("sample")
            if v > maxval:
                raise MalformedHeader(f"sample {v} exceeds maxval {maxval}", at)
            values.append(v)
        pixels = np.array(values, dtype=np.uint8)
    return pixels.reshape(height, width).copy()


def write_pgm(image: np.ndarray) -> bytes:
    """Encode an 8-bit grayscale image as binary P5 with maxval 255."""
    image = np.asarray(image)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("expected a non-empty 2-D image")
    h, w = image.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(image, dtype=np.uint8).tobytes()


def write_ppm(image: np.ndarray) -> bytes:
    """Encode an RGB raster of shape (h, w, 3) as binary P6."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB raster")
    h, w, _ = image.shape
    if h < 1 or w < 1:
        raise ValueError("cannot encode a zero-area image")
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(image, dtype=np.uint8).tobytes()


def load_ppm(data: bytes) -> np.ndarray:
    """Decode a binary P6 PPM (maxval <= 255) into an (h, w, 3) array."""
    if _magic(data) != b"P6":
        raise MalformedHeader("not a P6 file", 0)
    reader = _HeaderReader(data)
    reader.pos = 2
    width = reader.integer("width")
    height = reader.integer("height")
    maxval_at = reader.pos
    maxval = reader.integer("maxval")
    if maxval < 1 or maxval > 255:
        raise UnsupportedMaxval(f"maxval {maxval} not in 1..255", maxval_at)
    start = reader.raster_start()
    count = width * height * 3
    raster = data[start : start + count]
    if len(raster) < count:
        raise TruncatedData(f"expected {count} bytes, got {len(raster)}", len(data))
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def load_pbm(data: bytes) -> np.ndarray:
    """Decode a binary P4 bitmap; 1 bits become True."""
    if _magic(data, MalformedPbm) != b"P4":
        raise MalformedPbm("not a P4 file", 0)
    reader = _HeaderReader(data, MalformedPbm)
    reader.pos = 2
    width = reader.integer("width")
    height = reader.integer("height")
    if width < 1 or height < 1:
        raise MalformedPbm("bitmap dimensions must be positive", reader.pos)
    start = reader.raster_start()
    stride = (width + 7) // 8
    raster = data[start : start + stride * height]
    if len(raster) < stride * height:
        raise MalformedPbm(f"expected {stride * height} bytes, got {len(raster)}", len(data))
    rows = np.frombuffer(raster, dtype=np.uint8).reshape(height, stride)
    return np.unpackbits(rows, axis=1)[:, :width].astype(bool)


def write_pbm(mask: np.ndarray) -> bytes:
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.size == 0:
        raise ValueError("expected a non-empty 2-D mask")
    h, w = mask.shape
    return b"P4\n%d %d\n" % (w, h) + np.packbits(mask, axis=1).tobytes()


# ---------------------------------------------------------------------------
# Float images, pyramids, gradients
# ---------------------------------------------------------------------------


def to_float(image: np.ndarray) -> np.ndarray:
    return np.asarray(image).astype(np.float64)


def _smooth_axis(img: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0), (0, 0)]
    pad[axis] = (2, 2)
    p = np.pad(img, pad, mode="edge")
    n = img.shape[axis]
    k = PYRAMID_KERNEL
    take = lambda i: p[i : i + n] if axis == 0 else p[:, i : i + n]  # noqa: E731
    return k[0] * (take(0) + take(4)) + k[1] * (take(1) + take(3)) + k[2] * take(2)


def smooth(img: np.ndarray) -> np.ndarray:
    """Separable (1,4,6,4,1)/16 blur with clamped borders."""
    return _smooth_axis(_smooth_axis(img, 1), 0)


def gradient(img: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Central differences inside, one-sided differences on the border rows/cols."""
    h, w = img.shape
    if h < 3 or w < 3:
        raise ImageTooSmall(f"gradient needs at least 3x3, got {w}x{h}")
    ix = np.empty_like(img, dtype=np.float64)
    iy = np.empty_like(img, dtype=np.float64)
    ix[:, 1:-1] = (img[:, 2:] - img[:, :-2]) * 0.5
    ix[:, 0] = img[:, 1] - img[:, 0]
    ix[:, -1] = img[:, -1] - img[:, -2]
    iy[1:-1, :] = (img[2:, :] - img[:-2, :]) * 0.5
    iy[0, :] = img[1, :] - img[0, :]
    iy[-1, :] = img[-1, :] - img[-2, :]
    return ix, iy


@dataclass(frozen=True)
class Pyramid:
    """Level 0 is full resolution; each level above halves both dimensions.

    ``grads`` holds ``(Ix, Iy)`` per level when the pyramid is used as the
    reference frame of a flow computation.
    """

    levels: List[np.ndarray]
    grads: Optional[List[Tuple[np.ndarray, np.ndarray]]] = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.levels[0].shape

    def with_gradients(self) -> "Pyramid":
        if self.grads is not None:
            return self
        grads = []
        for level in self.levels:
            if min(level.shape) < 3:
                raise ImageTooSmall(f"pyramid level {level.shape} too small for gradients")
            grads.append(_kernels.gradient(level))
        return Pyramid(self.levels, grads)


def pyr_down(img: np.ndarray) -> np.ndarray:
    """Reference (numpy) form of one pyramid reduction step."""
    return smooth(img)[: img.shape[0] // 2 * 2 : 2, : img.shape[1] // 2 * 2 : 2]


def build_pyramid(image: np.ndarray, levels: int, with_gradients: bool = False) -> Pyramid:
    """Blur-and-decimate pyramid; level 0 is ``image`` itself."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    need = 1 << (levels - 1)
    if h < need or w < need:
        raise TooManyLevels(f"{w}x{h} image cannot hold {levels} pyramid levels")
    out = [image]
    for _ in range(1, levels):
        out.append(_kernels.pyr_down(out[-1]))
    pyr = Pyramid(out)
    return pyr.with_gradients() if with_gradients else pyr


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def bilinear_sample(img: np.ndarray, x: float, y: float) -> float:
    h, w = img.shape
    if not (0.0 <= x <= w - 1 and 0.0 <= y <= h - 1):
        raise OutOfBounds(f"({x}, {y}) outside {w}x{h} image")
    return float(sample_clamped(img, np.array([x]), np.array([y]))[0])


def sample_clamped(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised bilinear interpolation; coordinates are clamped to the image."""
    h, w = img.shape
    xs = np.clip(xs, 0.0, w - 1)
    ys = np.clip(ys, 0.0, h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(ys).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


# ---------------------------------------------------------------------------
# Morphology
# ---------------------------------------------------------------------------


def erode(mask: np.ndarray, iterations: int) -> np.ndarray:
    """3x3 square erosion; pixels outside the mask count as unset."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    out = np.asarray(mask, dtype=bool).copy()
    for _ in range(iterations):
        if not out.any():
            break
        # the 3x3 square is separable: erode along rows, then along columns
        row = out.copy()
        row[:, 1:] &= out[:, :-1]
        row[:, :-1] &= out[:, 1:]
        row[:, 0] = False
        row[:, -1] = False
        out = row.copy()
        out[1:] &= row[:-1]
        out[:-1] &= row[1:]
        out[0] = False
        out[-1] = False
    return out
