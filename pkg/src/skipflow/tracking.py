"""Boxes, interest-point sampling and per-track flow propagation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import AllPointsLost, DegenerateVariance, EmptyInput, NoEligiblePixels
from .imaging import erode
from .optflow import FlowResult, FlowStatus

# chi-square(2 dof) quantile is closed form: -2 ln(1 - p)
DEFAULT_HOTELLING_CONFIDENCE = 0.99
_SINGULAR_DET = 1e-12
# Positional noise floor (px^2) added to the covariance the outlier test
# uses: sub-pixel flow jitter across a near-degenerate point set (e.g. all
# points in one pixel column) must not read as a huge Mahalanobis distance.
POSITION_NOISE_VAR = 0.01


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive size, got w={self.w} h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def shifted(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float = 1.0
    mask: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class Track:
    id: int
    bbox: BBox
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)), compare=False)
    miss_frames: int = 0
    age: int = 0
    hits: int = 1

    def __post_init__(self):
        if self.id < 1:
            raise ValueError("track ids start at 1")
        if self.miss_frames < 0:
            raise ValueError("miss_frames must be >= 0")


def iou(a: BBox, b: BBox) -> float:
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    # (x + w) - x can round above w; keep the ratio a ratio
    return min(inter / (a.area + b.area - inter), 1.0)


def iou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> np.ndarray:
    if not a or not b:
        return np.zeros((len(a), len(b)))
    A = np.array([x.as_tuple() for x in a])
    B = np.array([x.as_tuple() for x in b])
    ix = np.minimum(A[:, None, 0] + A[:, None, 2], B[None, :, 0] + B[None, :, 2]) - np.maximum(
        A[:, None, 0], B[None, :, 0]
    )
    iy = np.minimum(A[:, None, 1] + A[:, None, 3], B[None, :, 1] + B[None, :, 3]) - np.maximum(
        A[:, None, 1], B[None, :, 1]
    )
    inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
    union = (A[:, 2] * A[:, 3])[:, None] + (B[:, 2] * B[:, 3])[None, :] - inter
    return np.minimum(inter / union, 1.0)


def head_band(bbox: BBox, frac: float = 0.3) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """Return ``((x0, x1), (y0, y1))`` half-open ranges of the top ``frac`` of the box."""
    if not 0.0 < frac <= 1.0:
        raise ValueError("frac must be in (0, 1]")
    return (bbox.x, bbox.x + bbox.w), (bbox.y, bbox.y + frac * bbox.h)


def head_band_pixels(bbox: BBox, frac: float = 0.3) -> Tuple[range, range]:
    """Integer pixel columns and rows whose centres fall in the head band.

    At least the top pixel row and one column are always included.
    """
    (x0, x1), (y0, y1) = head_band(bbox, frac)
    c0 = math.floor(x0)
    c1 = max(math.ceil(x1), c0 + 1)
    r0 = math.floor(y0)
    r1 = max(math.ceil(y1), r0 + 1)
    # pixel centre (c + 0.5) must lie in [x0, x1)
    cols = [c for c in range(c0, c1) if x0 <= c + 0.5 < x1] or [c0]
    rows = [r for r in range(r0, r1) if y0 <= r + 0.5 < y1] or [r0]
    return range(cols[0], cols[-1] + 1), range(rows[0], rows[-1] + 1)


def sample_points(
    bbox: BBox,
    mask: Optional[np.ndarray],
    q: int,
    erosion_iters: int,
    rng: np.random.Generator,
    head_frac: float = 0.3,
    limits: Optional[Tuple[int, int, int, int]] = None,
) -> np.ndarray:
    """Draw up to ``q`` distinct head-band pixels, returned as (x, y) pixel centres.

    ``mask`` is cropped to the box: ``mask[r, c]`` covers the pixel at
    ``(floor(bbox.x) + c, floor(bbox.y) + r)``. ``limits`` is an inclusive
    ``(col_min, row_min, col_max, row_max)`` pixel range points must fall in.
    Raises NoEligiblePixels when nothing is left.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    cols, rows = head_band_pixels(bbox, head_frac)
    cc, rr = np.meshgrid(np.arange(cols.start, cols.stop), np.arange(rows.start, rows.stop))
    cc = cc.ravel()
    rr = rr.ravel()
    if limits is not None:
        c_lo, r_lo, c_hi, r_hi = limits
        keep = (cc >= c_lo) & (cc <= c_hi) & (rr >= r_lo) & (rr <= r_hi)
        cc = cc[keep]
        rr = rr[keep]
    if mask is not None:
        mc = cc - math.floor(bbox.x)
        mr = rr - math.floor(bbox.y)
        # erosion only reaches erosion_iters rows, so eroding the head band
        # plus that margin gives the same band rows as eroding the whole mask
        top = max(rows.start - math.floor(bbox.y) - erosion_iters, 0)
        bottom = max(rows.stop - math.floor(bbox.y) + erosion_iters, top)
        eroded = np.zeros(np.shape(mask), dtype=bool)
        band = np.asarray(mask, dtype=bool)[top:bottom]
        if band.size:
            eroded[top:bottom] = erode(band, erosion_iters)
        mh, mw = eroded.shape
        inside = (mc >= 0) & (mc < mw) & (mr >= 0) & (mr < mh)
        keep = np.zeros(len(cc), dtype=bool)
        keep[inside] = eroded[mr[inside], mc[inside]]
        cc = cc[keep]
        rr = rr[keep]
    if len(cc) == 0:
        raise NoEligiblePixels("no eligible pixels in the head band")
    if len(cc) > q:
        pick = np.sort(rng.choice(len(cc), size=q, replace=False))
        cc = cc[pick]
        rr = rr[pick]
    return np.column_stack([cc + 0.5, rr + 0.5]).astype(np.float64)


def median_shift(displacements) -> Tuple[float, float]:
    d = np.asarray(displacements, dtype=np.float64).reshape(-1, 2)
    if len(d) == 0:
        raise EmptyInput("median of an empty displacement list")
    # np.median averages the two middle values for even counts
    m = np.median(d, axis=0)
    return float(m[0]), float(m[1])


def hotelling_threshold(confidence: float = DEFAULT_HOTELLING_CONFIDENCE, n: Optional[int] = None) -> float:
    """Gate on the squared Mahalanobis distance of a point from the other points.

    Without ``n`` this is the large-sample chi-square(2) quantile
    ``-2 ln(1 - confidence)`` (9.21 at 0.99). With ``n`` points, a point
    judged against the remaining ``m = n - 1`` follows Hotelling's
    prediction law ``m/(m+1) d^2 ~ 2(m-1)/(m-2) F(2, m-2)``; the F(2, k)
    quantile is closed form.
    """
    if n is None:
        return -2.0 * math.log(1.0 - confidence)
    m = n - 1
    k = m - 2
    if k < 1:
        raise ValueError("need at least 4 points")
    f = 0.5 * k * ((1.0 - confidence) ** (-2.0 / k) - 1.0)
    return (m + 1) / m * 2.0 * (m - 1) / k * f


def hotelling_mask(points, confidence: float = DEFAULT_HOTELLING_CONFIDENCE) -> np.ndarray:
    """Boolean keep-mask for :func:`hotelling_filter`.

    Each point is scored against the mean and sample covariance of the
    *other* points. With the point left in, a lone outlier among ten points
    can never score above (n-1)^2/n = 8.1, below any sensible gate.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(p)
    keep = np.ones(n, dtype=bool)
    if n < 4:
        return keep
    c = p - p.mean(axis=0)
    full = c.T @ c / (n - 1)
    if not abs(np.linalg.det(full)) >= _SINGULAR_DET:
        return keep
    total = c.sum(axis=0)
    outer = c.T @ c
    mean_o = (total[None, :] - c) / (n - 1)
    # covariance of the remaining n-1 points, one 2x2 per left-out point
    xx = (outer[0, 0] - c[:, 0] ** 2 - (n - 1) * mean_o[:, 0] ** 2) / (n - 2) + POSITION_NOISE_VAR
    xy = (outer[0, 1] - c[:, 0] * c[:, 1] - (n - 1) * mean_o[:, 0] * mean_o[:, 1]) / (n - 2)
    yy = (outer[1, 1] - c[:, 1] ** 2 - (n - 1) * mean_o[:, 1] ** 2) / (n - 2) + POSITION_NOISE_VAR
    det = xx * yy - xy * xy
    dx = c[:, 0] - mean_o[:, 0]
    dy = c[:, 1] - mean_o[:, 1]
    judged = det >= _SINGULAR_DET
    safe = np.where(judged, det, 1.0)
    d2 = (yy * dx * dx - 2.0 * xy * dx * dy + xx * dy * dy) / safe
    keep[judged] = d2[judged] <= hotelling_threshold(confidence, n)
    return keep


def hotelling_filter(points, confidence: float = DEFAULT_HOTELLING_CONFIDENCE) -> np.ndarray:
    """Drop points that fail the Hotelling T^2 outlier test.

    Sets with fewer than 4 points or a (near) singular covariance come back
    unchanged.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return p[hotelling_mask(p, confidence)]


def variance(points) -> float:
    """Mean squared distance to the centroid."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(p) == 0:
        raise EmptyInput("variance of an empty point set")
    return float(((p - p.mean(axis=0)) ** 2).sum(axis=1).mean())


def variance_ratio(
    prev_points, displacements, confidence: float = DEFAULT_HOTELLING_CONFIDENCE
) -> float:
    """Spread of the moved points over their spread before the move.

    Outliers are found on the moved set and left out of both variances, so
    numerator and denominator describe the same points.
    """
    prev = np.asarray(prev_points, dtype=np.float64).reshape(-1, 2)
    d = np.asarray(displacements, dtype=np.float64).reshape(-1, 2)
    if len(prev) == 0 or len(prev) != len(d):
        raise EmptyInput("point and displacement lists must be non-empty and aligned")
    moved = prev + d
    keep = hotelling_mask(moved, confidence)
    before = variance(prev[keep])
    if before == 0.0:
        raise DegenerateVariance("previous point set has zero spread")
    return variance(moved[keep]) / before


def propagate(
    track: Track, flows: Sequence[FlowResult], confidence: float = DEFAULT_HOTELLING_CONFIDENCE
) -> Track:
    """Move a track by the median flow of its surviving points; size and id stay."""
    if len(flows) != len(track.points):
        raise ValueError("flows must align with track points")
    ok = np.array([f.status == FlowStatus.OK for f in flows], dtype=bool)
    disp = np.array([f.displacement for f in flows], dtype=np.float64).reshape(-1, 2)
    new_track, _ = propagate_arrays(track, disp, ok, confidence)
    return new_track


def propagate_arrays(
    track: Track, disp: np.ndarray, ok: np.ndarray, confidence: float = DEFAULT_HOTELLING_CONFIDENCE
) -> Tuple[Track, float]:
    """Array form of :func:`propagate`; also returns the variance ratio.

    The ratio is :func:`variance_ratio` over the points that flowed; a
    zero-spread starting set yields 1.0.
    """
    if not ok.any():
        raise AllPointsLost(f"track {track.id} lost every interest point")
    prev = track.points[ok]
    d = disp[ok]
    moved = prev + d
    # same mask and ratio as variance_ratio(prev, d), computed once
    keep = hotelling_mask(moved, confidence)
    before = variance(prev[keep])
    alpha = variance(moved[keep]) / before if before > 0.0 else 1.0
    dx, dy = median_shift(d[keep])
    return replace(track, bbox=track.bbox.shifted(dx, dy), points=moved[keep], age=track.age + 1), alpha


class Termination(enum.Enum):
    CONTINUE = "continue"
    POINT_LOSS = "point_loss"
    VARIANCE = "variance"
    MISS_TIMEOUT = "miss_timeout"


def should_terminate(
    track: Track,
    alpha: float,
    min_points: int = 3,
    tau_var: float = 2.0,
    max_miss: int = 10,
    use_variance: bool = True,
) -> Termination:
    if len(track.points) < min_points:
        return Termination.POINT_LOSS
    if use_variance and alpha > tau_var:
        return Termination.VARIANCE
    if track.miss_frames > max_miss:
        return Termination.MISS_TIMEOUT
    return Termination.CONTINUE
