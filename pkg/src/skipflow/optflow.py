"""Sparse pyramidal Lucas-Kanade point tracker.

Coarse-to-fine: each level refines the estimate handed down from the level
above (doubled), iterating Gauss-Newton steps on the windowed intensity
mismatch until the update drops below ``epsilon``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch
from . import _kernels
from .imaging import Pyramid


class FlowStatus(enum.IntEnum):
    OK = 0
    LOST_SINGULAR = 1
    LOST_OUT_OF_BOUNDS = 2
    LOST_DIVERGED = 3


@dataclass(frozen=True)
class LkParams:
    window_half: int = 7
    levels: int = 3
    max_iters: int = 30
    epsilon: float = 0.01
    min_eigen: float = 1e-4
    max_residual: float = 20.0

    def __post_init__(self):
        if self.window_half < 1:
            raise ValueError("window_half must be >= 1")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.min_eigen < 0:
            raise ValueError("min_eigen must be >= 0")


@dataclass(frozen=True)
class FlowResult:
    displacement: Tuple[float, float]
    status: FlowStatus
    residual: float

    @property
    def ok(self) -> bool:
        return self.status == FlowStatus.OK


def track_points(
    prev: Pyramid, nxt: Pyramid, points: np.ndarray, params: LkParams = LkParams()
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of :func:`lk_track`.

    ``points`` is an ``(n, 2)`` array of (x, y) level-0 positions. Returns
    ``(displacements (n, 2), status (n,), residual (n,))``.
    """
    if prev.shape != nxt.shape:
        raise DimensionMismatch(f"pyramid shapes differ: {prev.shape} vs {nxt.shape}")
    if prev.depth < params.levels or nxt.depth < params.levels:
        raise DimensionMismatch(
            f"pyramids have {prev.depth}/{nxt.depth} levels, need {params.levels}"
        )
    prev = prev.with_gradients()

    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    disp = np.zeros((n, 2))
    status = np.full(n, FlowStatus.OK, dtype=np.int8)
    residual = np.zeros(n)
    if n == 0:
        return disp, status, residual

    hw = params.window_half
    height, width = prev.shape
    inside = (
        np.isfinite(pts).all(axis=1)
        & (pts[:, 0] - hw >= 0)
        & (pts[:, 0] + hw <= width - 1)
        & (pts[:, 1] - hw >= 0)
        & (pts[:, 1] + hw <= height - 1)
    )
    status[~inside] = FlowStatus.LOST_OUT_OF_BOUNDS
    live = np.flatnonzero(inside)
    if live.size == 0:
        return disp, status, residual

    guess = np.zeros((live.size, 2))
    est = np.zeros((live.size, 2))
    trackable = np.zeros(live.size, dtype=np.bool_)
    res = np.zeros(live.size)
    for level in range(params.levels - 1, -1, -1):
        scale = 1.0 / (1 << level)
        ix, iy = prev.grads[level]
        _kernels.lk_level(
            prev.levels[level], ix, iy, nxt.levels[level],
            pts[live] * scale, guess, hw, params.max_iters, params.epsilon,
            params.min_eigen, level == 0, est, trackable, res,
        )
        if level > 0:
            # untrackable at a coarse level just keeps its guess
            guess = 2.0 * est
    disp[live] = est
    residual[live] = res

    status[live[~trackable]] = FlowStatus.LOST_SINGULAR
    good = live[trackable]
    d = disp[good]
    finite = np.isfinite(d).all(axis=1)
    end = pts[good] + np.where(finite[:, None], d, 0.0)
    in_img = (
        (end[:, 0] - hw >= 0)
        & (end[:, 0] + hw <= width - 1)
        & (end[:, 1] - hw >= 0)
        & (end[:, 1] + hw <= height - 1)
    )
    status[good[~finite]] = FlowStatus.LOST_DIVERGED
    status[good[finite & ~in_img]] = FlowStatus.LOST_OUT_OF_BOUNDS
    diverged = finite & in_img & ~(residual[good] <= params.max_residual)
    status[good[diverged]] = FlowStatus.LOST_DIVERGED
    bad = status != FlowStatus.OK
    disp[bad & ~np.isfinite(disp).all(axis=1)] = np.nan
    return disp, status, residual


def lk_track(
    prev: Pyramid, nxt: Pyramid, points: Sequence[Tuple[float, float]], params: LkParams = LkParams()
) -> List[FlowResult]:
    """Estimate the displacement of each point from ``prev`` to ``nxt``.

    Results are in input order. ``prev`` gets its gradients computed if the
    pyramid was built without them.
    """
    disp, status, residual = track_points(prev, nxt, np.asarray(points, dtype=np.float64), params)
    return [
        FlowResult((float(d[0]), float(d[1])), FlowStatus(int(s)), float(r))
        for d, s, r in zip(disp, status, residual)
    ]
