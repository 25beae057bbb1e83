"""Minimum-cost assignment and IoU-gated track/detection matching."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .tracking import BBox, iou_matrix


@dataclass
class Assignment:
    matches: List[Tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: List[int] = field(default_factory=list)
    unmatched_detections: List[int] = field(default_factory=list)


def _solve_rows_le_cols(cost: np.ndarray) -> np.ndarray:
    """Shortest augmenting path Hungarian method for n <= m.

    Returns ``col_of_row`` (length n). Rows are inserted in index order and
    ties pick the lowest column, so the result is reproducible.
    """
    n, m = cost.shape
    INF = np.inf
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    row_of_col = np.zeros(m + 1, dtype=np.intp)  # 1-based rows; 0 = free
    way = np.zeros(m + 1, dtype=np.intp)
    for i in range(1, n + 1):
        row_of_col[0] = i
        j0 = 0
        minv = np.full(m + 1, INF)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of_col[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            cand = np.where(free, minv[1:], INF)
            j1 = int(np.argmin(cand)) + 1
            delta = cand[j1 - 1]
            used_idx = np.flatnonzero(used)
            u[row_of_col[used_idx]] += delta
            v[used_idx] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if row_of_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of_col[j0] = row_of_col[j1]
            j0 = j1
    col_of_row = np.full(n, -1, dtype=np.intp)
    for j in range(1, m + 1):
        if row_of_col[j]:
            col_of_row[row_of_col[j] - 1] = j - 1
    return col_of_row


def hungarian(costs) -> List[Tuple[int, int]]:
    """Minimum-total-cost matching of ``min(rows, cols)`` pairs.

    Returns ``(row, col)`` pairs sorted by row. An empty matrix gives no pairs.
    """
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if c.size == 0:
        return []
    if not np.isfinite(c).all():
        raise ValueError("cost matrix must be finite")
    if c.shape[0] <= c.shape[1]:
        cols = _solve_rows_le_cols(c)
        return [(i, int(j)) for i, j in enumerate(cols)]
    rows = _solve_rows_le_cols(c.T)
    return sorted((int(i), j) for j, i in enumerate(rows))


def assignment_cost(costs, matches) -> float:
    c = np.asarray(costs, dtype=np.float64)
    return float(sum(c[i, j] for i, j in matches))


def gated_match(tracks: Sequence[BBox], detections: Sequence[BBox], gate: float = 0.7) -> Assignment:
    """Hungarian on ``1 - IoU``; any pair costing more than ``gate`` is split afterwards."""
    if not 0.0 <= gate <= 1.0:
        raise ValueError("gate must lie in [0, 1]")
    cost = 1.0 - iou_matrix(list(tracks), list(detections))
    out = Assignment()
    for i, j in hungarian(cost) if cost.size else []:
        if cost[i, j] > gate:
            continue
        out.matches.append((i, j))
    matched_t = {i for i, _ in out.matches}
    matched_d = {j for _, j in out.matches}
    out.unmatched_tracks = [i for i in range(len(tracks)) if i not in matched_t]
    out.unmatched_detections = [j for j in range(len(detections)) if j not in matched_d]
    return out
