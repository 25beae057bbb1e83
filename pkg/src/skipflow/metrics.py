"""CLEAR-MOT evaluation (MOTA, IDsw, Frag, MT/ML, recall, precision)."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence

import numpy as np

from .association import hungarian
from .errors import EmptyGroundTruth
from .motio import GtRow, ResultRow
from .tracking import iou_matrix

PEDESTRIAN = 1


@dataclass
class EvalReport:
    num_gt: int
    num_objects: int
    tp: int
    fp: int
    fn: int
    idsw: int
    frag: int
    mt: int
    ml: int
    recall: float
    precision: float
    mota: float

    COLUMNS = ("MT", "ML", "Rcll", "Prcn", "IDsw", "Frag", "MOTA")

    def row(self) -> tuple:
        return (
            self.mt,
            self.ml,
            100.0 * self.recall,
            100.0 * self.precision,
            self.idsw,
            self.frag,
            100.0 * self.mota,
        )

    def as_text(self) -> str:
        head = " ".join(f"{c:>7}" for c in self.COLUMNS)
        mt, ml, rc, pr, ids, frag, mota = self.row()
        body = f"{mt:>7d} {ml:>7d} {rc:>7.1f} {pr:>7.1f} {ids:>7d} {frag:>7d} {mota:>7.1f}"
        extra = (
            f"GT={self.num_gt} objects={self.num_objects} TP={self.tp} FP={self.fp} "
            f"FN={self.fn} MOTA={self.mota:.3f}"
        )
        return f"{head}\n{body}\n{extra}\n"

    def as_csv(self) -> str:
        d = asdict(self)
        keys = ["mt", "ml", "recall", "precision", "idsw", "frag", "mota", "num_gt", "num_objects", "tp", "fp", "fn"]
        return ",".join(keys) + "\n" + ",".join(repr(d[k]) if isinstance(d[k], float) else str(d[k]) for k in keys) + "\n"


def _match(ious: np.ndarray, gate: float, rows: Sequence[int], cols: Sequence[int]):
    """Max-cardinality, then min-cost pairs among ``rows x cols`` with IoU >= gate."""
    if not rows or not cols:
        return []
    sub = ious[np.ix_(rows, cols)]
    allowed = sub >= gate
    if not allowed.any():
        return []
    # forbidden pairs cost more than any full set of allowed ones
    big = float(min(len(rows), len(cols)) + 1)
    cost = np.where(allowed, 1.0 - sub, big)
    return [(rows[i], cols[j]) for i, j in hungarian(cost) if allowed[i, j]]


def evaluate(
    gt: Dict[int, List[GtRow]],
    res: Dict[int, List[ResultRow]],
    iou_gate: float = 0.5,
    classes: Sequence[int] = (PEDESTRIAN,),
    considered_only: bool = True,
) -> EvalReport:
    """Frame-by-frame CLEAR-MOT accounting.

    Each frame keeps last-known correspondences that still overlap by at
    least ``iou_gate``, then solves the remaining pairs optimally. Result
    boxes that only overlap ignored ground truth (flag 0 or another class)
    are neither TP nor FP.
    """
    if not 0.0 < iou_gate <= 1.0:
        raise ValueError("iou_gate must lie in (0, 1]")

    def counted(row: GtRow) -> bool:
        return (row.considered == 1 or not considered_only) and (classes is None or row.cls in classes)

    num_gt = sum(counted(r) for rows in gt.values() for r in rows)
    if num_gt == 0:
        raise EmptyGroundTruth("no ground-truth boxes to evaluate")

    last_match: Dict[int, int] = {}
    frames_present: Dict[int, int] = defaultdict(int)
    frames_matched: Dict[int, int] = defaultdict(int)
    was_tracked: Dict[int, bool] = {}
    ever_tracked: Dict[int, bool] = defaultdict(bool)
    tp = fp = fn = idsw = frag = 0

    for t in sorted(set(gt) | set(res)):
        all_gt = gt.get(t, [])
        valid = [r for r in all_gt if counted(r)]
        ignored = [r for r in all_gt if not counted(r)]
        hyps = res.get(t, [])
        ious = iou_matrix([r.bbox for r in valid], [h.bbox for h in hyps])
        hyp_index = {h.id: j for j, h in enumerate(hyps)}

        pairs = []
        used_g, used_h = set(), set()
        for gi, g in enumerate(valid):
            hid = last_match.get(g.id)
            hj = hyp_index.get(hid) if hid is not None else None
            if hj is not None and hj not in used_h and ious[gi, hj] >= iou_gate:
                pairs.append((gi, hj))
                used_g.add(gi)
                used_h.add(hj)
        rest_g = [i for i in range(len(valid)) if i not in used_g]
        rest_h = [j for j in range(len(hyps)) if j not in used_h]
        pairs += _match(ious, iou_gate, rest_g, rest_h)

        matched_g = {}
        for gi, hj in pairs:
            g = valid[gi]
            hid = hyps[hj].id
            if g.id in last_match and last_match[g.id] != hid:
                idsw += 1
            last_match[g.id] = hid
            matched_g[gi] = hj
        tp += len(pairs)

        for gi, g in enumerate(valid):
            frames_present[g.id] += 1
            tracked = gi in matched_g
            if tracked:
                frames_matched[g.id] += 1
                if ever_tracked[g.id] and not was_tracked.get(g.id, False):
                    frag += 1
                ever_tracked[g.id] = True
            was_tracked[g.id] = tracked
        fn += len(valid) - len(pairs)

        free_h = [j for j in range(len(hyps)) if j not in {hj for _, hj in pairs}]
        if ignored and free_h:
            ign = iou_matrix([r.bbox for r in ignored], [h.bbox for h in hyps])
            dropped = _match(ign, iou_gate, list(range(len(ignored))), free_h)
            free_h = [j for j in free_h if j not in {hj for _, hj in dropped}]
        fp += len(free_h)

    ratios = [frames_matched[o] / frames_present[o] for o in frames_present]
    mt = sum(r >= 0.8 for r in ratios)
    ml = sum(r <= 0.2 for r in ratios)
    return EvalReport(
        num_gt=num_gt,
        num_objects=len(frames_present),
        tp=tp,
        fp=fp,
        fn=fn,
        idsw=idsw,
        frag=frag,
        mt=mt,
        ml=ml,
        recall=tp / num_gt,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        mota=1.0 - (fn + fp + idsw) / num_gt,
    )
