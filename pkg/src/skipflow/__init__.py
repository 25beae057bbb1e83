"""Multi-object tracking that runs the detector only every L frames.

Between detection frames, tracks are carried by the median sparse
Lucas-Kanade flow of a handful of interest points sampled near the top of
each box. Detection frames re-anchor tracks by IoU-gated Hungarian
matching.
"""

__version__ = "0.1.0"

from .association import Assignment, gated_match, hungarian
from .config import Config, format_config, parse_config
from .imaging import Pyramid, build_pyramid, load_pgm, write_pgm
from .metrics import EvalReport, evaluate
from .motio import DetRow, GtRow, ResultRow
from .optflow import FlowStatus, LkParams, lk_track, track_points
from .pipeline import FrameBundle, TimingReport, Tracker, run
from .tracking import BBox, Detection, Termination, Track, iou, variance_ratio

__all__ = [
    "Assignment",
    "BBox",
    "Config",
    "DetRow",
    "Detection",
    "EvalReport",
    "FlowStatus",
    "FrameBundle",
    "GtRow",
    "LkParams",
    "Pyramid",
    "ResultRow",
    "Termination",
    "TimingReport",
    "Track",
    "Tracker",
    "build_pyramid",
    "evaluate",
    "format_config",
    "gated_match",
    "hungarian",
    "iou",
    "lk_track",
    "load_pgm",
    "parse_config",
    "run",
    "track_points",
    "variance_ratio",
    "write_pgm",
]
