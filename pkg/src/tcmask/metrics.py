"""Jaccard scoring of prediction triplets, per video and aggregated.

The target score averages over every frame; occluder and container scores
average only over frames where the ground truth has one, and aggregate
across videos weighted by those frame counts (a micro-average: identical to
pooling the qualifying frames of all videos). Two empty masks count as a
perfect match, so correctly predicting "nothing there" is not penalized; a
nonempty prediction against an empty ground truth scores zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import PredictionTriplet
from .label import AnnotationTriplet, TargetFrameRecord, OCCLUSION_THRESHOLD

DEFAULT_THRESHOLD = 0.5


def frame_iou(pred: np.ndarray, threshold: float, gt: np.ndarray) -> float:
    """IoU of the thresholded prediction against a boolean ground-truth plane."""
    pred = np.asarray(pred)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    binary = pred >= threshold
    union = int(np.count_nonzero(binary | gt))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(binary & gt)) / union


@dataclass(frozen=True)
class EvalReport:
    """Per-video Jaccard scores; None where no qualifying frames exist."""

    j_tgt_all: float
    j_tgt_invis: float | None
    j_occl: float | None
    j_cont: float | None
    n_frames: int
    n_invis: int
    n_occl: int
    n_cont: int

    def to_json(self) -> dict:
        return {
            "J_tgt_all": self.j_tgt_all,
            "J_tgt_invis": self.j_tgt_invis,
            "J_occl": self.j_occl,
            "J_cont": self.j_cont,
            "n_frames": self.n_frames,
            "n_invis": self.n_invis,
            "n_occl": self.n_occl,
            "n_cont": self.n_cont,
        }


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def score_video(
    pred: PredictionTriplet,
    gt: AnnotationTriplet,
    records: list[TargetFrameRecord],
    threshold: float = DEFAULT_THRESHOLD,
) -> EvalReport:
    """Score one clip; `records` carries the target's per-frame label state."""
    t_count = gt.m_t.shape[0]
    if pred.m_t.shape != gt.m_t.shape:
        raise ValueError("prediction and ground truth shapes differ")
    if len(records) != t_count:
        raise ValueError("per-frame records do not cover the video")

    tgt_ious = [frame_iou(pred.m_t[t], threshold, gt.m_t[t]) for t in range(t_count)]
    invis_ious, occl_ious, cont_ious = [], [], []
    for rec in records:
        o = rec.occlusion_fraction
        if o is not None and o >= OCCLUSION_THRESHOLD:
            invis_ious.append(tgt_ious[rec.t])
        if rec.main_occluder is not None:
            occl_ious.append(frame_iou(pred.m_o[rec.t], threshold, gt.m_o[rec.t]))
        if rec.main_container is not None:
            cont_ious.append(frame_iou(pred.m_c[rec.t], threshold, gt.m_c[rec.t]))

    return EvalReport(
        j_tgt_all=sum(tgt_ious) / t_count,
        j_tgt_invis=_mean(invis_ious),
        j_occl=_mean(occl_ious),
        j_cont=_mean(cont_ious),
        n_frames=t_count,
        n_invis=len(invis_ious),
        n_occl=len(occl_ious),
        n_cont=len(cont_ious),
    )


@dataclass(frozen=True)
class AggregateReport:
    j_tgt_all: float
    j_tgt_invis: float | None
    j_occl: float | None
    j_cont: float | None
    n_videos: int

    def to_json(self) -> dict:
        return {
            "J_tgt_all": self.j_tgt_all,
            "J_tgt_invis": self.j_tgt_invis,
            "J_occl": self.j_occl,
            "J_cont": self.j_cont,
            "n_videos": self.n_videos,
        }


def aggregate(reports: list[EvalReport]) -> AggregateReport:
    """Uniform mean for target scores, count-weighted for occluder/container."""
    if not reports:
        raise ValueError("aggregate needs at least one report")

    def weighted(pairs: list[tuple[float, int]]) -> float | None:
        total = sum(n for _, n in pairs)
        if total == 0:
            return None
        return sum(j * n for j, n in pairs) / total

    invis = [r.j_tgt_invis for r in reports if r.j_tgt_invis is not None]
    return AggregateReport(
        j_tgt_all=sum(r.j_tgt_all for r in reports) / len(reports),
        j_tgt_invis=_mean(invis),
        j_occl=weighted([(r.j_occl, r.n_occl) for r in reports if r.j_occl is not None]),
        j_cont=weighted([(r.j_cont, r.n_cont) for r in reports if r.j_cont is not None]),
        n_videos=len(reports),
    )


_COLUMNS = ("J_tgt,all", "J_tgt,invis", "J_occl", "J_cont")


def format_table(rows: list[tuple[str, EvalReport | AggregateReport]]) -> str:
    """Fixed-width score table with the four benchmark columns."""
    name_width = max(len("video"), *(len(name) for name, _ in rows))
    header = "video".ljust(name_width) + "".join(c.rjust(13) for c in _COLUMNS)
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        vals = (rep.j_tgt_all, rep.j_tgt_invis, rep.j_occl, rep.j_cont)
        cells = "".join(
            ("-" if v is None else f"{v:.4f}").rjust(13) for v in vals
        )
        lines.append(name.ljust(name_width) + cells)
    return "\n".join(lines)
