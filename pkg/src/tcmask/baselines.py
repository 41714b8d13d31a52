"""Privileged heuristic trackers emitting prediction triplets.

All four heuristics are deterministic functions of ground-truth annotations
(and, for the simplest one, the query mask alone). "Full occlusion" means
the target's occlusion fraction is at or above 95%, or undefined because the
target left the frame; a run of such frames ends when the target re-emerges
below the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .label import FrameLabel, AnnotationTriplet, OCCLUSION_THRESHOLD, _runs
from .render import FrameMasks, QueryMask


@dataclass(frozen=True)
class PredictionTriplet:
    """Predicted (target, occluder, container) planes, values in [0, 1]."""

    m_t: np.ndarray  # (T, H, W)
    m_o: np.ndarray
    m_c: np.ndarray


def _occluded_flags(labels: list[FrameLabel], target_id: int) -> list[bool]:
    occ = [lab.occlusion[target_id - 1] for lab in labels]
    return [not (not np.isnan(o) and o < OCCLUSION_THRESHOLD) for o in occ]


def _centroid(mask: np.ndarray) -> np.ndarray | None:
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return None
    return np.array([ys.mean(), xs.mean()])


def _shift_mask(mask: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Integer translation; content moved past the border is cropped."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    ys0, ys1 = max(0, dy), min(h, h + dy)
    xs0, xs1 = max(0, dx), min(w, w + dx)
    if ys0 >= ys1 or xs0 >= xs1:
        return out
    out[ys0:ys1, xs0:xs1] = mask[ys0 - dy : ys1 - dy, xs0 - dx : xs1 - dx]
    return out


def copy_query(query: QueryMask, frame_count: int) -> PredictionTriplet:
    """Propagate the frame-0 query mask unchanged through the whole clip."""
    m_t = np.broadcast_to(query.mask, (frame_count,) + query.mask.shape).copy()
    zeros = np.zeros_like(m_t)
    return PredictionTriplet(m_t=m_t, m_o=zeros, m_c=zeros.copy())


def static_mask(gt: AnnotationTriplet, labels: list[FrameLabel]) -> PredictionTriplet:
    """Perfect tracking, except full occlusions freeze the last X-ray mask."""
    m_t = gt.m_t.copy()
    for start, end in _runs(_occluded_flags(labels, gt.target_id)):
        held = gt.m_t[start - 1] if start > 0 else gt.m_t[0]
        m_t[start:end] = held
    zeros = np.zeros_like(m_t)
    return PredictionTriplet(m_t=m_t, m_o=zeros, m_c=zeros.copy())


def linear_extrapolation(gt: AnnotationTriplet, labels: list[FrameLabel]) -> PredictionTriplet:
    """Static mask plus a constant-velocity drift during full occlusions.

    The velocity is the target centroid displacement between the two frames
    preceding the occlusion onset; it stays fractional and is rounded to
    whole pixels only when each frame's mask is pasted. Onsets before frame 2
    (or with an empty reference mask) fall back to zero velocity.
    """
    m_t = gt.m_t.copy()
    for start, end in _runs(_occluded_flags(labels, gt.target_id)):
        held = gt.m_t[start - 1] if start > 0 else gt.m_t[0]
        velocity = np.zeros(2)
        if start >= 2:
            c_prev = _centroid(gt.m_t[start - 1])
            c_prev2 = _centroid(gt.m_t[start - 2])
            if c_prev is not None and c_prev2 is not None:
                velocity = c_prev - c_prev2
        for tau in range(start, end):
            offset = (tau - (start - 1)) * velocity
            m_t[tau] = _shift_mask(held, int(np.rint(offset[0])), int(np.rint(offset[1])))
    zeros = np.zeros_like(m_t)
    return PredictionTriplet(m_t=m_t, m_o=zeros, m_c=zeros.copy())


def jump_to_occluder(
    gt: AnnotationTriplet, labels: list[FrameLabel], all_masks: list[FrameMasks]
) -> PredictionTriplet:
    """Track the target until it disappears, then track whatever hid it.

    From the first full occlusion with a known occluder, the occluder's X-ray
    mask fills the occluder channel; if that instance itself becomes at least
    95% occluded, the tracker hops to *its* main occluder, recursively. The
    heuristic never claims containment.
    """
    target = gt.target_id
    t_count = len(labels)
    m_t = np.zeros_like(gt.m_t)
    m_o = np.zeros_like(gt.m_t)

    jump_frame = None
    for lab in labels:
        if lab.main_occluder[target - 1] is not None:
            jump_frame = lab.frame_index
            break

    horizon = t_count if jump_frame is None else jump_frame
    m_t[:horizon] = gt.m_t[:horizon]
    if jump_frame is None:
        return PredictionTriplet(m_t=m_t, m_o=m_o, m_c=np.zeros_like(gt.m_t))

    current = labels[jump_frame].main_occluder[target - 1]
    for tau in range(jump_frame, t_count):
        lab = labels[tau]
        visited = {current}
        while True:
            o = lab.occlusion[current - 1]
            if np.isnan(o) or o < OCCLUSION_THRESHOLD:
                break
            nxt = lab.main_occluder[current - 1]
            if nxt is None or nxt in visited:
                break
            visited.add(nxt)
            current = nxt
        m_o[tau] = all_masks[tau].xray[current - 1]
    return PredictionTriplet(m_t=m_t, m_o=m_o, m_c=np.zeros_like(gt.m_t))


METHODS = {
    "copy-query": copy_query,
    "static-mask": static_mask,
    "linear-extrapolation": linear_extrapolation,
    "jump-to-occluder": jump_to_occluder,
}
