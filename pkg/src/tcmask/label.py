"""Ground-truth labeling: occlusion fractions, containment, triplets, events.

Occlusion is a 2D quantity computed from rendered masks: the fraction of an
object's X-ray pixels that other geometry hides. Containment is a 3D
quantity computed from posed bounding boxes, independent of the camera. An
instance at or above 95% occlusion is invisible and gets a main occluder
(the instance with the most visible pixels inside its X-ray footprint); a
box at or above 75% containment inside another gets a main container, with
nested candidates resolved to the outermost by the min-max rule.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .formats import atomic_write_json, rle_decode, rle_encode
from .geometry import Obb, containment_fraction_from_block, unit_sample_block
from .render import FrameMasks
from .scene import InstanceTrack, SceneSpec, world_obb

OCCLUSION_THRESHOLD = 0.95
CONTAINMENT_THRESHOLD = 0.75
DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class FrameLabel:
    """Per-frame label state for all K instances (index = instance id - 1)."""

    frame_index: int
    occlusion: np.ndarray  # (K,) float, NaN = undefined (no X-ray pixels)
    containment: np.ndarray  # (K, K) float, [k, l] = fraction of k inside l
    main_occluder: list[int | None]
    main_container: list[int | None]


@dataclass(frozen=True)
class Event:
    onset: int  # first frame of the run
    end: int  # one past the last frame
    partner: int  # occluder / container id at onset


@dataclass(frozen=True)
class EventSummary:
    occlusion: list[Event]
    containment: list[Event]

    @property
    def occlusion_events(self) -> int:
        return len(self.occlusion)

    @property
    def containment_events(self) -> int:
        return len(self.containment)


@dataclass(frozen=True)
class AnnotationTriplet:
    """Ground-truth (target, occluder, container) planes for one query object."""

    target_id: int
    m_t: np.ndarray  # (T, H, W) bool
    m_o: np.ndarray
    m_c: np.ndarray


@dataclass(frozen=True)
class TargetFrameRecord:
    """The target's slice of a FrameLabel; what the annotation file stores."""

    t: int
    occlusion_fraction: float | None
    main_occluder: int | None
    main_container: int | None


def occlusion_fraction(masks: FrameMasks, k: int) -> float | None:
    """1 - visible/xray pixel ratio for instance k; None with no X-ray pixels."""
    xray_count = int(np.count_nonzero(masks.xray[k - 1]))
    if xray_count == 0:
        return None
    visible_count = int(np.count_nonzero(masks.visible == k))
    return 1.0 - visible_count / xray_count


def main_occluder(masks: FrameMasks, k: int) -> int | None:
    """The instance hiding most of k, when k is at least 95% occluded.

    Occlusion by the ground plane or the image border carries no instance id,
    so a fully hidden object can still have no main occluder.
    """
    o = occlusion_fraction(masks, k)
    if o is None or o < OCCLUSION_THRESHOLD:
        return None
    covering = masks.visible[masks.xray[k - 1]]
    counts = np.bincount(covering, minlength=masks.instance_count + 1)
    counts[0] = 0
    counts[k] = 0
    best = int(counts.argmax())  # argmax takes the lowest id on ties
    return best if counts[best] > 0 else None


def containment_matrix(
    obbs: list[Obb],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    block: np.ndarray | None = None,
) -> np.ndarray:
    """Pairwise containment fractions between posed boxes; diagonal is trivially 1.

    Pairs whose bounding spheres have a real gap are zeroed in bulk (the same
    conservative test the fraction estimate applies), so sampling only runs
    for boxes that can actually overlap. Every pair reuses one seeded sample
    block; besides being much cheaper, that keeps a steady pair's containment
    value free of frame-to-frame sampling jitter.
    """
    k_count = len(obbs)
    centers = np.array([o.center for o in obbs])
    radii = np.array([float(np.linalg.norm(o.half_extents)) for o in obbs])
    dist = np.linalg.norm(centers[:, None] - centers[None, :], axis=-1)
    disjoint = dist > (radii[:, None] + radii[None, :]) * (1.0 + 1e-12) + 1e-12

    c = np.ones((k_count, k_count))
    for i in range(k_count):
        for j in range(k_count):
            if i == j:
                continue
            if disjoint[i, j]:
                c[i, j] = 0.0
            else:
                if block is None:
                    block = unit_sample_block(samples, seed)
                c[i, j] = containment_fraction_from_block(obbs[i], obbs[j], block)
    return c


def main_container(label: FrameLabel, k: int) -> int | None:
    """Outermost container of k at this frame, by the min-max rule.

    Candidates hold at least 75% of k's volume; with several (nested boxes),
    the winner is the candidate least contained inside any other candidate.
    """
    row = label.containment[k - 1]
    candidates = [l + 1 for l in range(len(row)) if l + 1 != k and row[l] >= CONTAINMENT_THRESHOLD]
    if not candidates:
        return None
    if len(candidates) == 1:
        return candidates[0]
    best, best_score = None, math.inf
    for li in candidates:
        score = max(label.containment[li - 1][lj - 1] for lj in candidates if lj != li)
        if score < best_score:  # strict keeps the lowest id on ties
            best, best_score = li, score
    return best


def _occlusion_slice(masks: FrameMasks) -> tuple[np.ndarray, list[int | None]]:
    """Occlusion fractions and main occluders for every instance of one frame."""
    k_count = masks.instance_count
    vis_counts, xray_counts, covering = kernels.occlusion_stats(masks.visible, masks.xray)
    occ = np.full(k_count, np.nan)
    occluders: list[int | None] = [None] * k_count
    for k in range(1, k_count + 1):
        if xray_counts[k - 1] == 0:
            continue
        occ[k - 1] = 1.0 - vis_counts[k] / xray_counts[k - 1]
        if occ[k - 1] >= OCCLUSION_THRESHOLD:
            row = covering[k - 1].copy()
            row[0] = 0
            row[k] = 0
            best = int(row.argmax())
            if row[best] > 0:
                occluders[k - 1] = best
    return occ, occluders


def _frame_label(
    scene: SceneSpec, masks: FrameMasks, t: int, samples: int, block: np.ndarray
) -> FrameLabel:
    k_count = scene.instance_count
    occ, occluders = _occlusion_slice(masks)
    obbs = [world_obb(obj, t, scene.fps) for obj in scene.objects]
    cont = containment_matrix(obbs, samples=samples, block=block)
    partial = FrameLabel(t, occ, cont, occluders, [None] * k_count)
    containers = [main_container(partial, k) for k in range(1, k_count + 1)]
    return FrameLabel(t, occ, cont, occluders, containers)


def compute_frame_labels(
    scene: SceneSpec,
    all_masks: list[FrameMasks],
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    jobs: int = 1,
) -> list[FrameLabel]:
    """Label every frame of a rendered scene."""
    block = unit_sample_block(samples, seed)
    if jobs <= 1:
        return [_frame_label(scene, m, m.frame_index, samples, block) for m in all_masks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(
            pool.map(lambda m: _frame_label(scene, m, m.frame_index, samples, block), all_masks)
        )


def occlusion_labels_from_masks(all_masks: list[FrameMasks]) -> list[FrameLabel]:
    """Occlusion-only labels (containment zeroed); enough for the mask heuristics."""
    labels = []
    for masks in all_masks:
        k_count = masks.instance_count
        occ, occluders = _occlusion_slice(masks)
        labels.append(
            FrameLabel(
                masks.frame_index, occ, np.zeros((k_count, k_count)), occluders, [None] * k_count
            )
        )
    return labels


def _runs(present: list[bool]) -> list[tuple[int, int]]:
    """Maximal [onset, end) runs of consecutive True values."""
    runs, start = [], None
    for t, flag in enumerate(present):
        if flag and start is None:
            start = t
        elif not flag and start is not None:
            runs.append((start, t))
            start = None
    if start is not None:
        runs.append((start, len(present)))
    return runs


def count_events(labels: list[FrameLabel], target_id: int) -> EventSummary:
    """Occlusion and containment events for one target, one event per onset."""
    occluder_of = [lab.main_occluder[target_id - 1] for lab in labels]
    container_of = [lab.main_container[target_id - 1] for lab in labels]
    occlusion = [
        Event(onset, end, occluder_of[onset])
        for onset, end in _runs([v is not None for v in occluder_of])
    ]
    containment = [
        Event(onset, end, container_of[onset])
        for onset, end in _runs([v is not None for v in container_of])
    ]
    return EventSummary(occlusion=occlusion, containment=containment)


def build_triplet(
    all_masks: list[FrameMasks], labels: list[FrameLabel], target_id: int
) -> AnnotationTriplet:
    """Assemble (m_t, m_o, m_c): X-ray planes of target / occluder / container."""
    h, w = all_masks[0].visible.shape
    t_count = len(all_masks)
    m_t = np.zeros((t_count, h, w), dtype=bool)
    m_o = np.zeros((t_count, h, w), dtype=bool)
    m_c = np.zeros((t_count, h, w), dtype=bool)
    for masks, lab in zip(all_masks, labels):
        t = masks.frame_index
        m_t[t] = masks.xray[target_id - 1]
        occ = lab.main_occluder[target_id - 1]
        if occ is not None:
            m_o[t] = masks.xray[occ - 1]
        con = lab.main_container[target_id - 1]
        if con is not None:
            m_c[t] = masks.xray[con - 1]
    return AnnotationTriplet(target_id=target_id, m_t=m_t, m_o=m_o, m_c=m_c)


def annotate(
    scene: SceneSpec,
    all_masks: list[FrameMasks],
    target_id: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    jobs: int = 1,
) -> tuple[AnnotationTriplet, list[FrameLabel], EventSummary]:
    """Full ground truth for one query object over a rendered scene."""
    if not np.any(all_masks[0].visible == target_id):
        raise ValueError(f"target {target_id} is not visible in frame 0; cannot be queried")
    labels = compute_frame_labels(scene, all_masks, samples=samples, seed=seed, jobs=jobs)
    triplet = build_triplet(all_masks, labels, target_id)
    events = count_events(labels, target_id)
    return triplet, labels, events


def target_records(labels: list[FrameLabel], target_id: int) -> list[TargetFrameRecord]:
    out = []
    for lab in labels:
        o = lab.occlusion[target_id - 1]
        out.append(
            TargetFrameRecord(
                t=lab.frame_index,
                occlusion_fraction=None if np.isnan(o) else float(o),
                main_occluder=lab.main_occluder[target_id - 1],
                main_container=lab.main_container[target_id - 1],
            )
        )
    return out


def difficulty_score(
    labels: list[FrameLabel],
    tracks: list[InstanceTrack],
    k: int,
    fps: float = 12.0,
) -> float:
    """Mean defined occlusion plus box-center travel over the scene diagonal.

    The diagonal is that of the bounding box of every object's OBB center
    across all frames, so both terms are O(1) regardless of scene scale.
    """
    t_count = len(labels)
    occ = np.array([lab.occlusion[k - 1] for lab in labels])
    defined = occ[~np.isnan(occ)]
    occ_term = float(defined.mean()) if defined.size else 0.0

    centers = {
        obj.instance_id: np.array([world_obb(obj, t, fps).center for t in range(t_count)])
        for obj in tracks
    }
    all_centers = np.concatenate(list(centers.values()))
    diagonal = float(np.linalg.norm(all_centers.max(axis=0) - all_centers.min(axis=0)))
    own = centers[k]
    path = float(np.linalg.norm(np.diff(own, axis=0), axis=1).sum())
    if path == 0.0:
        return occ_term
    return occ_term + path / max(diagonal, 1e-9)


# --- annotation JSON ----------------------------------------------------------


def annotation_to_json(
    triplet: AnnotationTriplet,
    records: list[TargetFrameRecord],
    events: EventSummary,
) -> dict:
    h, w = triplet.m_t.shape[1:]
    return {
        "target_id": triplet.target_id,
        "events": {
            "occlusion": [
                {"onset": e.onset, "end": e.end, "partner": e.partner} for e in events.occlusion
            ],
            "containment": [
                {"onset": e.onset, "end": e.end, "partner": e.partner} for e in events.containment
            ],
        },
        "frames": [
            {
                "t": r.t,
                "occlusion_fraction": r.occlusion_fraction,
                "main_occluder": r.main_occluder,
                "main_container": r.main_container,
            }
            for r in records
        ],
        "rle": {
            "height": h,
            "width": w,
            "target": [rle_encode(p) for p in triplet.m_t],
            "occluder": [rle_encode(p) for p in triplet.m_o],
            "container": [rle_encode(p) for p in triplet.m_c],
        },
    }


def annotation_from_json(data: dict) -> tuple[AnnotationTriplet, list[TargetFrameRecord], EventSummary]:
    rle = data["rle"]
    h, w = rle["height"], rle["width"]
    planes = {
        key: np.array([rle_decode(counts, h, w) for counts in rle[key]])
        for key in ("target", "occluder", "container")
    }
    triplet = AnnotationTriplet(
        target_id=int(data["target_id"]),
        m_t=planes["target"],
        m_o=planes["occluder"],
        m_c=planes["container"],
    )
    records = [
        TargetFrameRecord(
            t=int(f["t"]),
            occlusion_fraction=f["occlusion_fraction"],
            main_occluder=f["main_occluder"],
            main_container=f["main_container"],
        )
        for f in data["frames"]
    ]
    events = EventSummary(
        occlusion=[Event(e["onset"], e["end"], e["partner"]) for e in data["events"]["occlusion"]],
        containment=[
            Event(e["onset"], e["end"], e["partner"]) for e in data["events"]["containment"]
        ],
    )
    return triplet, records, events


def save_annotation(path, triplet, records, events) -> None:
    atomic_write_json(path, annotation_to_json(triplet, records, events))


def load_annotation(path):
    with open(path, "r", encoding="utf-8") as fh:
        return annotation_from_json(json.load(fh))
