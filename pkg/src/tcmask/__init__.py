"""Ground-truth generation and evaluation for tracking through occlusion and containment.

The pipeline: scripted scenes (scene, generate) are rasterized into visible
and X-ray instance masks (render), labeled with occlusion fractions,
containment relations and (target, occluder, container) triplets (label),
tracked by privileged heuristics (baselines), and scored (metrics, losses).
Masks travel in the bit-exact .tcmask container (formats).
"""

from ._backend import backend_name
from .geometry import Obb, Pose, containment_fraction, obb_volume, point_in_obb
from .scene import (
    CameraModel,
    InstanceTrack,
    MeshPrimitive,
    SceneSpec,
    load_scene,
    pose_at,
    save_scene,
    world_obb,
)
from .generate import (
    ContainerScriptConfig,
    RandomClutterConfig,
    gen_container_script,
    gen_random_clutter,
)
from .render import (
    FrameMasks,
    QueryMask,
    project,
    query_mask,
    rasterize_frame,
    rasterize_scene,
    render_cartoon,
)
from .label import (
    AnnotationTriplet,
    EventSummary,
    FrameLabel,
    annotate,
    difficulty_score,
    main_container,
    main_occluder,
    occlusion_fraction,
)
from .baselines import (
    PredictionTriplet,
    copy_query,
    jump_to_occluder,
    linear_extrapolation,
    static_mask,
)
from .metrics import EvalReport, aggregate, frame_iou, score_video
from .losses import (
    LossConfig,
    bce,
    bootstrap_schedule,
    bootstrapped_bce,
    channel_loss,
    occlusion_weight,
    soft_jaccard,
    total_loss,
)

__version__ = "0.1.0"

__all__ = [
    "backend_name",
    "Obb",
    "Pose",
    "containment_fraction",
    "obb_volume",
    "point_in_obb",
    "CameraModel",
    "InstanceTrack",
    "MeshPrimitive",
    "SceneSpec",
    "load_scene",
    "pose_at",
    "save_scene",
    "world_obb",
    "ContainerScriptConfig",
    "RandomClutterConfig",
    "gen_container_script",
    "gen_random_clutter",
    "FrameMasks",
    "QueryMask",
    "project",
    "query_mask",
    "rasterize_frame",
    "rasterize_scene",
    "render_cartoon",
    "AnnotationTriplet",
    "EventSummary",
    "FrameLabel",
    "annotate",
    "difficulty_score",
    "main_container",
    "main_occluder",
    "occlusion_fraction",
    "PredictionTriplet",
    "copy_query",
    "jump_to_occluder",
    "linear_extrapolation",
    "static_mask",
    "EvalReport",
    "aggregate",
    "frame_iou",
    "score_video",
    "LossConfig",
    "bce",
    "bootstrap_schedule",
    "bootstrapped_bce",
    "channel_loss",
    "occlusion_weight",
    "soft_jaccard",
    "total_loss",
]
