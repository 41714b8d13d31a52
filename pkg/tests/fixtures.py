"""Hand-scripted scenes with analytically known pixel behavior.

The camera sits at the world origin looking down +z (identity extrinsics),
so world coordinates are camera coordinates. Moving targets are flat quads
at constant depth: every vertex shares one z, so a lateral step of
depth * step_px / fx world units translates the projected quad by exactly
step_px pixels, and dyadic coordinates keep that exact in floating point.
Expected pixel spans come from `span`, which mirrors the renderer's
pixel-center / top-left convention for axis-aligned rectangles.
"""

from __future__ import annotations

import math

import numpy as np

from tcmask.geometry import Pose
from tcmask.scene import CameraModel, InstanceTrack, MeshPrimitive, SceneSpec

FX = 160.0
UNIT_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
ONES = np.ones(3)


def identity_camera(width: int = 240, height: int = 160) -> CameraModel:
    return CameraModel(
        width=width,
        height=height,
        fx=FX,
        fy=FX,
        cx=width / 2.0,
        cy=height / 2.0,
        keyframes=[(0.0, Pose(np.zeros(3), UNIT_QUAT, ONES))],
    )


def flat_quad(half_w: float, half_h: float) -> MeshPrimitive:
    """A planar rectangle in the xy plane; projects as an exact rectangle."""
    verts = [
        [-half_w, -half_h, 0.0],
        [half_w, -half_h, 0.0],
        [half_w, half_h, 0.0],
        [-half_w, half_h, 0.0],
    ]
    return MeshPrimitive(kind="tri_mesh", vertices=np.array(verts), triangles=np.array([[0, 1, 2], [0, 2, 3]]))


def span(lo: float, hi: float) -> tuple[int, int]:
    """Inclusive pixel-index range covered by [lo, hi) under pixel-center sampling."""
    return math.ceil(lo - 0.5), math.ceil(hi - 0.5) - 1


def quad_pixel_span(center: float, half: float, depth: float, principal: float) -> tuple[int, int]:
    """Projected pixel columns (or rows) of a flat quad edge pair."""
    lo = FX * (center - half) / depth + principal
    hi = FX * (center + half) / depth + principal
    return span(lo, hi)


def linear_keyframes(p0: np.ndarray, step: np.ndarray, frame_count: int, fps: float) -> list:
    """Constant world velocity, one keyframe per frame.

    Emitting every frame keeps positions at p0 + step * f exactly; a
    two-endpoint keyframe would interpolate with non-dyadic f / (T-1)
    factors and wobble projected edges by an ulp.
    """
    return [(f / fps, Pose(p0 + step * f, UNIT_QUAT, ONES)) for f in range(frame_count)]


def static_keyframes(p0: np.ndarray) -> list:
    return [(0.0, Pose(np.asarray(p0, dtype=np.float64), UNIT_QUAT, ONES))]


def moving_target_scene(
    step_px: float = 5.0,
    target_half_px: float = 16.0,
    wall_half_px: float | None = None,
    frame_count: int = 30,
    fps: float = 12.0,
    vertical: bool = False,
    width: int = 240,
    height: int = 240,
) -> SceneSpec:
    """Target quad crossing behind a static wall at constant pixel velocity.

    Geometry is sized in pixels at the target depth (4.0): the target starts
    clear of the wall, disappears behind it mid-clip, and re-emerges before
    the end. The wall (a solid box at depth 2.0) is static; by default it is
    sized so entry and exit stay inside the clip.
    """
    if wall_half_px is None:
        wall_half_px = step_px * (frame_count - 1) / 2.0 - target_half_px - 2.5 * step_px
        if wall_half_px <= target_half_px:
            raise ValueError("travel too short for a full occlusion; adjust parameters")
    depth_t = 4.0
    half_w = target_half_px * depth_t / FX
    step_world = step_px * depth_t / FX
    travel = step_world * (frame_count - 1)
    # centered crossing, nudged a quarter pixel off any center/edge tie
    start = -travel / 2.0 + 0.25 * depth_t / FX
    p0 = np.array([start, 0.0, depth_t])
    step = np.array([step_world, 0.0, 0.0])
    if vertical:
        p0 = np.array([0.0, start, depth_t])
        step = np.array([0.0, step_world, 0.0])

    target = InstanceTrack(
        1, flat_quad(half_w, half_w), linear_keyframes(p0, step, frame_count, fps)
    )

    depth_o = 2.0
    wall_half_w = wall_half_px * depth_o / FX
    wall_half_other = (target_half_px + 24.0) * depth_o / FX
    extents = (
        np.array([2 * wall_half_other, 2 * wall_half_w, 0.25])
        if vertical
        else np.array([2 * wall_half_w, 2 * wall_half_other, 0.25])
    )
    wall = InstanceTrack(
        2,
        MeshPrimitive(kind="solid_box", extents=extents),
        static_keyframes([0.0, 0.0, depth_o + 0.125]),
    )
    return SceneSpec(
        frame_count=frame_count,
        fps=fps,
        camera=identity_camera(width, height),
        objects=[target, wall],
        ground_plane=False,
    )


# (step_px, target_half_px) pairs whose travel allows a long full occlusion;
# with both orientations this is the 20-scene moving-target suite
SUITE_PARAMS = [
    (4.0, 8.0), (4.0, 12.0),
    (5.0, 8.0), (5.0, 12.0),
    (6.0, 8.0), (6.0, 12.0), (6.0, 16.0),
    (7.0, 8.0), (7.0, 12.0), (7.0, 16.0),
]


def moving_target_suite() -> list[SceneSpec]:
    return [
        moving_target_scene(step_px=s, target_half_px=h, vertical=v)
        for s, h in SUITE_PARAMS
        for v in (False, True)
    ]


def sweeping_occluder_scene(
    step_px: float = 6.0,
    target_half_px: float = 20.0,
    occluder_half_px: float = 40.0,
    frame_count: int = 30,
    fps: float = 12.0,
    width: int = 240,
    height: int = 160,
) -> SceneSpec:
    """Static target; a wide wall sweeps across it at constant pixel velocity."""
    depth_t = 4.0
    target = InstanceTrack(
        1,
        flat_quad(target_half_px * depth_t / FX, target_half_px * depth_t / FX),
        static_keyframes([0.0, 0.0, depth_t]),
    )
    depth_o = 2.0
    step_world = step_px * depth_o / FX
    travel = step_world * (frame_count - 1)
    p0 = np.array([-travel / 2.0, 0.0, depth_o])
    occluder = InstanceTrack(
        2,
        flat_quad(occluder_half_px * depth_o / FX, (target_half_px + 24.0) * depth_o / FX),
        linear_keyframes(p0, np.array([step_world, 0.0, 0.0]), frame_count, fps),
    )
    return SceneSpec(
        frame_count=frame_count,
        fps=fps,
        camera=identity_camera(width, height),
        objects=[target, occluder],
        ground_plane=False,
    )


def three_layer_scene(
    frame_count: int = 30,
    fps: float = 12.0,
    width: int = 240,
    height: int = 160,
) -> tuple[SceneSpec, int, int]:
    """Target hidden by wall A, then wall A hidden by a bigger wall B.

    Returns the scene plus the frames at which (1) the target first has a
    main occluder (A) and (2) A itself first crosses the occlusion threshold
    with B in front, both derived from pixel-span arithmetic.
    """
    depth_t, depth_a, depth_b = 6.0, 4.0, 2.0
    cx = width / 2.0

    target = InstanceTrack(
        1,
        flat_quad(16.0 * depth_t / FX, 16.0 * depth_t / FX),
        static_keyframes([0.0, 0.0, depth_t]),
    )

    # A slides in at 8 px/frame and parks over the target at frame 10
    a_half_px = 24.0
    a_step_px = 8.0
    a_park_frame = 10
    a_travel_px = a_step_px * a_park_frame
    a_step = a_step_px * depth_a / FX
    a_p0 = np.array([-a_travel_px * depth_a / FX, 0.0, depth_a])
    a_park = a_p0 + np.array([a_step * a_park_frame, 0.0, 0.0])
    wall_a = InstanceTrack(
        2,
        flat_quad(a_half_px * depth_a / FX, 28.0 * depth_a / FX),
        [
            (0.0, Pose(a_p0, UNIT_QUAT, ONES)),
            (a_park_frame / fps, Pose(a_park, UNIT_QUAT, ONES)),
        ],
    )

    # B slides in at 12 px/frame from the right and parks over A at frame 24
    b_half_px = 56.0
    b_step_px = -12.0
    b_park_frame = 24
    b_step = b_step_px * depth_b / FX
    b_p0 = np.array([-b_step_px * b_park_frame * depth_b / FX, 0.0, depth_b])
    b_park = b_p0 + np.array([b_step * b_park_frame, 0.0, 0.0])
    wall_b = InstanceTrack(
        3,
        flat_quad(b_half_px * depth_b / FX, 40.0 * depth_b / FX),
        [
            (0.0, Pose(b_p0, UNIT_QUAT, ONES)),
            (b_park_frame / fps, Pose(b_park, UNIT_QUAT, ONES)),
        ],
    )
    scene = SceneSpec(
        frame_count=frame_count,
        fps=fps,
        camera=identity_camera(width, height),
        objects=[target, wall_a, wall_b],
        ground_plane=False,
    )

    # expected onset of target occlusion: A's span covers >= 95% of the target's
    tgt_lo, tgt_hi = quad_pixel_span(0.0, 16.0 * depth_t / FX, depth_t, cx)
    tgt_cols = tgt_hi - tgt_lo + 1
    target_onset = None
    for f in range(frame_count):
        a_center = a_p0[0] + a_step * min(f, a_park_frame)
        a_lo, a_hi = quad_pixel_span(a_center, a_half_px * depth_a / FX, depth_a, cx)
        covered = max(0, min(tgt_hi, a_hi) - max(tgt_lo, a_lo) + 1)
        if covered / tgt_cols >= 0.95:
            target_onset = f
            break

    # expected switch: B's span covers >= 95% of A's parked span
    a_lo, a_hi = quad_pixel_span(a_park[0], a_half_px * depth_a / FX, depth_a, cx)
    a_cols = a_hi - a_lo + 1
    switch_frame = None
    for f in range(frame_count):
        b_center = b_p0[0] + b_step * min(f, b_park_frame)
        b_lo, b_hi = quad_pixel_span(b_center, b_half_px * depth_b / FX, depth_b, cx)
        covered = max(0, min(a_hi, b_hi) - max(a_lo, b_lo) + 1)
        if covered / a_cols >= 0.95 and f > a_park_frame:
            switch_frame = f
            break

    return scene, target_onset, switch_frame


def two_occluder_scene(width: int = 240, height: int = 160) -> tuple[SceneSpec, int, int, int]:
    """Target fully hidden by two walls splitting its footprint 60/40.

    Returns (scene, expected main occluder id, left coverage, right coverage).
    """
    depth_t, depth_o = 4.0, 2.0
    cx = width / 2.0
    half_px = 20.0  # 40 pixel columns
    target = InstanceTrack(
        1,
        flat_quad(half_px * depth_t / FX, half_px * depth_t / FX),
        static_keyframes([0.0, 0.0, depth_t]),
    )
    tgt_lo, tgt_hi = quad_pixel_span(0.0, half_px * depth_t / FX, depth_t, cx)
    cols = tgt_hi - tgt_lo + 1
    split = tgt_lo + round(0.6 * cols)  # left wall covers [tgt_lo, split)

    def col_range_quad(lo_px: int, hi_px: int, instance_id: int, depth: float) -> InstanceTrack:
        # place a quad whose projected span is exactly [lo_px, hi_px] columns
        lo = (lo_px + 0.25 - cx) * depth / FX
        hi = (hi_px + 0.75 - cx) * depth / FX
        center = (lo + hi) / 2.0
        half = (hi - lo) / 2.0
        return InstanceTrack(
            instance_id,
            flat_quad(half, 48.0 * depth / FX),
            static_keyframes([center, 0.0, depth]),
        )

    left = col_range_quad(tgt_lo - 8, split - 1, 2, depth_o)
    right = col_range_quad(split, tgt_hi + 8, 3, depth_o)
    scene = SceneSpec(
        frame_count=3,
        fps=12.0,
        camera=identity_camera(width, height),
        objects=[target, left, right],
        ground_plane=False,
    )
    left_cols = split - tgt_lo
    right_cols = tgt_hi - split + 1
    return scene, 2, left_cols, right_cols


def nested_boxes(levels: int, gen: np.random.Generator) -> list:
    """Obbs nested innermost-first: each next box strictly contains the previous.

    Each shell's half extent exceeds the previous box's circumscribed-sphere
    radius by a margin comfortably larger than the center drift, so the
    nesting is geometrically strict regardless of the random rotations.
    """
    from tcmask.geometry import Obb, quat_from_axis_angle

    half = gen.uniform(0.12, 0.2)
    center = gen.uniform(-0.05, 0.05, 3)
    boxes = []
    for _ in range(levels):
        axis = gen.normal(size=3)
        q = quat_from_axis_angle(axis, gen.uniform(0.0, 2.0 * np.pi))
        boxes.append(Obb(center.copy(), np.full(3, half), q))
        half = half * math.sqrt(3.0) * gen.uniform(1.25, 1.5)
        center = center + gen.uniform(-0.01, 0.01, 3)
    return boxes
