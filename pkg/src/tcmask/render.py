"""Depth-buffered software rasterizer producing visible and X-ray masks.

Pipeline per frame: object meshes are posed into world space, carried into
the camera frame, near-clipped, projected through the pinhole model, and
filled by the kernels module. The visible map depth-competes every object
(plus the ground plane as id 0); each X-ray plane rasterizes one object in
isolation, so inter-object occlusion never removes its pixels. Both passes
share the projected triangles, which makes visible == k imply xray[k] true
exactly, pixel for pixel.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import quat_to_matrix
from .scene import CameraModel, SceneSpec, interpolate_pose

NEAR_PLANE = 1e-4
GROUND_EXTENT = 1000.0


@dataclass(frozen=True)
class FrameMasks:
    """Per-frame visible instance map and per-object X-ray planes."""

    visible: np.ndarray  # (H, W) uint16, 0 = background
    xray: np.ndarray  # (K, H, W) bool
    frame_index: int

    @property
    def instance_count(self) -> int:
        return self.xray.shape[0]


@dataclass(frozen=True)
class QueryMask:
    """Frame-0 visible footprint of the instance to be tracked."""

    target_id: int
    mask: np.ndarray  # (H, W) bool


def project(camera: CameraModel, t: int, p_world: np.ndarray, fps: float = 12.0) -> tuple[float, float, float]:
    """Pinhole projection at frame t; returns (x, y, depth).

    Depth is camera-frame z; values at or below the near plane mark points
    flagged for clipping and carry no meaningful pixel position.
    """
    pose = camera.pose_at(t, fps)
    p_cam = pose.transform_point(np.asarray(p_world, dtype=np.float64))
    z = float(p_cam[2])
    if z <= NEAR_PLANE:
        return float("nan"), float("nan"), z
    return (
        float(camera.fx * p_cam[0] / z + camera.cx),
        float(camera.fy * p_cam[1] / z + camera.cy),
        z,
    )


def _clip_near(tris_cam: np.ndarray, near: float) -> np.ndarray:
    """Clip camera-space triangles (n, 3, 3) against the z = near plane."""
    z = tris_cam[:, :, 2]
    keep = np.all(z >= near, axis=1)
    cross = ~keep & np.any(z >= near, axis=1)
    out = [tris_cam[keep]]
    for tri in tris_cam[cross]:
        poly = []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            ain, bin_ = a[2] >= near, b[2] >= near
            if ain:
                poly.append(a)
            if ain != bin_:
                s = (near - a[2]) / (b[2] - a[2])
                p = a + s * (b - a)
                p[2] = near
                poly.append(p)
        for i in range(1, len(poly) - 1):
            out.append(np.array([[poly[0], poly[i], poly[i + 1]]]))
    return np.concatenate(out) if out else np.zeros((0, 3, 3))


def _project_triangles(
    tris_cam: np.ndarray, camera: CameraModel, near: float
) -> tuple[np.ndarray, np.ndarray]:
    """Near-clip and project to screen; returns xy (m, 3, 2) and invz (m, 3)."""
    clipped = _clip_near(tris_cam, near)
    if clipped.shape[0] == 0:
        return np.zeros((0, 3, 2)), np.zeros((0, 3))
    z = clipped[:, :, 2]
    xy = np.empty(clipped.shape[:2] + (2,))
    xy[:, :, 0] = camera.fx * clipped[:, :, 0] / z + camera.cx
    xy[:, :, 1] = camera.fy * clipped[:, :, 1] / z + camera.cy
    return xy, 1.0 / z


def _ground_triangles() -> np.ndarray:
    e = GROUND_EXTENT
    quad = np.array([[-e, -e, 0.0], [e, -e, 0.0], [e, e, 0.0], [-e, e, 0.0]])
    return np.array([quad[[0, 1, 2]], quad[[0, 2, 3]]])


def _camera_frame_triangles(scene: SceneSpec, t: int) -> list[tuple[int, np.ndarray]]:
    """World geometry carried into the camera frame, as (id, triangles) pairs.

    Id 0 (the ground quad) comes first so it wins exact depth ties, matching
    its role as part of the background.
    """
    cam_pose = scene.camera.pose_at(t, scene.fps)
    r_cam = quat_to_matrix(cam_pose.quaternion)
    t_cam = cam_pose.position
    batches = []
    if scene.ground_plane:
        batches.append((0, _ground_triangles() @ r_cam.T + t_cam))
    for obj in scene.objects:
        verts, tris = obj.mesh.triangle_mesh()
        pose = interpolate_pose(obj.keyframes, t / scene.fps)
        verts_world = (verts * pose.scale) @ quat_to_matrix(pose.quaternion).T + pose.position
        verts_cam = verts_world @ r_cam.T + t_cam
        batches.append((obj.instance_id, verts_cam[tris]))
    return batches


def rasterize_frame(scene: SceneSpec, t: int, near: float = NEAR_PLANE) -> FrameMasks:
    """Render frame t: depth-competed visible ids plus one X-ray plane per object."""
    if not (0 <= t < scene.frame_count):
        raise ValueError(f"frame index {t} outside [0, {scene.frame_count})")
    cam = scene.camera
    h, w = cam.height, cam.width
    k_count = scene.instance_count

    projected = [
        (instance_id, *_project_triangles(tris_cam, cam, near))
        for instance_id, tris_cam in _camera_frame_triangles(scene, t)
    ]

    zbuf = np.zeros((h, w), dtype=np.float64)  # stores 1/z; larger is nearer
    idbuf = np.zeros((h, w), dtype=np.uint16)
    xy_all = np.concatenate([xy for _, xy, _ in projected])
    invz_all = np.concatenate([invz for _, _, invz in projected])
    ids_all = np.concatenate(
        [np.full(len(xy), instance_id, dtype=np.uint16) for instance_id, xy, _ in projected]
    )
    kernels.fill_visible(xy_all, invz_all, ids_all, zbuf, idbuf)

    xray = np.zeros((k_count, h, w), dtype=bool)
    for instance_id, xy, _ in projected:
        if instance_id == 0:
            continue
        kernels.fill_coverage(xy, xray[instance_id - 1])

    return FrameMasks(visible=idbuf, xray=xray, frame_index=t)


def rasterize_scene(scene: SceneSpec, jobs: int = 1, near: float = NEAR_PLANE) -> list[FrameMasks]:
    """All frames of a scene, optionally in parallel (kernels release the GIL)."""
    frames = range(scene.frame_count)
    if jobs <= 1:
        return [rasterize_frame(scene, t, near) for t in frames]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda t: rasterize_frame(scene, t, near), frames))


def cartoon_palette(instance_count: int, palette_seed: int = 0) -> np.ndarray:
    """Distinct colors for ids 0..K; id 0 (background) stays black.

    Colors are drawn in id order from a seeded stream, so a given
    (palette_seed, id) pair always maps to the same color.
    """
    gen = np.random.Generator(np.random.Philox(palette_seed))
    palette = np.zeros((instance_count + 1, 3), dtype=np.uint8)
    seen = {(0, 0, 0)}
    for k in range(1, instance_count + 1):
        while True:
            color = tuple(int(v) for v in gen.integers(1, 256, size=3))
            if color not in seen:
                seen.add(color)
                palette[k] = color
                break
    return palette


def render_cartoon(masks: FrameMasks, palette_seed: int = 0) -> np.ndarray:
    """Flat-color frame: every instance painted its palette color, background black."""
    palette = cartoon_palette(masks.instance_count, palette_seed)
    return palette[masks.visible]


def query_mask(masks0: FrameMasks, target_id: int) -> QueryMask:
    """Frame-0 query mask; the target must have visible pixels there."""
    if masks0.frame_index != 0:
        raise ValueError("query masks are defined on frame 0")
    if not (1 <= target_id <= masks0.instance_count):
        raise ValueError(f"target id {target_id} outside [1, {masks0.instance_count}]")
    mask = masks0.visible == target_id
    if not mask.any():
        raise ValueError(f"instance {target_id} is not visible in frame 0")
    return QueryMask(target_id=target_id, mask=mask)
