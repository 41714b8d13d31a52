"""Scene description: mesh primitives, keyframed tracks, camera, JSON schema.

Keyframe times are seconds; frame index f samples a track at time f / fps.
Position and scale interpolate linearly between bracketing keyframes,
orientation via slerp, with constant extrapolation outside the keyframed
range. The scene file is strict JSON: unknown keys are rejected.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

from .formats import atomic_write_text
from .geometry import Obb, Pose, quat_multiply, quat_normalize, quat_slerp

DEFAULT_FPS = 12.0
MIN_TRIANGLE_AREA = 1e-12

MESH_KINDS = ("solid_box", "open_box", "tri_mesh")

# corner order: index bit 2 -> x, bit 1 -> y, bit 0 -> z (0 = minus face)
_BOX_TRIANGLES = np.array(
    [
        [0, 1, 3], [0, 3, 2],  # x = -hx
        [4, 6, 7], [4, 7, 5],  # x = +hx
        [0, 4, 5], [0, 5, 1],  # y = -hy
        [2, 3, 7], [2, 7, 6],  # y = +hy
        [0, 2, 6], [0, 6, 4],  # z = -hz
        [1, 5, 7], [1, 7, 3],  # z = +hz
    ],
    dtype=np.int64,
)


def _box_vertices(half: np.ndarray, center: np.ndarray) -> np.ndarray:
    signs = np.array(
        [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
    )
    return signs * half + center


def _axis_aligned_quad(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two triangles spanning an axis-aligned rectangle (one degenerate axis)."""
    flat = int(np.argmin(hi - lo))
    axes = [a for a in range(3) if a != flat]
    v = np.tile(lo, (4, 1))
    v[1, axes[0]] = hi[axes[0]]
    v[2, axes[0]] = hi[axes[0]]
    v[2, axes[1]] = hi[axes[1]]
    v[3, axes[1]] = hi[axes[1]]
    v[:, flat] = lo[flat]
    return v, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)


def _open_box_mesh(extents: np.ndarray, wall: float) -> tuple[np.ndarray, np.ndarray]:
    """Five-sided box with an inner cavity, open on the +z face."""
    ox, oy, oz = extents / 2.0
    ix, iy = ox - wall, oy - wall
    fz = -oz + wall  # cavity floor height
    quads = [
        # outer shell
        ([-ox, -oy, -oz], [ox, oy, -oz]),
        ([-ox, -oy, -oz], [-ox, oy, oz]),
        ([ox, -oy, -oz], [ox, oy, oz]),
        ([-ox, -oy, -oz], [ox, -oy, oz]),
        ([-ox, oy, -oz], [ox, oy, oz]),
        # rim ring at z = +oz
        ([-ox, -oy, oz], [ox, -iy, oz]),
        ([-ox, iy, oz], [ox, oy, oz]),
        ([-ox, -iy, oz], [-ix, iy, oz]),
        ([ix, -iy, oz], [ox, iy, oz]),
        # cavity walls and floor
        ([-ix, -iy, fz], [-ix, iy, oz]),
        ([ix, -iy, fz], [ix, iy, oz]),
        ([-ix, -iy, fz], [ix, -iy, oz]),
        ([-ix, iy, fz], [ix, iy, oz]),
        ([-ix, -iy, fz], [ix, iy, fz]),
    ]
    verts_list, tris_list, base = [], [], 0
    for lo, hi in quads:
        v, t = _axis_aligned_quad(np.array(lo, dtype=np.float64), np.array(hi, dtype=np.float64))
        verts_list.append(v)
        tris_list.append(t + base)
        base += len(v)
    return np.concatenate(verts_list), np.concatenate(tris_list)


def _triangle_areas(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a = verts[tris[:, 0]]
    b = verts[tris[:, 1]]
    c = verts[tris[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class MeshPrimitive:
    """Canonical-frame geometry: a solid box, an open box, or an explicit mesh."""

    kind: str
    extents: np.ndarray | None = None
    wall_thickness: float | None = None
    vertices: np.ndarray | None = None
    triangles: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in MESH_KINDS:
            raise ValueError(f"unknown mesh kind {self.kind!r}")
        if self.kind in ("solid_box", "open_box"):
            ext = np.asarray(self.extents, dtype=np.float64)
            if ext.shape != (3,) or np.any(ext <= 0.0):
                raise ValueError("box extents must be 3 positive numbers")
            object.__setattr__(self, "extents", ext)
            if self.kind == "open_box":
                w = float(self.wall_thickness)
                if not (0.0 < w < min(ext[0], ext[1]) / 2.0):
                    raise ValueError("wall thickness must be positive and < min lateral extent / 2")
                if w >= ext[2]:
                    raise ValueError("wall thickness must be smaller than the box height")
                object.__setattr__(self, "wall_thickness", w)
        else:
            verts = np.asarray(self.vertices, dtype=np.float64)
            tris = np.asarray(self.triangles, dtype=np.int64)
            if verts.ndim != 2 or verts.shape[1] != 3 or tris.ndim != 2 or tris.shape[1] != 3:
                raise ValueError("tri_mesh expects vertices (n,3) and triangles (m,3)")
            if tris.min(initial=0) < 0 or tris.max(initial=-1) >= len(verts):
                raise ValueError("triangle index out of range")
            if np.any(_triangle_areas(verts, tris) <= MIN_TRIANGLE_AREA):
                raise ValueError("degenerate triangle (area <= %g)" % MIN_TRIANGLE_AREA)
            object.__setattr__(self, "vertices", verts)
            object.__setattr__(self, "triangles", tris)

    def triangle_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(vertices, triangle index triples) in the canonical object frame."""
        if self.kind == "solid_box":
            return _box_vertices(self.extents / 2.0, np.zeros(3)), _BOX_TRIANGLES.copy()
        if self.kind == "open_box":
            return _open_box_mesh(self.extents, self.wall_thickness)
        return self.vertices.copy(), self.triangles.copy()

    def local_aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """(center, half extents) of the canonical-frame bounding box."""
        if self.kind in ("solid_box", "open_box"):
            return np.zeros(3), self.extents / 2.0
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return (lo + hi) / 2.0, (hi - lo) / 2.0


Keyframe = tuple[float, Pose]


def _check_keyframes(keyframes: list[Keyframe]) -> None:
    if not keyframes:
        raise ValueError("at least one keyframe required")
    times = [t for t, _ in keyframes]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("keyframe times must be strictly increasing")


def interpolate_pose(keyframes: list[Keyframe], time_s: float) -> Pose:
    """Sample a pose at an arbitrary time, constant outside the keyframe range."""
    times = [t for t, _ in keyframes]
    if time_s <= times[0]:
        return keyframes[0][1]
    if time_s >= times[-1]:
        return keyframes[-1][1]
    hi = bisect.bisect_right(times, time_s)
    t0, p0 = keyframes[hi - 1]
    t1, p1 = keyframes[hi]
    u = (time_s - t0) / (t1 - t0)
    return Pose(
        position=p0.position + u * (p1.position - p0.position),
        quaternion=quat_normalize(quat_slerp(p0.quaternion, p1.quaternion, u)),
        scale=p0.scale + u * (p1.scale - p0.scale),
    )


@dataclass(frozen=True)
class InstanceTrack:
    """One object: id, geometry, keyframed pose, canonical-frame box."""

    instance_id: int
    mesh: MeshPrimitive
    keyframes: list[Keyframe]
    obb_local: Obb | None = None

    def __post_init__(self):
        if self.instance_id < 1:
            raise ValueError("instance ids start at 1 (0 is the background)")
        _check_keyframes(self.keyframes)
        if self.obb_local is None:
            center, half = self.mesh.local_aabb()
            half = np.maximum(half, 1e-6)  # planar meshes get a paper-thin box
            object.__setattr__(
                self, "obb_local", Obb(center, half, np.array([1.0, 0.0, 0.0, 0.0]))
            )


def pose_at(track: InstanceTrack, t: int, fps: float = DEFAULT_FPS) -> Pose:
    """Pose of a track at frame index t."""
    return interpolate_pose(track.keyframes, t / fps)


def world_obb(track: InstanceTrack, t: int, fps: float = DEFAULT_FPS) -> Obb:
    """The track's canonical-frame box carried into world coordinates at frame t."""
    pose = pose_at(track, t, fps)
    local = track.obb_local
    center = pose.transform_point(local.center)
    return Obb(
        center=center,
        half_extents=pose.scale * local.half_extents,
        rotation=quat_normalize(quat_multiply(pose.quaternion, local.rotation)),
    )


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera; keyframed pose is the world-to-camera transform."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    keyframes: list[Keyframe] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        _check_keyframes(self.keyframes)
        for _, pose in self.keyframes:
            if not np.allclose(pose.scale, 1.0):
                raise ValueError("camera poses cannot carry scale")

    def pose_at(self, t: int, fps: float = DEFAULT_FPS) -> Pose:
        return interpolate_pose(self.keyframes, t / fps)


@dataclass(frozen=True)
class SceneSpec:
    """A full clip: camera, objects, frame count; the input to render and label."""

    frame_count: int
    camera: CameraModel
    objects: list[InstanceTrack]
    fps: float = DEFAULT_FPS
    ground_plane: bool = True

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if not self.objects:
            raise ValueError("a scene needs at least one object")
        ids = [o.instance_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("instance ids must be unique")

    @property
    def instance_count(self) -> int:
        return len(self.objects)

    def track(self, instance_id: int) -> InstanceTrack:
        for obj in self.objects:
            if obj.instance_id == instance_id:
                return obj
        raise KeyError(f"no instance with id {instance_id}")


# --- JSON serialization ------------------------------------------------------


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown keys in {where}: {sorted(unknown)}")


def _pose_to_json(pose: Pose, with_scale: bool) -> dict:
    out = {
        "position": [float(v) for v in pose.position],
        "quaternion": [float(v) for v in pose.quaternion],
    }
    if with_scale:
        out["scale"] = [float(v) for v in pose.scale]
    return out


def _keyframe_from_json(d: dict, with_scale: bool, where: str) -> Keyframe:
    allowed = {"t", "position", "quaternion"} | ({"scale"} if with_scale else set())
    _reject_unknown(d, allowed, where)
    scale = d.get("scale", [1.0, 1.0, 1.0]) if with_scale else [1.0, 1.0, 1.0]
    return (
        float(d["t"]),
        Pose(np.array(d["position"], dtype=np.float64), np.array(d["quaternion"], dtype=np.float64), np.array(scale, dtype=np.float64)),
    )


def _mesh_to_json(mesh: MeshPrimitive) -> dict:
    if mesh.kind == "solid_box":
        return {"kind": "solid_box", "extents": [float(v) for v in mesh.extents]}
    if mesh.kind == "open_box":
        return {
            "kind": "open_box",
            "extents": [float(v) for v in mesh.extents],
            "wall_thickness": float(mesh.wall_thickness),
        }
    return {
        "kind": "tri_mesh",
        "vertices": [[float(v) for v in row] for row in mesh.vertices],
        "triangles": [[int(v) for v in row] for row in mesh.triangles],
    }


def _mesh_from_json(d: dict) -> MeshPrimitive:
    kind = d.get("kind")
    if kind == "solid_box":
        _reject_unknown(d, {"kind", "extents"}, "mesh")
        return MeshPrimitive(kind="solid_box", extents=np.array(d["extents"]))
    if kind == "open_box":
        _reject_unknown(d, {"kind", "extents", "wall_thickness"}, "mesh")
        return MeshPrimitive(
            kind="open_box", extents=np.array(d["extents"]), wall_thickness=d["wall_thickness"]
        )
    if kind == "tri_mesh":
        _reject_unknown(d, {"kind", "vertices", "triangles"}, "mesh")
        return MeshPrimitive(
            kind="tri_mesh", vertices=np.array(d["vertices"]), triangles=np.array(d["triangles"])
        )
    raise ValueError(f"unknown mesh kind {kind!r}")


def scene_to_json(scene: SceneSpec) -> dict:
    cam = scene.camera
    return {
        "frame_count": scene.frame_count,
        "fps": scene.fps,
        "camera": {
            "width": cam.width,
            "height": cam.height,
            "fx": cam.fx,
            "fy": cam.fy,
            "cx": cam.cx,
            "cy": cam.cy,
            "keyframes": [
                {"t": t, **_pose_to_json(p, with_scale=False)} for t, p in cam.keyframes
            ],
        },
        "objects": [
            {
                "id": obj.instance_id,
                "mesh": _mesh_to_json(obj.mesh),
                "keyframes": [
                    {"t": t, **_pose_to_json(p, with_scale=True)} for t, p in obj.keyframes
                ],
            }
            for obj in scene.objects
        ],
        "ground_plane": scene.ground_plane,
    }


def scene_from_json(data: dict) -> SceneSpec:
    _reject_unknown(data, {"frame_count", "fps", "camera", "objects", "ground_plane"}, "scene")
    cam = data["camera"]
    _reject_unknown(cam, {"width", "height", "fx", "fy", "cx", "cy", "keyframes"}, "camera")
    camera = CameraModel(
        width=int(cam["width"]),
        height=int(cam["height"]),
        fx=float(cam["fx"]),
        fy=float(cam["fy"]),
        cx=float(cam["cx"]),
        cy=float(cam["cy"]),
        keyframes=[_keyframe_from_json(k, False, "camera keyframe") for k in cam["keyframes"]],
    )
    objects = []
    for od in data["objects"]:
        _reject_unknown(od, {"id", "mesh", "keyframes"}, "object")
        objects.append(
            InstanceTrack(
                instance_id=int(od["id"]),
                mesh=_mesh_from_json(od["mesh"]),
                keyframes=[_keyframe_from_json(k, True, "object keyframe") for k in od["keyframes"]],
            )
        )
    return SceneSpec(
        frame_count=int(data["frame_count"]),
        fps=float(data["fps"]),
        camera=camera,
        objects=objects,
        ground_plane=bool(data["ground_plane"]),
    )


def save_scene(path, scene: SceneSpec) -> None:
    atomic_write_text(path, json.dumps(scene_to_json(scene), indent=1) + "\n")


def load_scene(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_json(json.load(fh))
