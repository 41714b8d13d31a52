"""Procedural scripted scenarios, built from keyframes rather than physics.

Two generators: a three-object container script (an object lobbed into an
open box that a sliding block then pushes away) and cluttered scenes of
static plus ballistic objects. Interactions are scripted exactly: the lobbed
object follows an analytic parabola, snaps into the container, and inherits
its motion once the pusher makes contact; ballistic clutter stops where it
meets the ground. All randomness is drawn up front from a seeded Philox
stream, so a (config, seed) pair always yields the same scene.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, quat_from_axis_angle, quat_from_matrix
from .scene import CameraModel, InstanceTrack, Keyframe, MeshPrimitive, SceneSpec

UP = np.array([0.0, 0.0, 1.0])
UNIT_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
ONES = np.ones(3)


def camera_look_at(eye: np.ndarray, target: np.ndarray) -> Pose:
    """World-to-camera pose for a camera at `eye` looking at `target`.

    Camera convention: x right, y down, z forward.
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, UP)
    n = np.linalg.norm(right)
    if n < 1e-9:  # looking straight up/down; pick an arbitrary right vector
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / n
    down = np.cross(forward, right)
    r_c2w = np.stack([right, down, forward], axis=1)
    r_w2c = r_c2w.T
    return Pose(position=-(r_w2c @ eye), quaternion=quat_from_matrix(r_w2c), scale=ONES)


def _yaw(angle: float) -> np.ndarray:
    return quat_from_axis_angle(UP, angle)


def _static_keyframes(position: np.ndarray, orientation: np.ndarray) -> list[Keyframe]:
    return [(0.0, Pose(position, orientation, ONES))]


def _support_radius(half_x: float, half_y: float, yaw: float, direction: np.ndarray) -> float:
    """Lateral support of a yawed box along a horizontal unit direction."""
    c, s = math.cos(yaw), math.sin(yaw)
    ex = np.array([c, s])
    ey = np.array([-s, c])
    d = direction[:2]
    return abs(float(d @ ex)) * half_x + abs(float(d @ ey)) * half_y


def _default_camera(width: int, height: int, eye: np.ndarray, target: np.ndarray) -> CameraModel:
    f = 0.875 * width
    return CameraModel(
        width=width,
        height=height,
        fx=f,
        fy=f,
        cx=width / 2.0,
        cy=height / 2.0,
        keyframes=[(0.0, camera_look_at(eye, target))],
    )


@dataclass(frozen=True)
class ContainerScriptConfig:
    frame_count: int = 36
    fps: float = 12.0
    width: int = 480
    height: int = 360
    container_base_extent: float = 0.62  # lateral size before the multiplier
    container_size_multiplier: float = 1.5
    wall_fraction: float = 0.1  # wall thickness as a fraction of the smaller lateral extent
    target_extent: float = 0.2
    pusher_extent: float = 0.38
    pusher_speed: float = 1.7  # world units / s; 0 keeps the container in place
    land_fraction: float = 0.35  # when the target settles, as a fraction of the clip
    contact_fraction: float = 0.5  # when the pusher hits, as a fraction of the clip
    gravity: float = 9.8

    def __post_init__(self):
        if self.frame_count < 4:
            raise ValueError("container script needs at least 4 frames")
        if not (0.0 < self.land_fraction < self.contact_fraction < 1.0):
            raise ValueError("need 0 < land_fraction < contact_fraction < 1")
        if self.pusher_speed < 0:
            raise ValueError("pusher speed cannot be negative")


def gen_container_script(config: ContainerScriptConfig, seed: int = 0) -> SceneSpec:
    """Target falls into a container which a constant-velocity block then pushes."""
    gen = np.random.Generator(np.random.Philox(seed))
    mult = config.container_size_multiplier

    # all draws happen here, in a fixed order
    cont_ext = np.array(
        [
            config.container_base_extent * mult * gen.uniform(0.85, 1.15),
            config.container_base_extent * mult * gen.uniform(0.85, 1.15),
            config.container_base_extent * mult * gen.uniform(0.9, 1.2),
        ]
    )
    cont_yaw = gen.uniform(0.0, 2.0 * math.pi)
    tgt_ext = config.target_extent * gen.uniform(0.85, 1.15, size=3)
    tgt_yaw = gen.uniform(0.0, 2.0 * math.pi)
    spawn_azimuth = gen.uniform(0.0, 2.0 * math.pi)
    spawn_radius = gen.uniform(0.7, 1.2)
    spawn_height = gen.uniform(1.3, 1.9)
    push_ext = config.pusher_extent * gen.uniform(0.9, 1.15, size=3)
    push_azimuth = gen.uniform(0.0, 2.0 * math.pi)
    cam_azimuth = gen.uniform(0.0, 2.0 * math.pi)
    cam_distance = gen.uniform(4.6, 5.2)
    cam_elevation = gen.uniform(math.radians(16.0), math.radians(26.0))

    wall = config.wall_fraction * min(cont_ext[0], cont_ext[1])
    opening = min(cont_ext[0], cont_ext[1]) - 2.0 * wall
    tgt_lateral_diag = math.hypot(tgt_ext[0], tgt_ext[1])
    if tgt_lateral_diag >= opening:
        raise ValueError(
            f"infeasible config: target lateral diagonal {tgt_lateral_diag:.3f} "
            f"does not fit the container opening {opening:.3f}"
        )

    duration = (config.frame_count - 1) / config.fps
    f_land = max(2, round(config.land_fraction * (config.frame_count - 1)))
    f_contact = round(config.contact_fraction * (config.frame_count - 1))
    if f_contact <= f_land:
        raise ValueError("contact frame must come after the landing frame")
    t_land = f_land / config.fps
    t_contact = f_contact / config.fps

    container_pos = np.array([0.0, 0.0, cont_ext[2] / 2.0])
    rest = np.array([0.0, 0.0, wall + tgt_ext[2] / 2.0])
    spawn = np.array(
        [
            spawn_radius * math.cos(spawn_azimuth),
            spawn_radius * math.sin(spawn_azimuth),
            spawn_height,
        ]
    )

    # parabola from spawn to rest: p(t) = p0 + v0 t - g/2 t^2 z
    g = config.gravity
    v0 = (rest - spawn) / t_land + 0.5 * g * t_land * UP
    tgt_quat = _yaw(tgt_yaw)
    target_keys: list[Keyframe] = []
    for f in range(f_land + 1):
        t = f / config.fps
        pos = spawn + v0 * t - 0.5 * g * t * t * UP
        target_keys.append((t, Pose(pos, tgt_quat, ONES)))

    push_dir = np.array([math.cos(push_azimuth), math.sin(push_azimuth), 0.0])
    contact_gap = _support_radius(
        cont_ext[0] / 2.0, cont_ext[1] / 2.0, cont_yaw, -push_dir
    ) + _support_radius(push_ext[0] / 2.0, push_ext[1] / 2.0, push_azimuth, -push_dir)

    cont_quat = _yaw(cont_yaw)
    push_quat = _yaw(push_azimuth)
    push_z = push_ext[2] / 2.0
    if config.pusher_speed > 0.0:
        shift = config.pusher_speed * (duration - t_contact) * push_dir
        start = container_pos - push_dir * (contact_gap + config.pusher_speed * t_contact)
        start[2] = push_z
        container_keys = [
            (0.0, Pose(container_pos, cont_quat, ONES)),
            (t_contact, Pose(container_pos, cont_quat, ONES)),
            (duration, Pose(container_pos + shift, cont_quat, ONES)),
        ]
        target_keys += [
            (t_contact, Pose(rest, tgt_quat, ONES)),
            (duration, Pose(rest + shift, tgt_quat, ONES)),
        ]
        pusher_keys = [
            (0.0, Pose(start, push_quat, ONES)),
            (duration, Pose(start + config.pusher_speed * duration * push_dir, push_quat, ONES)),
        ]
    else:
        container_keys = _static_keyframes(container_pos, cont_quat)
        bystander = container_pos - push_dir * (contact_gap + 0.8)
        bystander[2] = push_z
        pusher_keys = _static_keyframes(bystander, push_quat)

    eye = np.array(
        [
            cam_distance * math.cos(cam_elevation) * math.cos(cam_azimuth),
            cam_distance * math.cos(cam_elevation) * math.sin(cam_azimuth),
            cam_distance * math.sin(cam_elevation),
        ]
    )
    camera = _default_camera(config.width, config.height, eye, np.array([0.0, 0.0, 0.4]))

    objects = [
        InstanceTrack(1, MeshPrimitive(kind="solid_box", extents=tgt_ext), target_keys),
        InstanceTrack(
            2, MeshPrimitive(kind="open_box", extents=cont_ext, wall_thickness=wall), container_keys
        ),
        InstanceTrack(3, MeshPrimitive(kind="solid_box", extents=push_ext), pusher_keys),
    ]
    return SceneSpec(
        frame_count=config.frame_count,
        fps=config.fps,
        camera=camera,
        objects=objects,
        ground_plane=True,
    )


TARGET_ID = 1
CONTAINER_ID = 2
PUSHER_ID = 3


@dataclass(frozen=True)
class RandomClutterConfig:
    static_count: int = 4
    dynamic_count: int = 2
    containers: int = 0  # how many of the static objects are open boxes
    frame_count: int = 36
    fps: float = 12.0
    width: int = 480
    height: int = 360
    area: float = 2.2  # lateral placement half-extent
    min_extent: float = 0.25
    max_extent: float = 0.7
    container_size_multiplier: float = 1.5
    max_speed: float = 1.5
    spawn_height: tuple[float, float] = (1.2, 2.8)
    gravity: float = 9.8

    def __post_init__(self):
        if self.static_count < 0 or self.dynamic_count < 0:
            raise ValueError("object counts cannot be negative")
        if self.static_count + self.dynamic_count < 1:
            raise ValueError("need at least one object")
        if self.containers > self.static_count:
            raise ValueError("cannot have more containers than static objects")
        if not (0 < self.min_extent <= self.max_extent):
            raise ValueError("need 0 < min_extent <= max_extent")


def gen_random_clutter(config: RandomClutterConfig, seed: int = 0) -> SceneSpec:
    """Static objects resting on the ground plus ballistic ones that drop onto it."""
    gen = np.random.Generator(np.random.Philox(seed))
    objects: list[InstanceTrack] = []
    placed: list[tuple[np.ndarray, float]] = []  # (xy, bounding radius)

    def place(radius: float) -> np.ndarray:
        for _ in range(200):
            xy = gen.uniform(-config.area, config.area, size=2)
            if all(np.linalg.norm(xy - q) > radius + r for q, r in placed):
                placed.append((xy, radius))
                return xy
        placed.append((xy, radius))
        return xy

    next_id = 1
    for i in range(config.static_count):
        ext = gen.uniform(config.min_extent, config.max_extent, size=3)
        yaw = gen.uniform(0.0, 2.0 * math.pi)
        if i < config.containers:
            ext = ext * config.container_size_multiplier
            wall = 0.1 * min(ext[0], ext[1])
            mesh = MeshPrimitive(kind="open_box", extents=ext, wall_thickness=wall)
        else:
            mesh = MeshPrimitive(kind="solid_box", extents=ext)
        xy = place(float(np.linalg.norm(ext[:2]) / 2.0))
        pos = np.array([xy[0], xy[1], ext[2] / 2.0])
        objects.append(InstanceTrack(next_id, mesh, _static_keyframes(pos, _yaw(yaw))))
        next_id += 1

    g = config.gravity
    for _ in range(config.dynamic_count):
        ext = gen.uniform(config.min_extent, config.max_extent, size=3)
        yaw = gen.uniform(0.0, 2.0 * math.pi)
        xy = gen.uniform(-config.area * 0.7, config.area * 0.7, size=2)
        z0 = gen.uniform(*config.spawn_height)
        vel = np.array(
            [
                gen.uniform(-config.max_speed, config.max_speed),
                gen.uniform(-config.max_speed, config.max_speed),
                gen.uniform(-0.5 * config.max_speed, config.max_speed),
            ]
        )
        rest_z = ext[2] / 2.0
        # first positive root of z0 + vz t - g/2 t^2 = rest_z
        t_ground = (vel[2] + math.sqrt(vel[2] ** 2 + 2.0 * g * (z0 - rest_z))) / g
        p0 = np.array([xy[0], xy[1], z0])
        quat = _yaw(yaw)
        keys: list[Keyframe] = []
        for f in range(config.frame_count):
            t = f / config.fps
            if t >= t_ground:
                break
            pos = p0 + vel * t - 0.5 * g * t * t * UP
            keys.append((t, Pose(pos, quat, ONES)))
        rest = p0 + vel * t_ground - 0.5 * g * t_ground * t_ground * UP
        rest[2] = rest_z
        if t_ground > (len(keys) - 1) / config.fps:
            keys.append((t_ground, Pose(rest, quat, ONES)))
        objects.append(InstanceTrack(next_id, mesh, keys))
        next_id += 1

    eye = np.array([4.2, -3.4, 3.6])
    camera = _default_camera(config.width, config.height, eye, np.array([0.0, 0.0, 0.3]))
    return SceneSpec(
        frame_count=config.frame_count,
        fps=config.fps,
        camera=camera,
        objects=objects,
        ground_plane=True,
    )
