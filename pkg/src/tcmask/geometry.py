"""Oriented-bounding-box math: poses, volumes, membership, containment fractions.

Quaternions are (w, x, y, z) throughout. Containment between two boxes is
estimated by Monte Carlo: points are drawn uniformly inside the containee in
its local frame from a counter-based Philox stream, mapped through the
containee->container relative transform, and tested against the container's
half extents (boundary inclusive). Drawing in the local frame means a rigid
transform applied to both boxes leaves the sample stream, and therefore the
estimate, unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

QUAT_NORM_TOL = 1e-6
MIN_HALF_EXTENT = 1e-9
DEFAULT_CONTAINMENT_SAMPLES = 100_000


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = math.sqrt(float(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]))
    if n == 0.0:
        raise ValueError("zero-norm quaternion")
    return q / n


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]], dtype=np.float64)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        dtype=np.float64,
    )


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    w, ux, uy, uz = float(q[0]), float(q[1]), float(q[2]), float(q[3])
    vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
    tx = 2.0 * (uy * vz - uz * vy)
    ty = 2.0 * (uz * vx - ux * vz)
    tz = 2.0 * (ux * vy - uy * vx)
    return np.array(
        [
            vx + w * tx + (uy * tz - uz * ty),
            vy + w * ty + (uz * tx - ux * tz),
            vz + w * tz + (ux * ty - uy * tx),
        ],
        dtype=np.float64,
    )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Unit quaternion from a rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    return quat_normalize(np.array(q))


def quat_from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    s = math.sin(h)
    return np.array([math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s], dtype=np.float64)


def quat_slerp(a: np.ndarray, b: np.ndarray, u: float) -> np.ndarray:
    """Spherical linear interpolation along the shorter arc."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 0.9995:
        return quat_normalize(a + u * (b - a))
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    return (math.sin((1.0 - u) * theta) / s) * a + (math.sin(u * theta) / s) * b


@dataclass(frozen=True)
class Pose:
    """Rigid pose plus per-axis scale: local point p maps to R(q)(s * p) + t."""

    position: np.ndarray
    quaternion: np.ndarray
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "quaternion", np.asarray(self.quaternion, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        if self.position.shape != (3,) or self.quaternion.shape != (4,) or self.scale.shape != (3,):
            raise ValueError("pose expects position (3,), quaternion (4,), scale (3,)")
        n = np.linalg.norm(self.quaternion)
        if abs(n - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"quaternion norm {n} outside tolerance {QUAT_NORM_TOL}")
        if np.any(self.scale <= 0.0):
            raise ValueError("scale components must be strictly positive")

    def transform_point(self, p: np.ndarray) -> np.ndarray:
        return quat_rotate(self.quaternion, self.scale * np.asarray(p, dtype=np.float64)) + self.position

    def transform_points(self, pts: np.ndarray) -> np.ndarray:
        r = quat_to_matrix(self.quaternion)
        return (np.asarray(pts, dtype=np.float64) * self.scale) @ r.T + self.position


IDENTITY_POSE = Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]), np.ones(3))


@dataclass(frozen=True)
class Obb:
    """Oriented box: center, half extents along local axes, rotation quaternion."""

    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=np.float64))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        if self.center.shape != (3,) or self.half_extents.shape != (3,) or self.rotation.shape != (4,):
            raise ValueError("obb expects center (3,), half_extents (3,), rotation (4,)")
        if np.any(self.half_extents <= MIN_HALF_EXTENT):
            raise ValueError("degenerate box: half extents must exceed %g" % MIN_HALF_EXTENT)
        n = np.linalg.norm(self.rotation)
        if abs(n - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"rotation norm {n} outside tolerance {QUAT_NORM_TOL}")

    def corners(self) -> np.ndarray:
        """Eight corners in world coordinates, shape (8, 3)."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
        )
        local = signs * self.half_extents
        return local @ quat_to_matrix(self.rotation).T + self.center


def obb_volume(b: Obb) -> float:
    """Volume of the box; rotation-invariant, 8 * hx * hy * hz."""
    h = b.half_extents
    return float(8.0 * h[0] * h[1] * h[2])


def point_in_obb(p: np.ndarray, b: Obb) -> bool:
    """Membership with inclusive boundary.

    A point exactly on a face (e.g. a corner reconstructed through the
    rotation) counts as inside; the tolerance absorbs the round trip into
    the local frame, which can land an exact boundary point an ulp outside.
    """
    local = quat_rotate(quat_conjugate(b.rotation), np.asarray(p, dtype=np.float64) - b.center)
    tol = 1e-12 * (1.0 + b.half_extents)
    return bool(np.all(np.abs(local) <= b.half_extents + tol))


def _relative_transform(containee: Obb, container: Obb) -> tuple[np.ndarray, np.ndarray]:
    """Rotation matrix and translation mapping containee-local to container-local."""
    q_rel = quat_multiply(quat_conjugate(container.rotation), containee.rotation)
    q_rel = quat_normalize(q_rel)
    rot = quat_to_matrix(q_rel)
    trans = quat_rotate(quat_conjugate(container.rotation), containee.center - container.center)
    return rot, trans


def unit_sample_block(samples: int, seed: int) -> np.ndarray:
    """(samples, 3) uniforms in [0, 1) from a counter-based Philox stream."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    gen = np.random.Generator(np.random.Philox(seed))
    return gen.random((samples, 3))


_CORNER_SIGNS = np.array(
    [[sx, sy, sz] for sx in (-1.0, 1.0) for sy in (-1.0, 1.0) for sz in (-1.0, 1.0)]
)


def containment_fraction_from_block(
    containee: Obb, container: Obb, unit_block: np.ndarray
) -> float:
    """Containment estimate reusing a precomputed unit-sample block.

    Provably disjoint and provably enclosed pairs short-circuit to 0.0 / 1.0;
    both shortcuts return exactly what the full sample sweep would.
    """
    # Bounding-sphere rejection (conservative: only fires with a real gap).
    gap = np.linalg.norm(containee.center - container.center)
    r_sum = float(np.linalg.norm(containee.half_extents) + np.linalg.norm(container.half_extents))
    if gap > r_sum * (1.0 + 1e-12) + 1e-12:
        return 0.0

    rot, trans = _relative_transform(containee, container)

    # Full-enclosure check: every containee corner strictly inside with margin.
    corners = (_CORNER_SIGNS * containee.half_extents) @ rot.T + trans
    if np.all(np.abs(corners) <= container.half_extents * (1.0 - 1e-9)):
        return 1.0

    pts = (2.0 * unit_block - 1.0) * containee.half_extents
    count = kernels.count_points_in_box(pts, rot, trans, container.half_extents)
    return count / unit_block.shape[0]


def containment_fraction(
    containee: Obb,
    container: Obb,
    samples: int = DEFAULT_CONTAINMENT_SAMPLES,
    seed: int = 0,
) -> float:
    """Fraction of the containee's volume inside the container, by point sampling.

    Points are drawn uniformly inside the containee from the seeded stream,
    so the result is deterministic for a fixed (boxes, samples, seed).
    """
    return containment_fraction_from_block(containee, container, unit_sample_block(samples, seed))
