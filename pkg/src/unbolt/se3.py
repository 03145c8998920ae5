"""Minimal SE(3) / quaternion algebra shared by all modules.

Conventions:
  - quaternions are stored [w, x, y, z], unit norm, canonicalized to w >= 0
  - transforms hold an orthonormal rotation matrix and a translation
  - JSON pose format: {"position": [x, y, z], "quaternion": [w, x, y, z]}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUAT_NORM_TOL = 1e-6
ORTHO_TOL = 1e-9


class FrameError(ValueError):
    """Raised for non-orthonormal / left-handed / non-unit inputs."""


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise FrameError(f"non-finite vector: {a}")
    return a


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion [w,x,y,z]; q and -q represent the same rotation."""

    wxyz: np.ndarray

    def __init__(self, w: float, x: float, y: float, z: float):
        q = np.array([w, x, y, z], dtype=float)
        n = float(np.linalg.norm(q))
        if abs(n - 1.0) > QUAT_NORM_TOL:
            raise FrameError(f"quaternion norm {n} deviates from 1 by more than {QUAT_NORM_TOL}")
        q = q / n
        if q[0] < 0.0:
            q = -q
        object.__setattr__(self, "wxyz", q)

    @staticmethod
    def identity() -> "UnitQuaternion":
        return UnitQuaternion(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_matrix(r: np.ndarray) -> "UnitQuaternion":
        r = np.asarray(r, dtype=float)
        t = np.trace(r)
        if t > 0:
            s = math.sqrt(t + 1.0) * 2.0
            w = 0.25 * s
            x = (r[2, 1] - r[1, 2]) / s
            y = (r[0, 2] - r[2, 0]) / s
            z = (r[1, 0] - r[0, 1]) / s
        else:
            i = int(np.argmax(np.diag(r)))
            if i == 0:
                s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
                w = (r[2, 1] - r[1, 2]) / s
                x = 0.25 * s
                y = (r[0, 1] + r[1, 0]) / s
                z = (r[0, 2] + r[2, 0]) / s
            elif i == 1:
                s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
                w = (r[0, 2] - r[2, 0]) / s
                x = (r[0, 1] + r[1, 0]) / s
                y = 0.25 * s
                z = (r[1, 2] + r[2, 1]) / s
            else:
                s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
                w = (r[1, 0] - r[0, 1]) / s
                x = (r[0, 2] + r[2, 0]) / s
                y = (r[1, 2] + r[2, 1]) / s
                z = 0.25 * s
        return UnitQuaternion(w, x, y, z)

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "UnitQuaternion":
        a = _vec3(axis)
        n = float(np.linalg.norm(a))
        if n < 1e-12:
            raise FrameError("zero rotation axis")
        a = a / n
        h = 0.5 * angle
        s = math.sin(h)
        return UnitQuaternion(math.cos(h), a[0] * s, a[1] * s, a[2] * s)

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.wxyz
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )


def rotation_angle_between(q1: UnitQuaternion, q2: UnitQuaternion) -> float:
    """Geodesic angle in [0, pi]; invariant under q -> -q."""
    d = abs(float(np.dot(q1.wxyz, q2.wxyz)))
    d = min(d, 1.0)
    return 2.0 * math.acos(d)


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: UnitQuaternion

    def __init__(self, position, orientation: UnitQuaternion):
        object.__setattr__(self, "position", _vec3(position))
        object.__setattr__(self, "orientation", orientation)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), UnitQuaternion.identity())

    def to_transform(self) -> "Transform":
        return Transform(self.orientation.to_matrix(), self.position)

    def to_json(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "quaternion": [float(v) for v in self.orientation.wxyz],
        }

    @staticmethod
    def from_json(d: dict) -> "Pose":
        w, x, y, z = d["quaternion"]
        return Pose(d["position"], UnitQuaternion(w, x, y, z))


@dataclass(frozen=True)
class Transform:
    """Homogeneous transform: 3x3 rotation + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __init__(self, rotation, translation):
        r = np.asarray(rotation, dtype=float).reshape(3, 3)
        t = _vec3(translation)
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-8:
            raise FrameError("rotation matrix is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-8:
            raise FrameError("rotation matrix determinant != +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Transform":
        return Transform(np.eye(3), np.zeros(3))

    @staticmethod
    def from_translation(x: float, y: float, z: float) -> "Transform":
        return Transform(np.eye(3), [x, y, z])

    def to_pose(self) -> Pose:
        return Pose(self.translation, UnitQuaternion.from_matrix(self.rotation))

    def apply(self, p) -> np.ndarray:
        return self.rotation @ _vec3(p) + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m


def compose(a: Transform, b: Transform) -> Transform:
    return Transform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def invert(t: Transform) -> Transform:
    rt = t.rotation.T
    return Transform(rt, -rt @ t.translation)


def pose_from_axes(x, y, z, origin) -> Pose:
    """Pose whose rotation columns are (x, y, z); frame must be right-handed."""
    x, y, z, origin = _vec3(x), _vec3(y), _vec3(z), _vec3(origin)
    for name, v in (("x", x), ("y", y), ("z", z)):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise FrameError(f"{name} axis is not unit norm")
    if abs(np.dot(x, y)) > 1e-6 or abs(np.dot(y, z)) > 1e-6 or abs(np.dot(x, z)) > 1e-6:
        raise FrameError("axes are not mutually orthogonal")
    if np.linalg.norm(np.cross(x, y) - z) > 1e-6:
        raise FrameError("axes are not right-handed (x cross y != z)")
    r = np.column_stack([x, y, z])
    return Pose(origin, UnitQuaternion.from_matrix(r))
