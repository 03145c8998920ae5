"""Kinematics for a 6R arm riding a 1-DoF prismatic gantry.

Forward kinematics and the closed-form inverse use the classic
Rz(theta) Tz(d) Tx(a) Rx(alpha) parameterization with the layout common to
collaborative 6R arms (two parallel in-plane links, offset wrist).  The
inverse solver enumerates all shoulder/wrist/elbow alternatives, up to
2 x 2 x 2 = 8 branches per target.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .se3 import Pose, Transform, UnitQuaternion, compose, invert

TWO_PI = 2.0 * math.pi


class ModelError(ValueError):
    """Raised when a kinematic model file is malformed."""


@dataclass(frozen=True)
class JointConfig:
    """gantry travel (m) + six arm joint angles (rad)."""

    gantry: float
    arm: np.ndarray

    def __init__(self, gantry: float, arm):
        a = np.asarray(arm, dtype=float).reshape(6)
        if not (np.isfinite(gantry) and np.all(np.isfinite(a))):
            raise ModelError("non-finite joint values")
        object.__setattr__(self, "gantry", float(gantry))
        object.__setattr__(self, "arm", a)

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.gantry], self.arm])

    @staticmethod
    def from_array(v) -> "JointConfig":
        v = np.asarray(v, dtype=float).reshape(7)
        return JointConfig(v[0], v[1:])


@dataclass(frozen=True)
class FrameSet:
    """World poses of the named frames for one configuration."""

    gantry_plate: Transform
    forearm: Transform
    wrist: Transform
    end_effector: Transform


@dataclass(frozen=True)
class KinematicModel:
    name: str
    # arm link constants, classic convention
    d1: float
    a2: float
    a3: float
    d4: float
    d5: float
    d6: float
    gantry_axis: np.ndarray          # unit vector, world frame
    gantry_limits: tuple             # (low, high) meters
    base_mount: Transform            # arm base in the gantry-plate frame, plate at gantry=0
    joint_limits: np.ndarray         # 6x2 radians

    def __post_init__(self):
        lo, hi = self.gantry_limits
        if not lo < hi:
            raise ModelError("gantry limits must satisfy low < high")
        if abs(np.linalg.norm(self.gantry_axis) - 1.0) > 1e-9:
            raise ModelError("gantry axis must be unit norm")
        if np.any(self.joint_limits[:, 0] >= self.joint_limits[:, 1]):
            raise ModelError("joint limits must satisfy low < high")

    @property
    def max_reach(self) -> float:
        # generous workspace radius bound from the arm base
        return abs(self.a2) + abs(self.a3) + abs(self.d4) + abs(self.d5) + abs(self.d6)

    def arm_base_in_world(self, gantry: float) -> Transform:
        plate = Transform(np.eye(3), self.gantry_axis * gantry)
        return compose(plate, self.base_mount)

    def within_limits(self, q: JointConfig) -> bool:
        lo, hi = self.gantry_limits
        if not (lo - 1e-12 <= q.gantry <= hi + 1e-12):
            return False
        return bool(
            np.all(q.arm >= self.joint_limits[:, 0] - 1e-12)
            and np.all(q.arm <= self.joint_limits[:, 1] + 1e-12)
        )

    @staticmethod
    def from_json(path) -> "KinematicModel":
        doc = json.loads(Path(path).read_text())
        try:
            arm = doc["arm"]
            mount = doc["base_mount"]
            q = mount["quaternion"]
            base = Transform(
                UnitQuaternion(q[0], q[1], q[2], q[3]).to_matrix(), mount["position"]
            )
            return KinematicModel(
                name=doc["name"],
                d1=arm["d1"], a2=arm["a2"], a3=arm["a3"],
                d4=arm["d4"], d5=arm["d5"], d6=arm["d6"],
                gantry_axis=np.asarray(doc["gantry"]["axis"], dtype=float),
                gantry_limits=tuple(doc["gantry"]["limits"]),
                base_mount=base,
                joint_limits=np.asarray(doc["joint_limits"], dtype=float).reshape(6, 2),
            )
        except KeyError as e:
            raise ModelError(f"missing model field: {e}") from e

    @staticmethod
    def default() -> "KinematicModel":
        return KinematicModel.from_json(
            Path(__file__).parent / "data" / "ur16e_gantry.json"
        )


def _dh(theta: float, d: float, a: float, alpha: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _dh_rows(model: KinematicModel, arm: np.ndarray):
    return (
        (arm[0], model.d1, 0.0, math.pi / 2),
        (arm[1], 0.0, model.a2, 0.0),
        (arm[2], 0.0, model.a3, 0.0),
        (arm[3], model.d4, 0.0, math.pi / 2),
        (arm[4], model.d5, 0.0, -math.pi / 2),
        (arm[5], model.d6, 0.0, 0.0),
    )


def arm_fk_matrices(model: KinematicModel, arm: np.ndarray) -> list:
    """Cumulative transforms T0i, i = 1..6, in the arm base frame."""
    frames = []
    t = np.eye(4)
    for row in _dh_rows(model, arm):
        t = t @ _dh(*row)
        frames.append(t)
    return frames


def forward_kinematics(model: KinematicModel, q: JointConfig) -> FrameSet:
    base = model.arm_base_in_world(q.gantry)
    bm = base.matrix()
    frames = arm_fk_matrices(model, q.arm)
    def world(t4):
        m = bm @ t4
        return Transform(m[:3, :3], m[:3, 3])
    # plate = arm base mount; forearm = distal end of the forearm link (frame 3);
    # wrist = frame 5 origin; end-effector = frame 6
    return FrameSet(
        gantry_plate=base,
        forearm=world(frames[2]),
        wrist=world(frames[4]),
        end_effector=world(frames[5]),
    )


def ee_pose(model: KinematicModel, q: JointConfig) -> Pose:
    return forward_kinematics(model, q).end_effector.to_pose()


def joint_origins_axes(model: KinematicModel, q: JointConfig):
    """World-frame origin and z-axis of each arm joint, plus the EE origin."""
    base = model.arm_base_in_world(q.gantry).matrix()
    frames = [base @ t for t in arm_fk_matrices(model, q.arm)]
    origins = [base[:3, 3]] + [f[:3, 3] for f in frames]
    axes = [base[:3, 2]] + [f[:3, 2] for f in frames]
    return origins, axes, frames[-1]


def jacobian(model: KinematicModel, q: JointConfig) -> np.ndarray:
    """Geometric Jacobian, 6x7: rows (linear; angular), columns (gantry; 6 joints)."""
    origins, axes, ee = joint_origins_axes(model, q)
    pe = ee[:3, 3]
    j = np.zeros((6, 7))
    j[:3, 0] = model.gantry_axis  # prismatic column, zero angular part
    for i in range(6):
        z = axes[i]  # joint i+1 rotates about the z-axis of frame i
        j[:3, i + 1] = np.cross(z, pe - origins[i])
        j[3:, i + 1] = z
    return j


def manipulability(j: np.ndarray) -> float:
    """Yoshikawa index sqrt(det(J J^T)), clamped at zero against noise."""
    g = j @ j.T
    d = float(np.linalg.det(g))
    return math.sqrt(max(d, 0.0))


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = (a + math.pi) % TWO_PI - math.pi
    if a <= -math.pi:
        a += TWO_PI
    return a


_BRANCH_EPS = 1e-10


def analytic_ik_arm(model: KinematicModel, target_in_arm_base: Pose,
                    position_tol: float = 1e-6, rotation_tol: float = 1e-6) -> list:
    """Closed-form arm IK: all branches for a target in the arm base frame.

    Returns a list of 6-vectors wrapped to (-pi, pi].  Unreachable targets
    yield an empty list; targets at internal singularities may yield fewer
    than 8 branches (collapsed branch pairs are emitted once).
    """
    t = target_in_arm_base.to_transform().matrix()
    r = t[:3, :3]
    p = t[:3, 3]
    d1, a2, a3, d4, d5, d6 = model.d1, model.a2, model.a3, model.d4, model.d5, model.d6

    if np.linalg.norm(p) > model.max_reach + d1:
        return []

    solutions = []
    # shoulder: position of frame-5 origin projected on the base plane
    p05 = p - d6 * r[:, 2]
    rr = math.hypot(p05[0], p05[1])
    if rr < abs(d4) - _BRANCH_EPS:
        return []
    psi = math.atan2(p05[1], p05[0])
    phi = math.acos(min(1.0, abs(d4) / rr)) if rr > 0 else 0.0
    # sign convention below matches d4 > 0
    th1_set = [psi + phi + math.pi / 2]
    if phi > _BRANCH_EPS:
        th1_set.append(psi - phi + math.pi / 2)

    for th1 in th1_set:
        s1, c1 = math.sin(th1), math.cos(th1)
        c5 = (p[0] * s1 - p[1] * c1 - d4) / d6
        if abs(c5) > 1.0 + 1e-9:
            continue
        c5 = max(-1.0, min(1.0, c5))
        th5_mag = math.acos(c5)
        th5_set = [th5_mag]
        if th5_mag > _BRANCH_EPS:
            th5_set.append(-th5_mag)

        for th5 in th5_set:
            s5 = math.sin(th5)
            if abs(s5) > _BRANCH_EPS:
                th6 = math.atan2(
                    (-r[0, 1] * s1 + r[1, 1] * c1) / s5,
                    (r[0, 0] * s1 - r[1, 0] * c1) / s5,
                )
            else:
                th6 = 0.0  # wrist singular: th6 is free, pin it

            t01 = _dh(th1, d1, 0.0, math.pi / 2)
            t45 = _dh(th5, d5, 0.0, -math.pi / 2)
            t56 = _dh(th6, d6, 0.0, 0.0)
            t14 = np.linalg.inv(t01) @ t @ np.linalg.inv(t45 @ t56)
            p14 = t14[:3, 3]
            # frame-1 planar 2R subproblem; p14 z-component is fixed at d4
            lx, ly = p14[0], p14[1]
            ll = lx * lx + ly * ly
            c3 = (ll - a2 * a2 - a3 * a3) / (2.0 * a2 * a3)
            if abs(c3) > 1.0 + 1e-9:
                continue
            c3 = max(-1.0, min(1.0, c3))
            s3 = math.sqrt(max(0.0, 1.0 - c3 * c3))
            th3_set = [math.atan2(s3, c3)]
            if s3 > _BRANCH_EPS:
                th3_set.append(math.atan2(-s3, c3))

            th234 = math.atan2(t14[1, 0], t14[0, 0])
            for th3 in th3_set:
                th2 = math.atan2(ly, lx) - math.atan2(
                    a3 * math.sin(th3), a2 + a3 * math.cos(th3)
                )
                th4 = th234 - th2 - th3
                cand = np.array([wrap_angle(v) for v in (th1, th2, th3, th4, th5, th6)])
                solutions.append(cand)

    # drop numerically duplicated branches and verify the round trip
    out = []
    for cand in solutions:
        frames = arm_fk_matrices(model, cand)
        t06 = frames[-1]
        perr = float(np.linalg.norm(t06[:3, 3] - p))
        rerr = _rotation_angle(t06[:3, :3].T @ r)
        if perr > position_tol or rerr > rotation_tol:
            continue
        if any(np.max(np.abs(_angdiff(cand, prev))) < 1e-8 for prev in out):
            continue
        out.append(cand)
    return out


def _angdiff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([wrap_angle(x) for x in (a - b)])


def _rotation_angle(r: np.ndarray) -> float:
    c = (np.trace(r) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, c)))
