"""Image-based visual servoing with a translation-only interaction matrix.

Eye-in-hand setup: the camera and tool tip are rigidly coupled; each
iteration the fastener's bounding-box center (s) and the projected tool
tip (s*) are measured in normalized image coordinates, the depth is the
median over the bounding box, and the commanded camera-frame velocity is

    v_c = -lambda * pinv(L) * e,   e = s - s*
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se3 import Transform


class BehindCameraError(ValueError):
    """Projected point has nonpositive depth."""


class InvalidDepthError(ValueError):
    """Depth estimate is nonpositive or unavailable."""


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")

    def contains(self, uv) -> bool:
        u, v = uv
        return 0.0 <= u <= self.width and 0.0 <= v <= self.height


@dataclass(frozen=True)
class ServoConfig:
    gain: float = 1.0          # lambda, 1/s
    dt: float = 0.05           # control period, s
    epsilon: float = 1e-3      # convergence threshold on ||e||
    max_iterations: int = 200
    depth_sigma: float = 0.0   # additive depth noise in the simulated camera
    depth_scale: float = 1.0   # multiplicative depth corruption (1 = exact)

    def __post_init__(self):
        if self.gain <= 0 or self.dt <= 0 or self.epsilon <= 0:
            raise ValueError("gain, dt and epsilon must be positive")


@dataclass(frozen=True)
class ServoState:
    iteration: int
    s: np.ndarray
    s_star: np.ndarray
    e: np.ndarray
    z: float
    v_c: np.ndarray


@dataclass(frozen=True)
class ServoResult:
    converged: bool
    reason: str               # "converged" | "max_iterations" | "target_lost"
    trajectory: list


def project(intr: CameraIntrinsics, point_cam) -> tuple:
    """Pinhole projection of a camera-frame point to pixels."""
    x, y, z = np.asarray(point_cam, dtype=float).reshape(3)
    if z <= 0:
        raise BehindCameraError(f"point depth {z} is not positive")
    return (intr.fx * x / z + intr.cx, intr.fy * y / z + intr.cy)


def normalize(intr: CameraIntrinsics, uv) -> np.ndarray:
    u, v = uv
    return np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy])


def interaction_matrix(s_star, z: float) -> np.ndarray:
    """Translation-only 2x3 interaction matrix at depth z."""
    if z <= 0:
        raise InvalidDepthError(f"depth {z} is not positive")
    sx, sy = np.asarray(s_star, dtype=float).reshape(2)
    return np.array([[-1.0 / z, 0.0, sx / z], [0.0, -1.0 / z, sy / z]])


def control(l: np.ndarray, e, gain: float) -> np.ndarray:
    """v_c = -gain * pinv(L) e (Moore-Penrose; minimum norm if rank deficient)."""
    e = np.asarray(e, dtype=float).reshape(2)
    return -gain * (np.linalg.pinv(l) @ e)


def depth_estimate(depth_values) -> float:
    """Median of the finite positive depth samples."""
    vals = np.asarray(depth_values, dtype=float).ravel()
    vals = vals[np.isfinite(vals) & (vals > 0)]
    if vals.size == 0:
        raise InvalidDepthError("no valid depth samples in the bounding box")
    return float(np.median(vals))


@dataclass
class SimulatedCamera:
    """Camera rigidly coupled to the tool tip, observing a fixed world target."""

    intrinsics: CameraIntrinsics
    camera_pose: Transform        # camera in world
    ee_in_camera: np.ndarray      # tool-tip origin expressed in the camera frame
    target_world: np.ndarray

    def __post_init__(self):
        self.ee_in_camera = np.asarray(self.ee_in_camera, dtype=float).reshape(3)
        self.target_world = np.asarray(self.target_world, dtype=float).reshape(3)

    def target_in_camera(self) -> np.ndarray:
        r = self.camera_pose.rotation
        return r.T @ (self.target_world - self.camera_pose.translation)

    def observe(self, cfg: ServoConfig, rng) -> tuple:
        """(s, s_star, z, in_view): normalized features and the depth estimate."""
        p = self.target_in_camera()
        if p[2] <= 0:
            return None, None, None, False
        uv = project(self.intrinsics, p)
        if not self.intrinsics.contains(uv):
            return None, None, None, False
        uv_ee = project(self.intrinsics, self.ee_in_camera)
        s = normalize(self.intrinsics, uv)
        s_star = normalize(self.intrinsics, uv_ee)
        z = float(p[2]) * cfg.depth_scale
        if cfg.depth_sigma > 0:
            z += float(rng.normal(0.0, cfg.depth_sigma))
        z = max(z, 1e-6)
        return s, s_star, z, True

    def move(self, v_c, dt: float) -> None:
        step = self.camera_pose.rotation @ (np.asarray(v_c, dtype=float) * dt)
        self.camera_pose = Transform(self.camera_pose.rotation,
                                     self.camera_pose.translation + step)


def servo_loop(camera: SimulatedCamera, cfg: ServoConfig, rng_seed: int = 0) -> ServoResult:
    """Iterate the control law on the simulated camera until convergence."""
    rng = np.random.default_rng(rng_seed)
    trajectory = []
    for it in range(cfg.max_iterations + 1):
        s, s_star, z, ok = camera.observe(cfg, rng)
        if not ok:
            return ServoResult(False, "target_lost", trajectory)
        e = s - s_star
        if float(np.linalg.norm(e)) < cfg.epsilon:
            trajectory.append(ServoState(it, s, s_star, e, z, np.zeros(3)))
            return ServoResult(True, "converged", trajectory)
        if it == cfg.max_iterations:
            break
        l = interaction_matrix(s_star, z)
        v_c = control(l, e, cfg.gain)
        trajectory.append(ServoState(it, s, s_star, e, z, v_c))
        camera.move(v_c, cfg.dt)
    return ServoResult(False, "max_iterations", trajectory)


def lateral_residual(result: ServoResult) -> float:
    """Image error at loop exit mapped to meters at the final depth."""
    if not result.trajectory:
        return math.inf
    last = result.trajectory[-1]
    return float(np.linalg.norm(last.e) * last.z)
