"""Damped-least-squares IK baseline for the solver benchmark.

Single seeded iterative solve on the full 7-DoF chain; used only to
establish the success-rate ordering against the analytical pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import JointConfig, KinematicModel, forward_kinematics, jacobian
from .se3 import Pose


@dataclass(frozen=True)
class DlsResult:
    converged: bool
    config: JointConfig
    position_error: float
    rotation_error: float
    iterations: int


def _pose_error(model: KinematicModel, q: JointConfig, target: Pose):
    ee = forward_kinematics(model, q).end_effector
    dp = target.position - ee.translation
    dr = target.orientation.to_matrix() @ ee.rotation.T
    w = np.array([dr[2, 1] - dr[1, 2], dr[0, 2] - dr[2, 0], dr[1, 0] - dr[0, 1]]) * 0.5
    c = (np.trace(dr) - 1.0) / 2.0
    ang = math.acos(max(-1.0, min(1.0, c)))
    s = math.sin(ang)
    axis = w / s if abs(s) > 1e-9 else w
    return dp, axis * ang, ang


def solve_dls(model: KinematicModel, target: Pose, seed_config: JointConfig,
              max_iterations: int = 200, damping: float = 0.05,
              position_tol: float = 1e-4, rotation_tol: float = 1e-3) -> DlsResult:
    q = seed_config.as_array()
    lam2 = damping * damping
    for it in range(max_iterations):
        cfg = JointConfig.from_array(q)
        dp, drot, ang = _pose_error(model, cfg, target)
        perr = float(np.linalg.norm(dp))
        if perr < position_tol and ang < rotation_tol:
            # the iteration is limit-agnostic; a solve only counts when the
            # solution it lands on is actually feasible
            return DlsResult(model.within_limits(cfg), cfg, perr, ang, it)
        e = np.concatenate([dp, drot])
        j = jacobian(model, cfg)
        jt = j.T
        dq = jt @ np.linalg.solve(j @ jt + lam2 * np.eye(6), e)
        step = float(np.max(np.abs(dq)))
        if step > 0.5:
            dq *= 0.5 / step
        q = q + dq
    cfg = JointConfig.from_array(q)
    dp, _, ang = _pose_error(model, cfg, target)
    return DlsResult(False, cfg, float(np.linalg.norm(dp)), ang, max_iterations)


def random_seed_config(model: KinematicModel, rng) -> JointConfig:
    g = rng.uniform(*model.gantry_limits)
    arm = rng.uniform(np.maximum(model.joint_limits[:, 0], -math.pi),
                      np.minimum(model.joint_limits[:, 1], math.pi))
    return JointConfig(g, arm)
