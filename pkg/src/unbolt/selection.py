"""Gantry-offset IK candidate enumeration, filtering and multi-objective scoring.

For one world-frame target, up to 21 gantry offsets x 8 arm branches = 168
candidates are enumerated; survivors of joint-limit, plate-clearance and
triangle-area filters are scored by

    total = alpha * d_J + beta * p_P + gamma * p_A

where d_J is the weighted joint distance to the current configuration,
p_P = 1 / (wrist-to-plate distance) and p_A = 1 / (plate-wrist-forearm
triangle area).  Yoshikawa manipulability is attached as a diagnostic only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import (
    JointConfig,
    KinematicModel,
    analytic_ik_arm,
    arm_fk_matrices,
    jacobian,
    manipulability,
)
from .se3 import Pose, Transform, UnitQuaternion, compose, invert


class NoSolutionError(RuntimeError):
    """No IK candidate survives enumeration and filtering."""


@dataclass(frozen=True)
class CostWeights:
    joint: np.ndarray = field(default_factory=lambda: np.array([0.1, 1, 1, 1, 1, 1, 1.0]))
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.joint, dtype=float).reshape(7)
        object.__setattr__(self, "joint", w)
        if np.any(w < 0) or self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("weights must be nonnegative")
        if not (np.any(w > 0) or self.alpha > 0 or self.beta > 0 or self.gamma > 0):
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class SelectionConfig:
    gantry_range: float = 1.0        # offsets span +- this range (m)
    gantry_step: float = 0.1         # 21 offsets at the defaults
    min_plate_clearance: float = 0.65  # EE-to-plate filter (m)
    min_triangle_area: float = 1e-4  # A_min (m^2)

    def __post_init__(self):
        if self.gantry_step <= 0:
            raise ValueError("gantry step must be positive")
        if self.min_plate_clearance < 0:
            raise ValueError("clearance must be nonnegative")

    def offsets(self) -> np.ndarray:
        n = int(round(self.gantry_range / self.gantry_step))
        return np.arange(-n, n + 1) * self.gantry_step


@dataclass(frozen=True)
class IkCandidate:
    config: JointConfig
    d_j: float
    d_ee: float        # wrist-to-plate distance (m), basis of p_P
    p_p: float
    a_tri: float       # plate-wrist-forearm triangle area (m^2)
    p_a: float
    mu: float          # manipulability, diagnostic only
    total_cost: float
    offset_index: int
    branch_index: int


def joint_distance(q_c: JointConfig, q_k: JointConfig, w) -> float:
    """Weighted joint-space distance sqrt(sum w_i (qc_i - qk_i)^2)."""
    d = q_c.as_array() - q_k.as_array()
    return math.sqrt(float(np.sum(np.asarray(w, dtype=float) * d * d)))


def triangle_area(p1, p2, p3) -> float:
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    return 0.5 * float(np.linalg.norm(np.cross(p2 - p1, p3 - p1)))


def _fit_limits(branch: np.ndarray, limits: np.ndarray):
    """Shift each joint by +-2pi if needed to satisfy limits; None if impossible."""
    out = branch.copy()
    for i in range(6):
        lo, hi = limits[i]
        v = out[i]
        if lo <= v <= hi:
            continue
        for shift in (2 * math.pi, -2 * math.pi):
            if lo <= v + shift <= hi:
                out[i] = v + shift
                break
        else:
            return None
    return out


def enumerate_candidates(
    model: KinematicModel,
    current_q: JointConfig,
    target: Pose,
    cfg: SelectionConfig | None = None,
    weights: CostWeights | None = None,
) -> list:
    """All filtered, scored IK candidates for a world-frame target, sorted by cost."""
    cfg = cfg or SelectionConfig()
    weights = weights or CostWeights()
    lo, hi = model.gantry_limits

    gantry_values = []
    for off in cfg.offsets():
        g = min(max(current_q.gantry + off, lo), hi)
        if not any(abs(g - seen) < 1e-9 for seen in gantry_values):
            gantry_values.append(g)

    target_t = target.to_transform()
    candidates = []
    for oi, g in enumerate(gantry_values):
        base = model.arm_base_in_world(g)
        local = compose(invert(base), target_t).to_pose()
        branches = analytic_ik_arm(model, local)
        plate = base.translation
        for bi, branch in enumerate(branches):
            fitted = _fit_limits(branch, model.joint_limits)
            if fitted is None:
                continue
            q = JointConfig(g, fitted)
            frames = arm_fk_matrices(model, fitted)
            bm = base.matrix()
            forearm = (bm @ frames[2])[:3, 3]
            wrist = (bm @ frames[4])[:3, 3]
            ee = (bm @ frames[5])[:3, 3]
            if float(np.linalg.norm(ee - plate)) < cfg.min_plate_clearance:
                continue
            a_tri = triangle_area(plate, wrist, forearm)
            if a_tri < cfg.min_triangle_area:
                continue
            d_wp = float(np.linalg.norm(wrist - plate))
            d_j = joint_distance(current_q, q, weights.joint)
            p_p = 1.0 / d_wp
            p_a = 1.0 / a_tri
            mu = manipulability(jacobian(model, q))
            total = weights.alpha * d_j + weights.beta * p_p + weights.gamma * p_a
            candidates.append(
                IkCandidate(
                    config=q, d_j=d_j, d_ee=d_wp, p_p=p_p, a_tri=a_tri, p_a=p_a,
                    mu=mu, total_cost=total, offset_index=oi, branch_index=bi,
                )
            )
    candidates.sort(key=lambda c: (c.total_cost, c.d_j, c.offset_index, c.branch_index))
    return candidates


def select_best(candidates: list) -> IkCandidate:
    if not candidates:
        raise NoSolutionError("no IK candidate survived filtering")
    return min(candidates, key=lambda c: (c.total_cost, c.d_j, c.offset_index, c.branch_index))
