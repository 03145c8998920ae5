"""Deterministic skill layer: relative motion, fastener removal, inventory.

One engine owns the simulated robot (kinematic model + collision world +
current configuration) and the active disassembly plan.  Inventory mutates
only on verified removals, so the removed count always equals the count of
verified-true removal results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corridor import (
    CollisionWorld,
    Corridor,
    EmptyGoalSetError,
    PlanningTimeout,
    plan as plan_motion,
)
from .kinematics import JointConfig, KinematicModel, forward_kinematics
from .plans import DisassemblyPlan, PlanError, mark_removed, remaining
from .removal import EngagementModel, StrategyNoise, attempt_removal
from .se3 import Pose

VERIFY_TOL = 1e-3  # m, motion counts as verified below this displacement error


class SkillError(RuntimeError):
    """A skill request that cannot be executed (reported, not raised to wire)."""


@dataclass
class MotionResult:
    achieved: np.ndarray       # realized EE displacement (m)
    requested: np.ndarray
    verified: bool
    ee_path_length: float
    waypoints: int
    plan_time: float


@dataclass
class RemovalResult:
    subtask_id: str
    engaged: bool
    verified: bool
    lateral_offset: float      # m, commanded-vs-true misalignment drawn


@dataclass
class SkillEngine:
    model: KinematicModel
    world: CollisionWorld
    plan: DisassemblyPlan
    q_current: JointConfig
    engagement: EngagementModel = field(default_factory=EngagementModel)
    noise: StrategyNoise = field(
        default_factory=lambda: StrategyNoise("taught-in", lateral_sigma=0.0))
    budget: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.rng_seed)

    def reseed(self, seed: int) -> None:
        self.rng_seed = seed
        self._rng = np.random.default_rng(seed)

    def ee_pose(self) -> Pose:
        return forward_kinematics(self.model, self.q_current).end_effector.to_pose()

    def plan_to_pose_relative(self, dx: float, dy: float, dz: float,
                              use_corridor: bool = True) -> MotionResult:
        req = np.array([dx, dy, dz], dtype=float)
        cur = self.ee_pose()
        if float(np.linalg.norm(req)) < 1e-12:
            return MotionResult(np.zeros(3), req, True, 0.0, 1, 0.0)
        target_p = cur.position + req
        reach = self.model.max_reach + (self.model.gantry_limits[1] - self.model.gantry_limits[0])
        if float(np.linalg.norm(target_p)) > reach:
            raise SkillError(f"displacement {req.tolist()} leaves the workspace")
        target = Pose(target_p, cur.orientation)
        corridor = None
        if use_corridor:
            corridor = Corridor(cur.position, target_p)
        try:
            path = plan_motion(self.world, self.model, self.q_current, target,
                               corridor=corridor, budget=self.budget,
                               rng_seed=int(self._rng.integers(2**31)))
        except (EmptyGoalSetError, PlanningTimeout) as e:
            raise SkillError(f"motion planning failed: {e}") from e
        self.q_current = JointConfig.from_array(path.waypoints[-1])
        achieved = self.ee_pose().position - cur.position
        verified = bool(np.linalg.norm(achieved - req) < VERIFY_TOL)
        return MotionResult(achieved, req, verified, path.ee_length,
                            len(path.waypoints), path.plan_time)

    def remove_fastener(self, subtask_id: str) -> RemovalResult:
        try:
            task = self.plan.find(subtask_id)
        except PlanError as e:
            raise SkillError(str(e)) from e
        if task.is_removed:
            raise SkillError(f"subtask {subtask_id!r} already removed")
        true_pos = task.pose.position
        offset = (self._rng.normal(0.0, self.noise.lateral_sigma, 2)
                  + np.asarray(self.noise.lateral_bias))
        commanded = true_pos + np.array([offset[0], offset[1], 0.0])
        engaged = attempt_removal(true_pos, commanded, self.engagement)
        # verified mirrors simulated ground truth; inventory only moves on it
        mark_removed(self.plan, subtask_id, verified=engaged)
        return RemovalResult(subtask_id, engaged, engaged,
                             float(np.hypot(offset[0], offset[1])))

    def query_inventory(self, step: int) -> list:
        try:
            return remaining(self.plan, step)
        except PlanError as e:
            raise SkillError(str(e)) from e
