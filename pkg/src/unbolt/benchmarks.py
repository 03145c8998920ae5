"""Benchmark harnesses: IK solver comparison, corridor-planner comparison,
detector statistics and removal campaigns.  All runs are deterministic
under a fixed seed and emit machine-readable rows for CSV/JSON export.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corridor import (
    CollisionWorld,
    Corridor,
    EmptyGoalSetError,
    PlanningTimeout,
    corridor_contains,
    plan,
    state_valid,
)
from .kinematics import JointConfig, KinematicModel, forward_kinematics
from .numeric_ik import random_seed_config, solve_dls
from .plans import synthesize_task_pose
from .se3 import Pose, rotation_angle_between
from .selection import CostWeights, SelectionConfig, enumerate_candidates, select_best, triangle_area

HOME_ARM = np.array([0.0, -1.2, 1.6, -1.97, -1.57, 0.0])


def home_config(model: KinematicModel) -> JointConfig:
    return JointConfig(0.0, HOME_ARM)


def sample_goal_pose(model: KinematicModel, rng,
                     min_clearance: float = 0.70, min_area: float = 1e-3):
    """Goal pose via FK of a random in-limit configuration.

    Rejection keeps the generating configuration inside the operational
    envelope (plate clearance and triangle-area margins), mirroring the
    filters the selector itself applies.
    """
    lo = np.maximum(model.joint_limits[:, 0], -math.pi)
    hi = np.minimum(model.joint_limits[:, 1], math.pi)
    while True:
        g = rng.uniform(*model.gantry_limits)
        q = JointConfig(g, rng.uniform(lo, hi))
        f = forward_kinematics(model, q)
        plate = f.gantry_plate.translation
        if np.linalg.norm(f.end_effector.translation - plate) < min_clearance:
            continue
        if triangle_area(plate, f.wrist.translation, f.forearm.translation) < min_area:
            continue
        return q, f.end_effector.to_pose()


@dataclass
class IkBenchRow:
    index: int
    analytic_success: bool
    candidates: int
    position_error: float
    rotation_error: float
    total_cost: float
    d_j: float
    p_p: float
    p_a: float
    mu: float
    baseline_success: bool
    baseline_iterations: int
    solve_time: float = 0.0


def ik_bench(model: KinematicModel, n: int = 1000, seed: int = 0,
             sel_cfg: SelectionConfig | None = None,
             weights: CostWeights | None = None,
             run_baseline: bool = True) -> list:
    """IK comparison: analytical enumeration vs single-seed DLS baseline."""
    sel_cfg = sel_cfg or SelectionConfig()
    weights = weights or CostWeights()
    rng = np.random.default_rng(seed)
    home = home_config(model)
    rows = []
    for i in range(n):
        _, target = sample_goal_pose(model, rng)
        t0 = time.perf_counter()
        cands = enumerate_candidates(model, home, target, sel_cfg, weights)
        solve_time = time.perf_counter() - t0
        if cands:
            best = select_best(cands)
            ee = forward_kinematics(model, best.config).end_effector
            perr = float(np.linalg.norm(ee.translation - target.position))
            rerr = rotation_angle_between(ee.to_pose().orientation, target.orientation)
            row = IkBenchRow(i, True, len(cands), perr, rerr, best.total_cost,
                             best.d_j, best.p_p, best.p_a, best.mu, False, 0,
                             solve_time=solve_time)
        else:
            row = IkBenchRow(i, False, 0, math.inf, math.inf,
                             math.inf, math.inf, math.inf, math.inf, 0.0, False, 0,
                             solve_time=solve_time)
        if run_baseline:
            seed_cfg = random_seed_config(model, rng)
            res = solve_dls(model, target, seed_cfg)
            row.baseline_success = res.converged
            row.baseline_iterations = res.iterations
        rows.append(row)
    return rows


@dataclass
class PlanBenchRow:
    trial: int
    mode: str                # "corridor" | "unconstrained"
    success: bool
    plan_time: float
    ee_length: float
    waypoints: int
    straight_line: float
    corridor_sound: bool


def _corridor_free(world: CollisionWorld, c: Corridor) -> bool:
    u, v, w, length = c.frame()
    for lon in np.linspace(-c.margin, length + c.margin, 24):
        for ty in (-c.half_width_y, 0.0, c.half_width_y):
            for tz in (-c.half_width_z, 0.0, c.half_width_z):
                p = c.start + lon * u + ty * v + tz * w
                if any(b.contains(p, margin=0.08) for b in world.boxes):
                    return False
    return True


def sample_benchmark_pair(model: KinematicModel, world: CollisionWorld, rng,
                          z_range=(0.55, 0.75)):
    """Start/goal tool-down poses above the battery with a free straight corridor."""
    while True:
        z1, z2 = rng.uniform(*z_range, 2)
        p1 = np.array([rng.uniform(-0.9, 0.9), rng.uniform(-0.45, 0.45), z1])
        p2 = np.array([rng.uniform(-0.9, 0.9), rng.uniform(-0.45, 0.45), z2])
        if np.linalg.norm(p2 - p1) < 0.3:
            continue
        try:
            pose1 = synthesize_task_pose(p1)
            pose2 = synthesize_task_pose(p2)
        except ValueError:
            continue
        c = Corridor(p1, p2)
        if _corridor_free(world, c):
            return pose1, pose2, c


def plan_bench(model: KinematicModel, world: CollisionWorld, trials: int = 100,
               seed: int = 0, budget: float = 10.0, modes=("unconstrained", "corridor")) -> list:
    rng = np.random.default_rng(seed)
    home = home_config(model)
    rows = []
    for trial in range(trials):
        start_pose, goal_pose, c = sample_benchmark_pair(model, world, rng)
        try:
            start_cands = enumerate_candidates(model, home, start_pose)
            valid = [cand for cand in start_cands if state_valid(world, model, cand.config)]
            # natural reach-down posture: plate roughly overhead of the EE
            def overhang(cand):
                f = forward_kinematics(model, cand.config)
                d = f.end_effector.translation[:2] - f.gantry_plate.translation[:2]
                return float(np.hypot(d[0], d[1]))
            q_start = min(valid, key=overhang).config if valid else None
        except Exception:
            q_start = None
        if q_start is None:
            continue  # pair not executable at all, resample next trial
        for mode in modes:
            corridor = c if mode == "corridor" else None
            try:
                path = plan(world, model, q_start, goal_pose, corridor=corridor,
                            budget=budget, rng_seed=seed * 1000 + trial)
                sound = True
                if corridor is not None:
                    from .corridor import ee_position
                    sound = all(
                        corridor_contains(corridor, ee_position(model, s[0], s[1:]))
                        for s in path.densified
                    )
                rows.append(PlanBenchRow(trial, mode, True, path.plan_time,
                                         path.ee_length, len(path.waypoints),
                                         float(np.linalg.norm(c.goal - c.start)), sound))
            except (PlanningTimeout, EmptyGoalSetError, ValueError):
                rows.append(PlanBenchRow(trial, mode, False, budget, math.inf, 0,
                                         float(np.linalg.norm(c.goal - c.start)), False))
    return rows


def summarize_plan_bench(rows: list) -> dict:
    out = {}
    for mode in ("unconstrained", "corridor"):
        sub = [r for r in rows if r.mode == mode]
        ok = [r for r in sub if r.success]
        out[mode] = {
            "trials": len(sub),
            "successes": len(ok),
            "success_rate": len(ok) / len(sub) if sub else 0.0,
            "mean_ee_length": float(np.mean([r.ee_length for r in ok])) if ok else math.inf,
            "mean_plan_time": float(np.mean([r.plan_time for r in ok])) if ok else math.inf,
            "corridor_sound": all(r.corridor_sound for r in ok),
        }
    return out
