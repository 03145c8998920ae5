"""Joint-space sampling planner with an optional end-effector corridor.

Bidirectional RRT (connect variant) over (gantry, 6 joints).  The goal set
is the surviving IK candidate list for the goal pose.  Corridor mode
constrains the end-effector position to a box aligned with the
start-to-goal direction; constraint handling is rejection of invalid
states, with half of the samples proposed by inverse kinematics at points
drawn inside the corridor to keep the tube reachable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import se3
from .kinematics import (
    TWO_PI,
    JointConfig,
    KinematicModel,
    analytic_ik_arm,
    arm_fk_matrices,
    forward_kinematics,
)
from .se3 import Pose
from .selection import CostWeights, SelectionConfig, enumerate_candidates

DENSIFY_RAD = 0.02    # rad per interpolation step
DENSIFY_M = 0.005     # m per interpolation step (gantry)
LINK_RADIUS = 0.06    # m, sphere radius for coarse link collision geometry


class EmptyGoalSetError(RuntimeError):
    """No valid IK candidate exists for the goal pose."""


class PlanningTimeout(RuntimeError):
    def __init__(self, iterations: int):
        super().__init__(f"planning budget exhausted after {iterations} iterations")
        self.iterations = iterations


@dataclass(frozen=True)
class Box:
    """Axis-aligned obstacle box (world frame)."""
    lo: np.ndarray
    hi: np.ndarray

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float).reshape(3)
        hi = np.asarray(hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError("box extents must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, p: np.ndarray, margin: float = 0.0) -> bool:
        return bool(np.all(p >= self.lo - margin) and np.all(p <= self.hi + margin))


@dataclass(frozen=True)
class CollisionWorld:
    boxes: tuple = ()

    @staticmethod
    def battery_cell() -> "CollisionWorld":
        # battery pack on the table plus the floor slab
        return CollisionWorld(boxes=(
            Box([-1.06, -0.61, 0.0], [1.06, 0.61, 0.30]),
            Box([-2.0, -2.0, -0.2], [2.0, 2.0, 0.0]),
        ))


@dataclass(frozen=True)
class Corridor:
    start: np.ndarray
    goal: np.ndarray
    half_width_y: float = 0.10
    half_width_z: float = 0.10
    margin: float = 0.05

    def __init__(self, start, goal, half_width_y=0.10, half_width_z=0.10, margin=0.05):
        start = np.asarray(start, dtype=float).reshape(3)
        goal = np.asarray(goal, dtype=float).reshape(3)
        if np.linalg.norm(goal - start) <= 0:
            raise ValueError("corridor endpoints must be distinct")
        if half_width_y <= 0 or half_width_z <= 0:
            raise ValueError("half widths must be positive")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)
        object.__setattr__(self, "half_width_y", float(half_width_y))
        object.__setattr__(self, "half_width_z", float(half_width_z))
        object.__setattr__(self, "margin", float(margin))

    def frame(self):
        u = self.goal - self.start
        length = float(np.linalg.norm(u))
        u = u / length
        # fixed orthonormal completion
        ref = np.array([0.0, 0.0, 1.0]) if abs(u[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        v = np.cross(u, ref)
        v = v / np.linalg.norm(v)
        w = np.cross(u, v)
        return u, v, w, length


def corridor_contains(c: Corridor, p) -> bool:
    p = np.asarray(p, dtype=float).reshape(3)
    u, v, w, length = c.frame()
    d = p - c.start
    lon = float(d @ u)
    if not (-c.margin <= lon <= length + c.margin):
        return False
    return abs(float(d @ v)) <= c.half_width_y and abs(float(d @ w)) <= c.half_width_z


def _link_points(model: KinematicModel, gantry: float, arm: np.ndarray) -> np.ndarray:
    """Coarse sphere centers along the kinematic chain (world frame)."""
    bm = model.arm_base_in_world(gantry).matrix()
    frames = arm_fk_matrices(model, arm)
    keys = [bm[:3, 3]] + [(bm @ f)[:3, 3] for f in frames]
    pts = []
    for a, b in zip(keys[:-1], keys[1:]):
        for t in (0.0, 0.34, 0.67):
            pts.append(a + t * (b - a))
    pts.append(keys[-1])
    return np.array(pts)


def ee_position(model: KinematicModel, gantry: float, arm: np.ndarray) -> np.ndarray:
    bm = model.arm_base_in_world(gantry).matrix()
    return (bm @ arm_fk_matrices(model, arm)[-1])[:3, 3]


def state_valid(world: CollisionWorld, model: KinematicModel, q: JointConfig,
                corridor: Corridor | None = None) -> bool:
    if not model.within_limits(q):
        return False
    pts = _link_points(model, q.gantry, q.arm)
    for box in world.boxes:
        inside = np.all((pts >= box.lo - LINK_RADIUS) & (pts <= box.hi + LINK_RADIUS), axis=1)
        if inside.any():
            return False
    if corridor is not None and not corridor_contains(corridor, pts[-1]):
        return False
    return True


@dataclass
class JointPath:
    waypoints: list               # list of 7-arrays
    densified: np.ndarray         # (k, 7) states at the densification resolution
    ee_length: float
    iterations: int
    plan_time: float

    def configs(self):
        return [JointConfig.from_array(w) for w in self.waypoints]


SEARCH_RAD = 0.05     # coarser edge resolution during tree search
SEARCH_M = 0.0125


def _interp_states(a: np.ndarray, b: np.ndarray,
                   res_rad: float = DENSIFY_RAD, res_m: float = DENSIFY_M) -> np.ndarray:
    """States from a to b (inclusive) at the given resolution."""
    d = b - a
    arm_span = float(np.max(np.abs(d[1:])))
    steps = max(
        int(math.ceil(abs(d[0]) / res_m)),
        int(math.ceil(arm_span / res_rad)) if arm_span > 0 else 0,
        1,
    )
    ts = np.linspace(0.0, 1.0, steps + 1)
    return a[None, :] + ts[:, None] * d[None, :]


def _edge_valid(world, model, a, b, corridor,
                res_rad: float = SEARCH_RAD, res_m: float = SEARCH_M) -> bool:
    for s in _interp_states(a, b, res_rad, res_m)[1:]:
        if not state_valid(world, model, JointConfig.from_array(s), corridor):
            return False
    return True


_STEP = np.array([0.05] + [0.2] * 6)  # per-DOF extension step (m, rad)


def _steer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    scale = float(np.max(np.abs(d) / _STEP))
    if scale <= 1.0:
        return b.copy()
    return a + d / scale


class _Tree:
    def __init__(self, roots):
        self._buf = np.empty((max(64, len(roots)), 7))
        self.size = 0
        self.parents = []
        for r in roots:
            self.add(np.asarray(r, dtype=float), -1)

    @property
    def nodes(self) -> np.ndarray:
        return self._buf[: self.size]

    def nearest(self, q: np.ndarray) -> int:
        d = np.sum(((self.nodes - q) / _STEP) ** 2, axis=1)
        return int(np.argmin(d))

    def add(self, q: np.ndarray, parent: int) -> int:
        if self.size == self._buf.shape[0]:
            self._buf = np.vstack([self._buf, np.empty_like(self._buf)])
        self._buf[self.size] = q
        self.parents.append(parent)
        self.size += 1
        return self.size - 1

    def path_to_root(self, i: int) -> list:
        out = []
        while i >= 0:
            out.append(self._buf[i].copy())
            i = self.parents[i]
        return out


def goal_candidates(model: KinematicModel, q_start: JointConfig, goal: Pose,
                    sel_cfg: SelectionConfig | None = None,
                    weights: CostWeights | None = None,
                    max_goals: int | None = None) -> list:
    """Goal set for the planner: every surviving IK candidate, best first."""
    cands = enumerate_candidates(model, q_start, goal, sel_cfg, weights)
    if max_goals is not None:
        cands = cands[:max_goals]
    return [c.config for c in cands]


TRACK_EE_STEP = 0.02      # m of end-effector travel per tracking step
TRACK_MAX_JOINT = 0.35    # rad, largest per-joint jump tolerated while tracking
_TRACK_DG = np.linspace(-0.06, 0.06, 7)


def _track_corridor(world, model, q_start: JointConfig, goal: Pose,
                    corridor: Corridor, t0: float, budget: float):
    """Greedy IK tracking of the corridor centerline; None when it gets stuck.

    Walks the end effector in small steps from its current position to the
    goal, interpolating orientation, and at each step keeps the IK branch
    (and a nearby gantry value) closest to the previous configuration.
    """
    from scipy.spatial.transform import Rotation, Slerp

    start_tf = forward_kinematics(model, q_start).end_effector
    p0 = start_tf.translation
    p1 = goal.position
    dist = float(np.linalg.norm(p1 - p0))
    steps = max(int(math.ceil(dist / TRACK_EE_STEP)), 1)
    slerp = Slerp([0.0, 1.0], Rotation.from_matrix(
        [start_tf.rotation, goal.orientation.to_matrix()]))

    prev = q_start
    waypoints = [q_start.as_array()]
    for k in range(1, steps + 1):
        if time.monotonic() - t0 > budget:
            return None
        t = k / steps
        pose = Pose(p0 + t * (p1 - p0),
                    se3.UnitQuaternion.from_matrix(slerp(t).as_matrix()))
        best = None
        for dg in _TRACK_DG:
            g = float(np.clip(prev.gantry + dg, *model.gantry_limits))
            base = model.arm_base_in_world(g)
            local = se3.compose(se3.invert(base), pose.to_transform()).to_pose()
            for arm in analytic_ik_arm(model, local):
                arm = np.asarray(arm, dtype=float)
                # unwrap toward the previous configuration
                arm = arm + TWO_PI * np.round((prev.arm - arm) / TWO_PI)
                jump = float(np.max(np.abs(arm - prev.arm)))
                if jump > TRACK_MAX_JOINT:
                    continue
                q = JointConfig(g, arm)
                score = jump + abs(dg)
                if (best is None or score < best[0]) and state_valid(world, model, q, corridor):
                    best = (score, q)
        if best is None:
            return None
        prev = best[1]
        waypoints.append(prev.as_array())
    return waypoints


def plan(world: CollisionWorld, model: KinematicModel, q_start: JointConfig,
         goal: Pose, corridor: Corridor | None = None, budget: float = 10.0,
         rng_seed: int = 0, sel_cfg: SelectionConfig | None = None,
         weights: CostWeights | None = None) -> JointPath:
    """Bidirectional RRT-connect from q_start to the IK goal set of `goal`.

    In corridor mode a greedy centerline-tracking pass runs first; sampling
    is the fallback when tracking gets stuck.
    """
    t0 = time.monotonic()
    rng = np.random.default_rng(rng_seed)
    if not state_valid(world, model, q_start, corridor):
        raise ValueError("start state is invalid")
    goals = goal_candidates(model, q_start, goal, sel_cfg, weights)
    goals = [g for g in goals if state_valid(world, model, g, corridor)]
    if not goals:
        raise EmptyGoalSetError("goal pose has no valid IK candidates")

    if corridor is not None:
        tracked = _track_corridor(world, model, q_start, goal, corridor, t0, budget)
        if tracked is not None:
            result = _finish(model, tracked, len(tracked), t0)
            if all(state_valid(world, model, JointConfig.from_array(s), corridor)
                   for s in result.densified):
                return result

    start_arr = q_start.as_array()
    for g in goals:
        if np.max(np.abs(g.as_array() - start_arr)) < 1e-9:
            return _finish(model, [start_arr], 0, t0)

    lo = np.array([model.gantry_limits[0]] + [max(l, -math.pi) for l in model.joint_limits[:, 0]])
    hi = np.array([model.gantry_limits[1]] + [min(h, math.pi) for h in model.joint_limits[:, 1]])

    def sample() -> np.ndarray:
        if corridor is not None and rng.random() < 0.5:
            # corridor-informed proposal: raw IK at a point drawn inside the tube
            u, v, w, length = corridor.frame()
            p = (corridor.start + rng.uniform(0, length) * u
                 + rng.uniform(-corridor.half_width_y, corridor.half_width_y) * v
                 + rng.uniform(-corridor.half_width_z, corridor.half_width_z) * w)
            g = float(np.clip(q_start.gantry + rng.uniform(-1.0, 1.0),
                              model.gantry_limits[0], model.gantry_limits[1]))
            base = model.arm_base_in_world(g)
            local = se3.compose(se3.invert(base), Pose(p, goal.orientation).to_transform()).to_pose()
            branches = analytic_ik_arm(model, local)
            if branches:
                pick = branches[int(rng.integers(len(branches)))]
                return np.concatenate([[g], pick])
        for _ in range(50):
            q = rng.uniform(lo, hi)
            if corridor is None:
                return q
            if corridor_contains(corridor, ee_position(model, q[0], q[1:])):
                return q
        return rng.uniform(lo, hi)

    ta = _Tree([start_arr])
    tb = _Tree([g.as_array() for g in goals])
    swapped = False
    iterations = 0
    while time.monotonic() - t0 < budget:
        iterations += 1
        q_rand = sample()
        # extend tree A one step toward the sample
        ia = ta.nearest(q_rand)
        q_new = _steer(ta.nodes[ia], q_rand)
        if not (state_valid(world, model, JointConfig.from_array(q_new), corridor)
                and _edge_valid(world, model, ta.nodes[ia], q_new, corridor)):
            ta, tb, swapped = tb, ta, not swapped
            continue
        na = ta.add(q_new, ia)
        # greedily connect tree B to the new node
        ib = tb.nearest(q_new)
        q_cur = tb.nodes[ib].copy()
        node_b = ib
        reached = False
        while True:
            q_next = _steer(q_cur, q_new)
            if not _edge_valid(world, model, q_cur, q_next, corridor):
                break
            node_b = tb.add(q_next, node_b)
            q_cur = q_next
            if np.max(np.abs(q_cur - q_new)) < 1e-9:
                reached = True
                break
        if reached:
            path_a = ta.path_to_root(na)[::-1]
            path_b = tb.path_to_root(node_b)
            if swapped:
                path_a, path_b = path_b[::-1], path_a[::-1]
            waypoints = path_a + path_b[1:]
            result = _finish(model, waypoints, iterations, t0)
            # search used a coarser edge resolution; certify the final path
            if all(state_valid(world, model, JointConfig.from_array(s), corridor)
                   for s in result.densified):
                return result
        ta, tb, swapped = tb, ta, not swapped
    raise PlanningTimeout(iterations)


def _finish(model: KinematicModel, waypoints: list, iterations: int, t0: float) -> JointPath:
    dense = densify(waypoints)
    return JointPath(
        waypoints=waypoints,
        densified=dense,
        ee_length=ee_path_length(model, dense),
        iterations=iterations,
        plan_time=time.monotonic() - t0,
    )


def densify(waypoints: list) -> np.ndarray:
    if len(waypoints) == 1:
        return np.array(waypoints)
    chunks = [np.array([waypoints[0]])]
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        chunks.append(_interp_states(np.asarray(a), np.asarray(b))[1:])
    return np.vstack(chunks)


def ee_path_length(model: KinematicModel, densified: np.ndarray) -> float:
    pts = np.array([ee_position(model, s[0], s[1:]) for s in np.atleast_2d(densified)])
    if pts.shape[0] < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
