"""Task-pose synthesis from detected centroids and the disassembly-plan model.

The plan document is JSON:

    {"battery": str,
     "steps": [{"s": int, "description": str,
                "subtasks": [{"id": str, "label": str,
                              "pose": {"position": [...], "quaternion": [w,x,y,z]},
                              "is_removed": bool, "tool": str}]}]}

Inventory mutation is guarded: a subtask flips to removed only on a
verified success; unverified attempts are recorded but never change state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .memory import DetectionMemory
from .se3 import Pose, pose_from_axes


class PlanError(ValueError):
    """Schema violation, duplicate id or unknown id/step."""


class DegenerateCentroidError(ValueError):
    """Centroid on the workspace vertical axis: approach direction undefined."""


PLAN_SCHEMA = {
    "type": "object",
    "required": ["battery", "steps"],
    "properties": {
        "battery": {"type": "string"},
        "provenance": {"type": "object"},
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["s", "description", "subtasks"],
                "properties": {
                    "s": {"type": "integer"},
                    "description": {"type": "string"},
                    "subtasks": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["id", "label", "pose", "is_removed", "tool"],
                            "properties": {
                                "id": {"type": "string"},
                                "label": {"type": "string"},
                                "pose": {
                                    "type": "object",
                                    "required": ["position", "quaternion"],
                                    "properties": {
                                        "position": {
                                            "type": "array",
                                            "items": {"type": "number"},
                                            "minItems": 3, "maxItems": 3,
                                        },
                                        "quaternion": {
                                            "type": "array",
                                            "items": {"type": "number"},
                                            "minItems": 4, "maxItems": 4,
                                        },
                                    },
                                },
                                "is_removed": {"type": "boolean"},
                                "tool": {"type": "string"},
                            },
                        },
                    },
                },
            },
        },
    },
}


@dataclass
class SubTask:
    id: str
    label: str
    pose: Pose
    is_removed: bool = False
    tool: str = "nutrunner"


@dataclass
class DisassemblyStep:
    s: int
    description: str
    subtasks: list


@dataclass
class DisassemblyPlan:
    battery: str
    steps: list
    provenance: dict = field(default_factory=dict)
    attempt_log: list = field(default_factory=list)   # runtime only, not persisted

    def step(self, s: int) -> DisassemblyStep:
        for st in self.steps:
            if st.s == s:
                return st
        raise PlanError(f"unknown step {s}")

    def find(self, subtask_id: str) -> SubTask:
        for st in self.steps:
            for t in st.subtasks:
                if t.id == subtask_id:
                    return t
        raise PlanError(f"unknown subtask id {subtask_id!r}")

    def all_subtasks(self) -> list:
        return [t for st in self.steps for t in st.subtasks]


def synthesize_task_pose(centroid, workspace_center=(0.0, 0.0)) -> Pose:
    """Tool-down pose at the centroid, y-axis pointing at the workspace axis."""
    c = np.asarray(centroid, dtype=float).reshape(3)
    dx, dy = c[0] - workspace_center[0], c[1] - workspace_center[1]
    n = math.hypot(dx, dy)
    if n < 1e-9:
        raise DegenerateCentroidError(
            f"centroid {c.tolist()} lies on the workspace vertical axis"
        )
    z = np.array([0.0, 0.0, -1.0])
    y = np.array([-dx / n, -dy / n, 0.0])
    x = np.cross(y, z)
    x = x / np.linalg.norm(x)
    return pose_from_axes(x, y, z, c)


def tasks_from_memory(mem: DetectionMemory, labels, tool: str = "nutrunner",
                      workspace_center=(0.0, 0.0)) -> tuple:
    """One SubTask per matching detection; returns (tasks, skipped object ids)."""
    labels = set(labels)
    tasks, skipped = [], []
    for obj in mem.query_all():
        if obj.label not in labels:
            continue
        try:
            pose = synthesize_task_pose(obj.centroid, workspace_center)
        except DegenerateCentroidError:
            skipped.append(obj.object_id)
            continue
        tasks.append(SubTask(id=f"det/{obj.object_id}", label=obj.label, pose=pose,
                             is_removed=False, tool=tool))
    return tasks, skipped


def load_plan(document: dict) -> DisassemblyPlan:
    try:
        jsonschema.validate(document, PLAN_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path)
        raise PlanError(f"plan schema violation at {path or '<root>'}: {e.message}") from e
    seen = set()
    steps = []
    step_ids = set()
    for sd in document["steps"]:
        if sd["s"] in step_ids:
            raise PlanError(f"duplicate step ordinal {sd['s']}")
        step_ids.add(sd["s"])
        subtasks = []
        for td in sd["subtasks"]:
            if td["id"] in seen:
                raise PlanError(f"duplicate subtask id {td['id']!r}")
            seen.add(td["id"])
            subtasks.append(
                SubTask(id=td["id"], label=td["label"], pose=Pose.from_json(td["pose"]),
                        is_removed=td["is_removed"], tool=td["tool"])
            )
        steps.append(DisassemblyStep(s=sd["s"], description=sd["description"], subtasks=subtasks))
    return DisassemblyPlan(battery=document["battery"], steps=steps,
                           provenance=document.get("provenance", {}))


def save_plan(plan: DisassemblyPlan) -> dict:
    return {
        "battery": plan.battery,
        "provenance": plan.provenance,
        "steps": [
            {
                "s": st.s,
                "description": st.description,
                "subtasks": [
                    {
                        "id": t.id,
                        "label": t.label,
                        "pose": t.pose.to_json(),
                        "is_removed": t.is_removed,
                        "tool": t.tool,
                    }
                    for t in st.subtasks
                ],
            }
            for st in plan.steps
        ],
    }


def load_plan_file(path) -> DisassemblyPlan:
    return load_plan(json.loads(Path(path).read_text()))


def save_plan_file(plan: DisassemblyPlan, path) -> None:
    Path(path).write_text(json.dumps(save_plan(plan), indent=2, sort_keys=True) + "\n")


def mark_removed(plan: DisassemblyPlan, subtask_id: str, verified: bool) -> bool:
    """Flip is_removed only on verified success; always log the attempt."""
    task = plan.find(subtask_id)
    plan.attempt_log.append({"id": subtask_id, "verified": bool(verified)})
    if verified:
        task.is_removed = True
        return True
    return False


def remaining(plan: DisassemblyPlan, step: int) -> list:
    return [t for t in plan.step(step).subtasks if not t.is_removed]
