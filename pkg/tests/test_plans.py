from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unbolt.plans import (
    DegenerateCentroidError,
    DisassemblyPlan,
    PlanError,
    SubTask,
    load_plan,
    load_plan_file,
    mark_removed,
    remaining,
    save_plan,
    synthesize_task_pose,
    tasks_from_memory,
)
from unbolt.memory import Detection, DetectionMemory


class TestTaskPose:
    def test_positive_x_centroid(self):
        # centroid on +x: tool z down, y back toward the axis (-x)
        pose = synthesize_task_pose((0.5, 0.0, 0.3))
        R = pose.orientation.to_matrix()
        assert np.allclose(R[:, 2], [0, 0, -1], atol=1e-12)
        assert np.allclose(R[:, 1], [-1, 0, 0], atol=1e-12)
        assert np.allclose(R[:, 0], [0, -1, 0], atol=1e-12)
        assert np.allclose(pose.position, [0.5, 0.0, 0.3])

    def test_diagonal_centroid(self):
        pose = synthesize_task_pose((0.3, 0.3, 0.3))
        R = pose.orientation.to_matrix()
        s = 1.0 / np.sqrt(2.0)
        assert np.allclose(R[:, 1], [-s, -s, 0], atol=1e-12)
        assert np.allclose(R[:, 2], [0, 0, -1], atol=1e-12)
        # right-handed: x = y cross z
        assert np.allclose(np.cross(R[:, 1], R[:, 2]), R[:, 0], atol=1e-12)

    def test_shifted_workspace_center(self):
        pose = synthesize_task_pose((0.5, 0.2, 0.3), workspace_center=(0.0, 0.2))
        R = pose.orientation.to_matrix()
        assert np.allclose(R[:, 1], [-1, 0, 0], atol=1e-12)

    def test_degenerate_centroid(self):
        with pytest.raises(DegenerateCentroidError):
            synthesize_task_pose((0.0, 0.0, 0.3))

    def test_orthonormality(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            c = rng.uniform((-1, -1, 0.1), (1, 1, 0.6))
            if np.hypot(c[0], c[1]) < 1e-3:
                continue
            R = synthesize_task_pose(c).orientation.to_matrix()
            assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(R) > 0


def minimal_doc():
    pose = synthesize_task_pose((0.5, 0.2, 0.3)).to_json()
    return {
        "battery": "demo",
        "steps": [
            {"s": 1, "description": "first", "subtasks": [
                {"id": "step.1/0", "label": "bolt", "pose": pose,
                 "is_removed": False, "tool": "nutrunner"},
                {"id": "step.1/1", "label": "bolt", "pose": pose,
                 "is_removed": True, "tool": "nutrunner"},
            ]},
            {"s": 2, "description": "second", "subtasks": [
                {"id": "step.2/0", "label": "nut", "pose": pose,
                 "is_removed": False, "tool": "socket"},
            ]},
        ],
    }


class TestSerialization:
    def test_round_trip_stable(self):
        doc = minimal_doc()
        once = save_plan(load_plan(doc))
        twice = save_plan(load_plan(once))
        assert once == twice

    def test_schema_violation(self):
        doc = minimal_doc()
        del doc["steps"][0]["subtasks"][0]["pose"]
        with pytest.raises(PlanError):
            load_plan(doc)

    def test_bad_quaternion_length(self):
        doc = minimal_doc()
        doc["steps"][0]["subtasks"][0]["pose"]["quaternion"] = [1, 0, 0]
        with pytest.raises(PlanError):
            load_plan(doc)

    def test_duplicate_subtask_id(self):
        doc = minimal_doc()
        doc["steps"][1]["subtasks"][0]["id"] = "step.1/0"
        with pytest.raises(PlanError):
            load_plan(doc)

    def test_duplicate_step_ordinal(self):
        doc = minimal_doc()
        doc["steps"][1]["s"] = 1
        with pytest.raises(PlanError):
            load_plan(doc)

    def test_file_round_trip(self, tmp_path):
        from unbolt.plans import save_plan_file

        plan = load_plan(minimal_doc())
        p = tmp_path / "plan.json"
        save_plan_file(plan, p)
        again = load_plan_file(p)
        assert save_plan(again) == save_plan(plan)


class TestFixtures:
    def test_full_sequence_fixture(self, data_dir):
        plan = load_plan_file(data_dir / "ioniq5_plan.json")
        assert len(plan.steps) == 12
        assert [st.s for st in plan.steps] == list(range(1, 13))
        counts = [len(st.subtasks) for st in plan.steps]
        assert counts[0] == 8 and counts[1] == 70 and counts[9] == 80
        ids = [t.id for t in plan.all_subtasks()]
        assert len(ids) == len(set(ids))

    def test_cover_fixture_inventory(self, data_dir):
        plan = load_plan_file(data_dir / "top_cover_68.json")
        assert len(plan.step(2).subtasks) == 68
        left = remaining(plan, 2)
        assert len(left) == 5
        assert all(not t.is_removed for t in left)


class TestInventoryStateMachine:
    def test_unknown_id(self):
        plan = load_plan(minimal_doc())
        with pytest.raises(PlanError):
            mark_removed(plan, "step.9/9", verified=True)

    def test_unknown_step(self):
        plan = load_plan(minimal_doc())
        with pytest.raises(PlanError):
            plan.step(9)

    def test_verified_flips(self):
        plan = load_plan(minimal_doc())
        assert mark_removed(plan, "step.1/0", verified=True)
        assert plan.find("step.1/0").is_removed

    def test_unverified_never_flips(self):
        plan = load_plan(minimal_doc())
        assert not mark_removed(plan, "step.1/0", verified=False)
        assert not plan.find("step.1/0").is_removed
        assert plan.attempt_log == [{"id": "step.1/0", "verified": False}]

    def test_remaining_partition(self):
        plan = load_plan(minimal_doc())
        st = plan.step(1)
        left = remaining(plan, 1)
        done = [t for t in st.subtasks if t.is_removed]
        assert len(left) + len(done) == len(st.subtasks)
        assert {t.id for t in left} == {"step.1/0"}

    @given(st.lists(st.tuples(st.integers(0, 2), st.booleans()), max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_monotone_removal_property(self, attempts):
        # is_removed is monotone: once verified-removed, never un-removed,
        # and equals "some verified attempt happened"
        plan = load_plan(minimal_doc())
        ids = ["step.1/0", "step.1/1", "step.2/0"]
        verified_ever = {i: plan.find(i).is_removed for i in ids}
        for k, ok in attempts:
            mark_removed(plan, ids[k], verified=ok)
            verified_ever[ids[k]] = verified_ever[ids[k]] or ok
            for i in ids:
                assert plan.find(i).is_removed == verified_ever[i]
        assert len(plan.attempt_log) == len(attempts)


class TestTasksFromMemory:
    def test_label_filter_and_skip(self):
        mem = DetectionMemory()
        mem.insert(Detection.from_box("bolt", (0.4, 0.1, 0.3), (0.02,) * 3, 0.8))
        mem.insert(Detection.from_box("clip", (0.2, 0.1, 0.3), (0.02,) * 3, 0.8))
        _, degenerate_id = mem.insert(
            Detection.from_box("bolt", (0.0, 0.0, 0.3), (0.02,) * 3, 0.8))
        tasks, skipped = tasks_from_memory(mem, ["bolt"])
        assert len(tasks) == 1
        assert tasks[0].label == "bolt"
        assert skipped == [degenerate_id]
