from __future__ import annotations

import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unbolt.kinematics import JointConfig
from unbolt.plans import load_plan_file
from unbolt.service import HOME_ARM
from unbolt.skills import SkillEngine
from unbolt.wire import handle_line, handle_request, serve_stream


@pytest.fixture
def engine(model, world, data_dir):
    return SkillEngine(
        model=model,
        world=world,
        plan=load_plan_file(data_dir / "top_cover_68.json"),
        q_current=JointConfig(0.0, HOME_ARM),
        budget=15.0,
    )


class TestRequests:
    def test_inventory_op(self, engine):
        resp = handle_request(engine, {"id": 1, "op": "query_inventory",
                                       "params": {"step": 2}})
        assert resp == {"id": 1, "status": "ok", "verified": True,
                        "result": {"remaining": ["step.2/6", "step.2/20",
                                                 "step.2/34", "step.2/48",
                                                 "step.2/62"]}}

    def test_removal_op(self, engine):
        resp = handle_request(engine, {"id": "r1", "op": "remove_fastener",
                                       "params": {"subtask_id": "step.2/6"}})
        assert resp["status"] == "ok" and resp["verified"]
        assert resp["result"]["engaged"]
        again = handle_request(engine, {"id": "r2", "op": "remove_fastener",
                                        "params": {"subtask_id": "step.2/6"}})
        assert again["status"] == "error" and not again["verified"]

    def test_motion_op(self, engine):
        resp = handle_request(engine, {"id": 2, "op": "plan_to_pose_relative",
                                       "params": {"dx": 0.1}})
        assert resp["status"] == "ok" and resp["verified"]
        assert abs(resp["result"]["achieved"][0] - 0.1) < 1e-3

    def test_unknown_op(self, engine):
        resp = handle_request(engine, {"id": 3, "op": "self_destruct", "params": {}})
        assert resp["status"] == "error" and resp["id"] == 3

    def test_missing_param(self, engine):
        resp = handle_request(engine, {"id": 4, "op": "remove_fastener", "params": {}})
        assert resp["status"] == "error"

    def test_non_dict_params(self, engine):
        resp = handle_request(engine, {"id": 5, "op": "query_inventory", "params": [2]})
        assert resp["status"] == "error"


class TestLineProtocol:
    def test_malformed_json(self, engine):
        resp = json.loads(handle_line(engine, "{not json"))
        assert resp["status"] == "error" and resp["id"] is None

    def test_non_object_request(self, engine):
        resp = json.loads(handle_line(engine, "[1, 2, 3]"))
        assert resp["status"] == "error"

    def test_id_echoed(self, engine):
        line = json.dumps({"id": "abc-123", "op": "query_inventory",
                           "params": {"step": 2}})
        assert json.loads(handle_line(engine, line))["id"] == "abc-123"

    def test_one_response_per_request(self, engine):
        reqs = [
            {"id": i, "op": "query_inventory", "params": {"step": 2}}
            for i in range(5)
        ] + [{"id": 99, "op": "nope", "params": {}}]
        instream = io.StringIO("\n".join(json.dumps(r) for r in reqs) + "\n\n")
        out = io.StringIO()
        n = serve_stream(engine, instream, out)
        lines = [l for l in out.getvalue().splitlines() if l]
        assert n == len(reqs) == len(lines)
        assert [json.loads(l)["id"] for l in lines] == [0, 1, 2, 3, 4, 99]

    def test_full_session_clears_inventory(self, engine):
        ids = ["step.2/6", "step.2/20", "step.2/34", "step.2/48", "step.2/62"]
        reqs = [json.dumps({"id": i, "op": "remove_fastener",
                            "params": {"subtask_id": sid}})
                for i, sid in enumerate(ids)]
        reqs.append(json.dumps({"id": "inv", "op": "query_inventory",
                                "params": {"step": 2}}))
        out = io.StringIO()
        serve_stream(engine, io.StringIO("\n".join(reqs) + "\n"), out)
        responses = [json.loads(l) for l in out.getvalue().splitlines()]
        assert all(r["verified"] for r in responses[:5])
        assert responses[5]["result"]["remaining"] == []

    @given(st.lists(st.sampled_from(["step.2/6", "step.2/20", "step.2/34",
                                     "step.2/999"]), min_size=1, max_size=12))
    @settings(max_examples=30, deadline=None)
    def test_inventory_consistency_property(self, model, world, data_dir, ids):
        # the number of verified-ok removals always equals the drop in the
        # remaining count, whatever mix of valid/duplicate/unknown ids arrives
        engine = SkillEngine(
            model=model,
            world=world,
            plan=load_plan_file(data_dir / "top_cover_68.json"),
            q_current=JointConfig(0.0, HOME_ARM),
        )
        before = len(engine.query_inventory(2))
        ok = 0
        for sid in ids:
            resp = handle_request(engine, {"id": 0, "op": "remove_fastener",
                                           "params": {"subtask_id": sid}})
            ok += resp["status"] == "ok" and resp["verified"]
        assert before - len(engine.query_inventory(2)) == ok
