"""Line-delimited JSON skill protocol over streams or a local socket.

Request:  {"id": <any>, "op": <name>, "params": {...}}
Response: {"id": <echoed>, "status": "ok"|"error", "result": ..., "verified": bool}

Every input line produces exactly one response line; malformed lines get an
error response rather than silence.
"""

from __future__ import annotations

import json
import socketserver

from .skills import MotionResult, RemovalResult, SkillEngine, SkillError

OPS = ("plan_to_pose_relative", "remove_fastener", "query_inventory")


def _motion_payload(r: MotionResult) -> dict:
    return {
        "achieved": [round(float(v), 6) for v in r.achieved],
        "requested": [float(v) for v in r.requested],
        "ee_path_length": round(r.ee_path_length, 6),
        "waypoints": r.waypoints,
        "plan_time": round(r.plan_time, 4),
    }


def _removal_payload(r: RemovalResult) -> dict:
    return {
        "subtask_id": r.subtask_id,
        "engaged": r.engaged,
        "lateral_offset": round(r.lateral_offset, 6),
    }


def _error(req_id, message: str) -> dict:
    return {"id": req_id, "status": "error", "result": {"message": message},
            "verified": False}


def handle_request(engine: SkillEngine, doc: dict) -> dict:
    req_id = doc.get("id")
    op = doc.get("op")
    params = doc.get("params", {})
    if op not in OPS:
        return _error(req_id, f"unknown op {op!r}; expected one of {list(OPS)}")
    if not isinstance(params, dict):
        return _error(req_id, "params must be an object")
    try:
        if op == "plan_to_pose_relative":
            r = engine.plan_to_pose_relative(
                float(params.get("dx", 0.0)), float(params.get("dy", 0.0)),
                float(params.get("dz", 0.0)),
                use_corridor=bool(params.get("use_corridor", True)))
            return {"id": req_id, "status": "ok", "result": _motion_payload(r),
                    "verified": r.verified}
        if op == "remove_fastener":
            r = engine.remove_fastener(str(params["subtask_id"]))
            return {"id": req_id, "status": "ok", "result": _removal_payload(r),
                    "verified": r.verified}
        rem = engine.query_inventory(int(params["step"]))
        return {"id": req_id, "status": "ok",
                "result": {"remaining": [t.id for t in rem]}, "verified": True}
    except (SkillError, KeyError, TypeError, ValueError) as e:
        return _error(req_id, f"{type(e).__name__}: {e}")


def handle_line(engine: SkillEngine, line: str) -> str:
    try:
        doc = json.loads(line)
        if not isinstance(doc, dict):
            raise ValueError("request must be a JSON object")
    except ValueError as e:
        return json.dumps(_error(None, f"malformed request: {e}"))
    return json.dumps(handle_request(engine, doc))


def serve_stream(engine: SkillEngine, instream, outstream) -> int:
    """Process requests from instream until EOF; returns request count."""
    n = 0
    for line in instream:
        line = line.strip()
        if not line:
            continue
        outstream.write(handle_line(engine, line) + "\n")
        outstream.flush()
        n += 1
    return n


def serve_socket(engine: SkillEngine, host: str = "127.0.0.1", port: int = 7471):
    """Blocking single-session NDJSON server (robot is a singleton resource)."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                self.wfile.write((handle_line(engine, line) + "\n").encode())

    with socketserver.TCPServer((host, port), Handler) as server:
        server.serve_forever()
