"""HTTP skill service wrapping the core engine.

One engine instance per process (the robot is a singleton resource); request
handling is sequential.  Endpoints mirror the wire-protocol op set.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .corridor import CollisionWorld
from .kinematics import KinematicModel, JointConfig
from .plans import load_plan_file, save_plan
from .skills import SkillEngine, SkillError

# collision-free tool-down rest posture hovering over the pack
HOME_ARM = [-0.0512, 2.2189, 2.4587, -3.1069, -1.5708, -0.3293]


class MoveRequest(BaseModel):
    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    use_corridor: bool = True


class MoveResponse(BaseModel):
    achieved: list[float]
    requested: list[float]
    verified: bool
    ee_path_length: float
    waypoints: int
    plan_time: float


class RemoveRequest(BaseModel):
    subtask_id: str


class RemoveResponse(BaseModel):
    subtask_id: str
    engaged: bool
    verified: bool
    lateral_offset: float


class InventoryResponse(BaseModel):
    step: int
    remaining: list[str]


class StatusResponse(BaseModel):
    battery: str
    ee_position: list[float]
    subtasks_total: int
    subtasks_removed: int


class SeedRequest(BaseModel):
    seed: int = Field(ge=0)


def default_engine(plan_path) -> SkillEngine:
    model = KinematicModel.default()
    return SkillEngine(
        model=model,
        world=CollisionWorld.battery_cell(),
        plan=load_plan_file(plan_path),
        q_current=JointConfig(0.0, HOME_ARM),
    )


def create_app(engine: SkillEngine) -> FastAPI:
    app = FastAPI(title="unbolt skill service", version="1.0")

    @app.post("/plan_to_pose_relative", response_model=MoveResponse)
    def plan_to_pose_relative(req: MoveRequest):
        try:
            r = engine.plan_to_pose_relative(req.dx, req.dy, req.dz,
                                             use_corridor=req.use_corridor)
        except SkillError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return MoveResponse(
            achieved=[float(v) for v in r.achieved],
            requested=[float(v) for v in r.requested],
            verified=r.verified,
            ee_path_length=r.ee_path_length,
            waypoints=r.waypoints,
            plan_time=r.plan_time,
        )

    @app.post("/remove_fastener", response_model=RemoveResponse)
    def remove_fastener(req: RemoveRequest):
        try:
            r = engine.remove_fastener(req.subtask_id)
        except SkillError as e:
            raise HTTPException(status_code=422, detail=str(e))
        return RemoveResponse(subtask_id=r.subtask_id, engaged=r.engaged,
                              verified=r.verified, lateral_offset=r.lateral_offset)

    @app.get("/inventory/{step}", response_model=InventoryResponse)
    def inventory(step: int):
        try:
            rem = engine.query_inventory(step)
        except SkillError as e:
            raise HTTPException(status_code=404, detail=str(e))
        return InventoryResponse(step=step, remaining=[t.id for t in rem])

    @app.get("/status", response_model=StatusResponse)
    def status():
        tasks = engine.plan.all_subtasks()
        return StatusResponse(
            battery=engine.plan.battery,
            ee_position=[float(v) for v in engine.ee_pose().position],
            subtasks_total=len(tasks),
            subtasks_removed=sum(t.is_removed for t in tasks),
        )

    @app.get("/plan")
    def plan_document():
        return save_plan(engine.plan)

    @app.post("/seed")
    def seed(req: SeedRequest):
        engine.reseed(req.seed)
        return {"seed": req.seed}

    return app
