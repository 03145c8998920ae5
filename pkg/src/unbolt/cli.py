"""Command-line front end: benchmarks, demos, inventory and the skill server."""

from __future__ import annotations

import csv
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .benchmarks import home_config, ik_bench, plan_bench, summarize_plan_bench
from .config import Config
from .corridor import CollisionWorld
from .ibvs import CameraIntrinsics, ServoConfig, SimulatedCamera, servo_loop
from .kinematics import JointConfig, KinematicModel
from .memory import Detection, DetectionMemory, DetectorRates, simulate_detections
from .kinematics import forward_kinematics
from .plans import (
    PlanError,
    load_plan_file,
    mark_removed,
    remaining,
    save_plan,
    save_plan_file,
)
from .removal import EngagementModel, StrategyNoise, default_strategies, run_campaign
from .se3 import Transform
from .sequencing import order_tasks
from .service import create_app, default_engine
from .skills import SkillEngine
from .wire import serve_socket, serve_stream

DATA_DIR = Path(__file__).parent / "data"

EXIT_USAGE = 2
EXIT_RUNTIME = 3


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="INI file overriding packaged defaults.")
@click.pass_context
def main(ctx, config_path):
    """Planning-and-control toolkit for robotic battery disassembly."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = Config(config_path)
    ctx.obj["model"] = KinematicModel.default()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(header)
        wr.writerows(rows)


@main.command("ik-bench")
@click.option("--n", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default="ik_bench.csv", show_default=True)
@click.option("--baseline/--no-baseline", default=True, show_default=True)
@click.pass_context
def ik_bench_cmd(ctx, n, seed, out, baseline):
    """Analytic IK pipeline vs single-seed numeric baseline on random poses."""
    cfg: Config = ctx.obj["config"]
    rows = ik_bench(ctx.obj["model"], n=n, seed=seed, sel_cfg=cfg.selection(),
                    weights=cfg.cost_weights(), run_baseline=baseline)
    _write_csv(out,
               ["index", "analytic_success", "candidates", "solve_time",
                "position_error", "rotation_error", "total_cost",
                "d_j", "p_p", "p_a", "mu", "baseline_success"],
               [[r.index, int(r.analytic_success), r.candidates, f"{r.solve_time:.6f}",
                 r.position_error, r.rotation_error, r.total_cost,
                 r.d_j, r.p_p, r.p_a, r.mu, int(r.baseline_success)] for r in rows])
    ok = sum(r.analytic_success for r in rows)
    base = sum(r.baseline_success for r in rows)
    click.echo(f"analytic: {ok}/{n} ({100*ok/n:.1f}%)  "
               f"baseline: {base}/{n} ({100*base/n:.1f}%)  -> {out}")


@main.command("plan-bench")
@click.option("--trials", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--budget", default=8.0, show_default=True, help="seconds per attempt")
@click.option("--mode", type=click.Choice(["both", "corridor", "unconstrained"]),
              default="both", show_default=True)
@click.option("--out", type=click.Path(), default="plan_bench.csv", show_default=True)
@click.pass_context
def plan_bench_cmd(ctx, trials, seed, budget, mode, out):
    """Corridor vs unconstrained motion-planning benchmark."""
    modes = ("unconstrained", "corridor") if mode == "both" else (mode,)
    rows = plan_bench(ctx.obj["model"], CollisionWorld.battery_cell(),
                      trials=trials, seed=seed, budget=budget, modes=modes)
    _write_csv(out,
               ["trial", "mode", "success", "plan_time", "ee_length",
                "waypoints", "straight_line", "corridor_sound"],
               [[r.trial, r.mode, int(r.success), f"{r.plan_time:.4f}",
                 f"{r.ee_length:.4f}", r.waypoints, f"{r.straight_line:.4f}",
                 int(r.corridor_sound)] for r in rows])
    summary = summarize_plan_bench(rows)
    for m, s in summary.items():
        if s["trials"]:
            click.echo(f"{m}: {s['successes']}/{s['trials']} "
                       f"mean EE {s['mean_ee_length']:.3f} m "
                       f"mean time {s['mean_plan_time']:.2f} s")
    click.echo(f"-> {out}")


@main.command("sequence")
@click.argument("plan_json", type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["exact", "heuristic", "auto"]),
              default="auto", show_default=True)
@click.option("--out", type=click.Path(), default="sequenced_plan.json", show_default=True)
@click.pass_context
def sequence_cmd(ctx, plan_json, mode, out):
    """Order each step's subtasks as a minimum-cost circuit from home."""
    try:
        plan = load_plan_file(plan_json)
    except PlanError as e:
        raise click.ClickException(str(e))
    model = ctx.obj["model"]
    home = home_config(model)
    home_p = forward_kinematics(model, home).end_effector.translation
    costs = {}
    for step in plan.steps:
        if len(step.subtasks) < 2:
            continue
        positions = [t.pose.position for t in step.subtasks]
        ordered, tour = order_tasks(step.subtasks, home_p, positions, mode=mode)
        step.subtasks = ordered
        costs[step.s] = tour.total_cost
    doc = {"plan": save_plan(plan), "tour_costs": costs}
    Path(out).write_text(json.dumps(doc, indent=1))
    for s, c in costs.items():
        click.echo(f"step {s}: tour cost {c:.3f} m")
    click.echo(f"-> {out}")


@main.command("memory-demo")
@click.option("--seed", default=0, show_default=True)
@click.option("--scans", default=3, show_default=True)
@click.option("--out", type=click.Path(), default="memory.json", show_default=True)
@click.pass_context
def memory_demo_cmd(ctx, seed, scans, out):
    """Feed noisy simulated detections through the spatial memory."""
    cfg: Config = ctx.obj["config"]
    plan = load_plan_file(DATA_DIR / "top_cover_68.json")
    truth = [(t.label, t.pose.position, 0.02) for t in plan.all_subtasks()]
    mem = DetectionMemory(cfg.memory())
    rates = cfg.detector()
    for k in range(scans):
        for det in simulate_detections(truth, rates, rng_seed=seed + k):
            mem.insert(det)
    Path(out).write_text(json.dumps(mem.to_json(), indent=1))
    click.echo(f"{len(truth)} ground-truth objects, {scans} scans -> "
               f"{len(mem)} stored objects ({out})")


@main.command("servo-demo")
@click.option("--gain", default=1.0, show_default=True)
@click.option("--dt", default=0.05, show_default=True)
@click.option("--depth-sigma", default=0.0, show_default=True)
@click.option("--depth-scale", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default="servo.csv", show_default=True)
def servo_demo_cmd(gain, dt, depth_sigma, depth_scale, seed, out):
    """Run the visual-servo loop on a simulated camera; log per-iteration state."""
    intr = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0,
                            width=640, height=480)
    cam = SimulatedCamera(
        intrinsics=intr,
        camera_pose=Transform(np.eye(3), [0.0, 0.0, 0.0]),
        ee_in_camera=[0.0, 0.0, 0.4],
        target_world=[0.02, -0.015, 0.4],
    )
    cfg = ServoConfig(gain=gain, dt=dt, depth_sigma=depth_sigma,
                      depth_scale=depth_scale)
    result = servo_loop(cam, cfg, rng_seed=seed)
    _write_csv(out,
               ["iter", "e_x", "e_y", "e_norm", "z", "v_x", "v_y", "v_z"],
               [[s.iteration, f"{s.e[0]:.6e}", f"{s.e[1]:.6e}",
                 f"{float(np.linalg.norm(s.e)):.6e}", f"{s.z:.4f}",
                 f"{s.v_c[0]:.5f}", f"{s.v_c[1]:.5f}", f"{s.v_c[2]:.5f}"]
                for s in result.trajectory])
    click.echo(f"{result.reason} after {len(result.trajectory)} iterations -> {out}")
    if not result.converged:
        sys.exit(EXIT_RUNTIME)


@main.command("simulate-removal")
@click.option("--strategy", type=click.Choice(["taught-in", "one-shot-vision", "visual-servo"]),
              default="taught-in", show_default=True)
@click.option("--extension", type=click.Choice(["long", "short"]), default="long",
              show_default=True)
@click.option("--n", default=204, show_default=True, help="fasteners per campaign")
@click.option("--seeds", default=100, show_default=True)
@click.option("--sigma", default=None, type=float, help="override lateral sigma (m)")
@click.option("--out", type=click.Path(), default="removal.json", show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="per-attempt CSV for the first seed")
@click.pass_context
def simulate_removal_cmd(ctx, strategy, extension, n, seeds, sigma, out, log_path):
    """Monte-Carlo fastener-removal campaigns for one strategy."""
    cfg: Config = ctx.obj["config"]
    eng = cfg.engagement(extension)
    noise = default_strategies(eng)[strategy]
    if sigma is not None:
        from dataclasses import replace
        noise = replace(noise, lateral_sigma=sigma)
    rates, durations = [], []
    for seed in range(seeds):
        log = [] if (log_path and seed == 0) else None
        r = run_campaign(n, noise, eng, rng_seed=seed, attempt_log=log)
        rates.append(r.success_rate)
        durations.append(r.duration_minutes)
        if log is not None:
            _write_csv(log_path, ["index", "kind", "lateral_offset", "success"],
                       [[i, kind, "" if math.isinf(off) else f"{off:.6f}", int(hit)]
                        for i, kind, off, hit in log])
    summary = {
        "strategy": strategy, "extension": extension, "n": n, "seeds": seeds,
        "sigma": noise.lateral_sigma,
        "mean_success_rate": float(np.mean(rates)),
        "std_success_rate": float(np.std(rates)),
        "mean_duration_minutes": float(np.mean(durations)),
    }
    Path(out).write_text(json.dumps(summary, indent=1))
    click.echo(f"{strategy}/{extension}: {100*summary['mean_success_rate']:.2f}% "
               f"over {seeds} seeds, {summary['mean_duration_minutes']:.1f} min "
               f"-> {out}")


@main.command("inventory")
@click.argument("plan_json", type=click.Path(exists=True))
@click.option("--step", default=None, type=int, help="restrict to one step")
@click.option("--mark-removed", "mark_id", default=None, help="subtask id to mark")
@click.option("--verified/--unverified", default=False,
              help="whether the removal was physically verified")
def inventory_cmd(plan_json, step, mark_id, verified):
    """List remaining subtasks; optionally record a removal attempt."""
    try:
        plan = load_plan_file(plan_json)
    except PlanError as e:
        raise click.ClickException(str(e))
    if mark_id is not None:
        try:
            changed = mark_removed(plan, mark_id, verified=verified)
        except PlanError as e:
            raise click.ClickException(str(e))
        if changed:
            save_plan_file(plan, plan_json)
        click.echo(f"{mark_id}: {'removed' if changed else 'attempt logged, state unchanged'}")
    steps = [plan.step(step)] if step is not None else plan.steps
    for st in steps:
        left = remaining(plan, st.s)
        click.echo(f"step {st.s} ({st.description}): {len(left)} remaining")
        for t in left:
            click.echo(f"  {t.id} [{t.label}]")


@main.command("serve")
@click.option("--plan", "plan_path", type=click.Path(exists=True),
              default=str(DATA_DIR / "top_cover_68.json"), show_default=True)
@click.option("--port", default=8000, show_default=True, help="HTTP port")
@click.option("--transport", type=click.Choice(["http", "stdio", "socket"]),
              default="http", show_default=True)
@click.option("--socket-port", default=7471, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_cmd(plan_path, port, transport, socket_port, seed):
    """Expose the skill set over HTTP, stdio NDJSON, or a local NDJSON socket."""
    engine: SkillEngine = default_engine(plan_path)
    engine.reseed(seed)
    if transport == "stdio":
        serve_stream(engine, sys.stdin, sys.stdout)
        return
    if transport == "socket":
        click.echo(f"NDJSON skill server on 127.0.0.1:{socket_port}", err=True)
        serve_socket(engine, port=socket_port)
        return
    import uvicorn
    uvicorn.run(create_app(engine), host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
