"""Episode orchestration: the two-phase step loop, logging, and batches."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import fsm as fsm_mod
from .allocation import AllocationRound, Allocator
from .config import ScenarioConfig
from .controllers import evader_action, pid_action
from .errors import (ConfigError, EpisodeFinished, NoFrontiers,
                     SweepComplete)
from .physics import KinematicAction, StepOutcome, check_capture, step_world
from .planning import GeodesicCache, GuidanceResult, PlanCache, compute_guidance
from .rewards import (RewardBreakdown, alignment_reward, build_observation,
                      exploration_reward, mission_reward, observation_dim,
                      potential_reward, safety_penalty)
from .rng import stream_rng
from .sensing import (FREE, UNKNOWN, BeliefMap, LkpRecord, TargetDetection,
                      cast_rays, detect_target, reachable_unknown_mask,
                      update_belief, update_lkp)
from .world import (WorldState, build_training_map, default_obstacle_count,
                    generate_random_map, spawn_agents, truth_blocked_raster)

LOG_SCHEMA = "pursuitsim-log/1"
COVERAGE_TARGET = 0.8


@dataclass
class StepResult:
    obs: np.ndarray            # (n_pursuers, obs_dim), the next observations
    rewards: np.ndarray        # (n_pursuers,)
    done: bool
    info: dict


@dataclass
class EpisodeResult:
    seed: int
    success: bool
    steps: int
    capture_step: int | None
    clean_capture: bool
    collisions: int            # pursuer agent-steps with any contact flag
    coverage_final: float
    steps_to_80_coverage: int | None
    reward_total: float        # summed over pursuers and steps
    # wall-clock per step; kept out of logs so trajectories stay bit-stable
    step_times_s: list[float] = field(default_factory=list, repr=False)

    def deterministic_dict(self) -> dict:
        return {
            "seed": self.seed,
            "success": self.success,
            "steps": self.steps,
            "capture_step": self.capture_step,
            "clean_capture": self.clean_capture,
            "collisions": self.collisions,
            "coverage_final": self.coverage_final,
            "steps_to_80_coverage": self.steps_to_80_coverage,
            "reward_total": self.reward_total,
        }


class EpisodeSession:
    """One episode with a two-phase loop.

    Phase A (sense, merge belief, LKP, mode transitions, allocation,
    planning, observations) runs at construction and after every physics
    step, so observations for step t are ready before actions are chosen.
    step() applies actions (or the built-in PID when None), advances physics,
    scores rewards, and prepares phase A for t+1.
    """

    def __init__(self, config: ScenarioConfig, seed: int | None = None,
                 coverage_only: bool = False):
        self.config = config
        self.seed = config.rng_seed if seed is None else seed
        self.coverage_only = coverage_only
        self.world = spawn_agents(config, self.seed)
        self.belief = BeliefMap(config)
        self.truth_free = truth_blocked_raster(config) == 0
        self.truth_free_count = int(self.truth_free.sum())
        self.lkp = LkpRecord()
        n = config.n_pursuers
        self.modes = [fsm_mod.AgentMode() for _ in range(n)]
        self.plan_caches = [
            PlanCache(refresh_interval_steps=config.planner.refresh_interval_steps)
            for _ in range(n)]
        self.geodesic = GeodesicCache()
        self.allocator = Allocator(config, stream_rng(self.seed, "policy"))
        self.pot_cost = [None] * n     # carried-forward shaping costs
        self.pot_goal = [None] * n
        self.any_collision = False
        self.collision_events = 0
        self.reward_total = 0.0
        self.coverage_curve: list[float] = []
        self.step_times_s: list[float] = []
        self.records: list[dict] = [self._header_record()]
        self.step_index = 0
        self.done = False
        self._result: EpisodeResult | None = None
        self._alloc_record: AllocationRound | None = None

        if not coverage_only and check_capture(self.world.pursuers,
                                               self.world.evader,
                                               config.d_cap_m):
            # capture before the first action: legal spawns exclude this, but
            # directly constructed states can trigger it
            self._obs = np.zeros((n, observation_dim(n)))
            self.records.append(self._world_record())
            self._finish(success=True, capture_step=0, clean=True)
            return
        self._prepare()

    # Phase A ---------------------------------------------------------------

    def _prepare(self) -> None:
        cfg = self.config
        world = self.world
        n = cfg.n_pursuers
        self._scans = []
        self._detections: list[TargetDetection] = []
        self._new_cells = [0] * n
        for i, agent in enumerate(world.pursuers):
            scan = cast_rays(agent, world, cfg)
            nk, _ = update_belief(self.belief, agent, scan, cfg)
            self._new_cells[i] = nk
            if self.coverage_only:
                det = TargetDetection(False)
            else:
                det = detect_target(agent, world, cfg)
            self._scans.append(scan)
            self._detections.append(det)
        self.coverage_curve.append(self._coverage())

        self.lkp = update_lkp(self.lkp, self._detections, world.pursuers, cfg)
        self._unknown_mask = reachable_unknown_mask(self.belief)
        res = self.belief.resolution_m

        requesters: list[int] = []
        self._events: list[list[str]] = []
        for i in range(n):
            mode, events = fsm_mod.fsm_step(
                self.modes[i], world.pursuers[i].position,
                self._detections[i].visible, self.lkp, self._unknown_mask,
                res, cfg.fsm)
            self.modes[i] = mode
            if "unlock" in events:
                self.allocator.unlock(i)
            if "request" in events:
                requesters.append(i)
            self._events.append(events)

        self._alloc_record = None
        if requesters:
            try:
                assignment, self._alloc_record = self.allocator.request_batch(
                    requesters, world.pursuers, self.belief, self.step_index,
                    self._unknown_mask)
            except NoFrontiers:
                assignment = {}
            for aid in requesters:
                goal = assignment.get(aid)
                if goal is None:
                    goal = self._patrol_goal()
                    self.allocator.lock(aid, goal)
                self.modes[aid] = fsm_mod.assign_goal(self.modes[aid], goal)

        self._goals: list[tuple[float, float] | None] = []
        self._guidance: list[GuidanceResult] = []
        for i in range(n):
            mode = self.modes[i]
            agent = world.pursuers[i]
            if mode.top == fsm_mod.PURSUIT:
                goal = fsm_mod.pursuit_goal(
                    self._detections[i].visible, world.evader.position, self.lkp)
            elif mode.sub == fsm_mod.SWEEP:
                try:
                    goal = fsm_mod.sweep_goal(mode, agent.position,
                                              self._unknown_mask, res, cfg.fsm)
                except SweepComplete:
                    goal = mode.sweep.anchor
            else:  # approach (awaiting cannot persist past allocation)
                goal = mode.goal
            self._goals.append(goal)
            if goal is None:
                self._guidance.append(GuidanceResult(False))
                continue
            cache = self.plan_caches[i]
            cache.ensure(self.step_index, agent.position, goal, self.belief)
            self._guidance.append(compute_guidance(
                cache, agent.position, agent.theta_rad, cfg.planner.lookahead_m))

        self._obs = np.stack([
            build_observation(world.pursuers[i], self._scans[i],
                              self._guidance[i], self.lkp, self.belief, cfg, i)
            for i in range(n)])

    def observations(self) -> np.ndarray:
        return self._obs

    # Step ------------------------------------------------------------------

    def step(self, actions=None) -> StepResult:
        """Advance one step; actions is (n, 2) [dtheta, dv] or None for PID."""
        if self.done:
            raise EpisodeFinished(f"episode ended at step {self.step_index}")
        t0 = time.perf_counter()
        cfg = self.config
        n = cfg.n_pursuers
        world = self.world
        if actions is None:
            acts = [pid_action(world.pursuers[i], self._guidance[i],
                               self._goals[i], cfg) for i in range(n)]
        else:
            acts = [KinematicAction(float(a[0]), float(a[1])) for a in actions]
        if self.coverage_only:
            ev_act = KinematicAction(0.0, 0.0)
        else:
            ev_act = evader_action(world, cfg)

        world2, outcome = step_world(world, acts, ev_act, cfg,
                                     prior_collision=self.any_collision)

        stage = cfg.stage
        breakdowns: list[RewardBreakdown] = []
        agent_records = []
        for i in range(n):
            goal = self._goals[i]
            mode = self.modes[i]
            if goal is None:
                cost_next = None
            else:
                c = self.geodesic.cost(self.belief, world2.pursuers[i].position,
                                       goal)
                cost_next = None if math.isinf(c) else c
            same_goal = goal is not None and self.pot_goal[i] == goal
            cost_prev = self.pot_cost[i] if same_goal else None
            r_pot = potential_reward(cost_prev, cost_next, stage)
            suspended = cost_prev is None or cost_next is None
            if not suspended and mode.sub == fsm_mod.APPROACH:
                progress = max(0.0, cost_prev - cost_next)
            else:
                progress = 0.0
            self.pot_cost[i] = cost_next
            self.pot_goal[i] = goal

            r_align = alignment_reward(outcome.displacement_m[i], cfg.dt_s,
                                       world.pursuers[i].theta_rad,
                                       self._guidance[i].v_guide, stage)
            r_guide = r_pot + r_align
            collided = outcome.collided(i)
            r_safety = safety_penalty(collided, world2.pursuers[i].v_mps, stage)
            r_mission = mission_reward(outcome.captured, outcome.clean_capture,
                                       stage)
            r_explore = exploration_reward(
                self._new_cells[i], progress,
                mode.top == fsm_mod.EXPLORATION,
                mode.sub == fsm_mod.APPROACH, stage)
            bd = RewardBreakdown.make(r_mission, r_safety, r_guide, r_explore)
            breakdowns.append(bd)
            if collided:
                self.collision_events += 1
            agent_records.append({
                "type": "agent",
                "step": self.step_index,
                "id": i,
                "mode": mode.top,
                "sub": mode.sub,
                "events": self._events[i],
                "goal": list(goal) if goal is not None else None,
                "action": [acts[i].dtheta_rad, acts[i].dv_mps],
                "reward": {"mission": bd.r_mission, "safety": bd.r_safety,
                           "guide": bd.r_guide, "explore": bd.r_explore,
                           "total": bd.total},
                "pot": {"prev": cost_prev, "next": cost_next, "r_pot": r_pot,
                        "suspended": suspended},
                "r_align": r_align,
                "collision": {"wall": outcome.wall_hit[i],
                              "obstacle": outcome.obstacle_hit[i],
                              "teammate": outcome.teammate_hit[i]},
                "new_cells": self._new_cells[i],
                "progress": progress,
            })

        self.records.append(self._world_record())
        if self._alloc_record is not None:
            self.records.append(self._alloc_record.to_json())
        self.records.extend(agent_records)

        self.any_collision = self.any_collision or any(
            outcome.collided(i) for i in range(n))
        self.reward_total += sum(b.total for b in breakdowns)
        self.world = world2
        self.step_index += 1

        if outcome.captured and not self.coverage_only:
            self._finish(success=True, capture_step=self.step_index,
                         clean=outcome.clean_capture)
        elif self.step_index >= cfg.t_max_steps:
            self._finish(success=False, capture_step=None, clean=False)
        else:
            self._prepare()

        rewards = np.array([b.total for b in breakdowns])
        info = {
            "breakdowns": breakdowns,
            "modes": [(m.top, m.sub) for m in self.modes],
            "captured": outcome.captured,
            "clean_capture": outcome.clean_capture,
            "step": self.step_index,
            "coverage": self.coverage_curve[-1],
        }
        self.step_times_s.append(time.perf_counter() - t0)
        return StepResult(self._obs, rewards, self.done, info)

    # Helpers ---------------------------------------------------------------

    def _coverage(self) -> float:
        """Fraction of ground-truth-free cells no longer Unknown."""
        if self.truth_free_count == 0:
            return 0.0
        known = self.belief.cells != UNKNOWN
        return float(np.count_nonzero(known & self.truth_free)
                     / self.truth_free_count)

    def _patrol_goal(self) -> tuple[float, float]:
        """Known-free cell maximizing min distance to pursuers and taken goals.

        Deterministic fallback when the frontier set is empty or starved. A
        target that keeps its distance sits where no pursuer is, so patrol
        sends each free agent to the pocket the team currently covers worst;
        counting already-locked goals as covered spreads simultaneous
        patrollers instead of stacking them on one corner.
        """
        free = self.belief.cells == FREE
        if not free.any():
            return (self.config.map_width_m / 2.0,
                    self.config.map_height_m / 2.0)
        anchors = [p.position for p in self.world.pursuers]
        anchors.extend(g for _, g in sorted(self.allocator.locked.items()))
        res = self.belief.resolution_m
        ys, xs = np.nonzero(free)
        px = (xs + 0.5) * res
        py = (ys + 0.5) * res
        d2 = np.full(px.shape, np.inf)
        for ax, ay in anchors:
            np.minimum(d2, (px - ax) ** 2 + (py - ay) ** 2, out=d2)
        j = int(np.argmax(d2))  # first max in row-major order
        return (float(px[j]), float(py[j]))

    def _header_record(self) -> dict:
        return {
            "type": "header",
            "schema": LOG_SCHEMA,
            "seed": self.seed,
            "coverage_only": self.coverage_only,
            "config": self.config.to_dict(),
        }

    def _world_record(self) -> dict:
        return {
            "type": "world",
            "step": self.step_index,
            "agents": [[a.x_m, a.y_m, a.theta_rad, a.v_mps]
                       for a in self.world.agents],
            "captured": self.world.captured,
            "coverage": self.coverage_curve[-1] if self.coverage_curve else 0.0,
            "lkp": [self.lkp.x_m, self.lkp.y_m, self.lkp.age_steps,
                    self.lkp.valid],
        }

    def _steps_to_coverage(self, target: float) -> int | None:
        for t, v in enumerate(self.coverage_curve):
            if v >= target:
                return t
        return None

    def _finish(self, success: bool, capture_step: int | None,
                clean: bool) -> None:
        self.done = True
        cov = self.coverage_curve[-1] if self.coverage_curve else 0.0
        self._result = EpisodeResult(
            seed=self.seed,
            success=success,
            steps=self.step_index,
            capture_step=capture_step,
            clean_capture=clean,
            collisions=self.collision_events,
            coverage_final=cov,
            steps_to_80_coverage=self._steps_to_coverage(COVERAGE_TARGET),
            reward_total=self.reward_total,
            step_times_s=self.step_times_s,
        )
        final = {
            "type": "result",
            "success": success,
            "steps": self.step_index,
            "capture_step": capture_step,
            "clean_capture": clean,
            "collisions": self.collision_events,
            "coverage_final": cov,
            "steps_to_80_coverage": self._result.steps_to_80_coverage,
            "reward_total": self.reward_total,
            "final_agents": [[a.x_m, a.y_m, a.theta_rad, a.v_mps]
                             for a in self.world.agents],
        }
        self.records.append(final)

    def result(self) -> EpisodeResult:
        if self._result is None:
            raise EpisodeFinished("episode still running")
        return self._result

    def write_log(self, path: str) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True))
                fh.write("\n")


# Policies --------------------------------------------------------------------

def _load_scripted_actions(path: str) -> list[list[list[float]]]:
    with open(path) as fh:
        data = json.load(fh)
    steps = data.get("steps") if isinstance(data, dict) else data
    if not isinstance(steps, list):
        raise ConfigError(f"{path}: expected a list of per-step action sets")
    return steps


def run_episode(config: ScenarioConfig, seed: int | None = None,
                policy: str = "pid", log_path: str | None = None,
                coverage_only: bool = False) -> EpisodeResult:
    """Run one full episode. policy: 'pid' or a scripted-actions JSON path."""
    scripted = None
    if policy != "pid":
        if os.path.exists(policy):
            scripted = _load_scripted_actions(policy)
        else:
            raise ConfigError(f"unknown policy {policy!r} (not 'pid' or a file)")
    session = EpisodeSession(config, seed=seed, coverage_only=coverage_only)
    t = 0
    while not session.done:
        if scripted is None:
            session.step(None)
        else:
            if t >= len(scripted):
                session.step([[0.0, 0.0]] * config.n_pursuers)
            else:
                session.step(scripted[t])
        t += 1
    if log_path:
        session.write_log(log_path)
    return session.result()


# Batch -----------------------------------------------------------------------

MAP_PRESETS = {
    "train10": (10.0, None),
    "rand15": (15.0, 8),
    "rand20": (20.0, 14),
}


def build_scenario(map_name: str, seed: int, stage_id: int = 5,
                   alloc_mode: str = "directional") -> ScenarioConfig:
    """Construct the scenario for a named map preset and seed."""
    if map_name not in MAP_PRESETS:
        raise ConfigError(f"unknown map {map_name!r}; "
                          f"options: {sorted(MAP_PRESETS)}")
    size, n_obs = MAP_PRESETS[map_name]
    if map_name == "train10":
        cfg = build_training_map(rng_seed=seed, stage_id=stage_id)
    else:
        cfg = generate_random_map(size, size, n_obs, seed, stage_id=stage_id)
    if alloc_mode != cfg.allocator.mode:
        cfg = dataclasses.replace(
            cfg, allocator=dataclasses.replace(cfg.allocator, mode=alloc_mode))
    return cfg


def _episode_task(args) -> tuple[int, dict, list[float]]:
    (map_name, seed, stage_id, alloc_mode, policy, coverage_only,
     log_dir) = args
    cfg = build_scenario(map_name, seed, stage_id, alloc_mode)
    log_path = None
    if log_dir:
        log_path = os.path.join(log_dir, f"ep{seed:05d}.jsonl")
    res = run_episode(cfg, seed=seed, policy=policy, log_path=log_path,
                      coverage_only=coverage_only)
    return seed, res.deterministic_dict(), res.step_times_s


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """95% score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class BatchReport:
    map_name: str
    stage_id: int
    alloc_mode: str
    policy: str
    coverage_only: bool
    n_episodes: int
    success_rate: float
    success_ci95: tuple[float, float]
    mean_capture_steps: float | None
    median_steps_to_80_coverage: float | None
    episodes: list[dict]
    # timing lives apart from the deterministic payload
    median_step_ms: float
    mean_step_ms: float

    def deterministic_dict(self) -> dict:
        return {
            "map": self.map_name,
            "stage_id": self.stage_id,
            "alloc": self.alloc_mode,
            "policy": self.policy,
            "coverage_only": self.coverage_only,
            "n_episodes": self.n_episodes,
            "success_rate": self.success_rate,
            "success_ci95": list(self.success_ci95),
            "mean_capture_steps": self.mean_capture_steps,
            "median_steps_to_80_coverage": self.median_steps_to_80_coverage,
            "episodes": self.episodes,
        }

    def timing_dict(self) -> dict:
        return {"median_step_ms": self.median_step_ms,
                "mean_step_ms": self.mean_step_ms}


def run_batch(map_name: str, n_episodes: int, base_seed: int = 0,
              stage_id: int = 5, alloc_mode: str = "directional",
              policy: str = "pid", coverage_only: bool = False,
              parallelism: int = 1,
              out_dir: str | None = None) -> BatchReport:
    """Run n episodes over consecutive seeds; aggregation is seed-sorted so
    any parallelism degree yields identical reports."""
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    tasks = [(map_name, base_seed + i, stage_id, alloc_mode, policy,
              coverage_only, out_dir) for i in range(n_episodes)]
    if parallelism <= 1:
        raw = [_episode_task(t) for t in tasks]
    else:
        ctx = get_context("fork")
        with ctx.Pool(parallelism) as pool:
            raw = list(pool.imap_unordered(_episode_task, tasks))
    raw.sort(key=lambda r: r[0])
    episodes = [r[1] for r in raw]
    all_times = [t for r in raw for t in r[2]]

    succ = [e for e in episodes if e["success"]]
    sr = len(succ) / n_episodes if n_episodes else 0.0
    cap_steps = [e["capture_step"] for e in succ
                 if e["capture_step"] is not None]
    t80 = [e["steps_to_80_coverage"] for e in episodes
           if e["steps_to_80_coverage"] is not None]
    report = BatchReport(
        map_name=map_name, stage_id=stage_id, alloc_mode=alloc_mode,
        policy=policy, coverage_only=coverage_only, n_episodes=n_episodes,
        success_rate=sr,
        success_ci95=wilson_interval(len(succ), n_episodes),
        mean_capture_steps=(sum(cap_steps) / len(cap_steps)
                            if cap_steps else None),
        median_steps_to_80_coverage=(float(np.median(t80)) if t80 else None),
        episodes=episodes,
        median_step_ms=(float(np.median(all_times)) * 1e3
                        if all_times else 0.0),
        mean_step_ms=(float(np.mean(all_times)) * 1e3 if all_times else 0.0),
    )
    if out_dir:
        _write_batch_outputs(report, out_dir)
    return report


def _write_batch_outputs(report: BatchReport, out_dir: str) -> None:
    ep_fields = ["seed", "success", "steps", "capture_step", "clean_capture",
                 "collisions", "coverage_final", "steps_to_80_coverage",
                 "reward_total"]
    with open(os.path.join(out_dir, "results.csv"), "w") as fh:
        fh.write(",".join(ep_fields) + "\n")
        for e in report.episodes:
            fh.write(",".join(_csv_cell(e[k]) for k in ep_fields) + "\n")
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report.deterministic_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    # timing is intentionally separate: wall-clock must never touch the
    # deterministic artifacts
    with open(os.path.join(out_dir, "timing.json"), "w") as fh:
        json.dump(report.timing_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)
