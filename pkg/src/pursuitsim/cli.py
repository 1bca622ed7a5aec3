"""Command line entry points: run, batch, gen-map, replay."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import load_config, save_config
from .errors import PursuitSimError
from .runner import MAP_PRESETS, build_scenario, run_batch, run_episode
from .world import generate_random_map

ALLOC_MODES = ("directional", "greedy", "random", "no-suppress")


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", default="train10", choices=sorted(MAP_PRESETS),
                   help="map preset")
    p.add_argument("--config", default=os.environ.get("PURSUITSIM_CONFIG"),
                   help="scenario YAML (overrides --map; defaults to "
                        "$PURSUITSIM_CONFIG when set)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stage", type=int, default=5, choices=range(1, 6),
                   help="curriculum stage")
    p.add_argument("--alloc", default="directional", choices=ALLOC_MODES)
    p.add_argument("--policy", default="pid",
                   help="'pid' or a scripted-actions JSON file")
    p.add_argument("--coverage-only", action="store_true",
                   help="disable detection/capture; explore to the horizon")


def _scenario_from_args(args, seed: int):
    if args.config:
        cfg = load_config(args.config)
        cfg = dataclasses.replace(
            cfg, rng_seed=seed, stage_id=args.stage,
            allocator=dataclasses.replace(cfg.allocator, mode=args.alloc))
        return cfg
    return build_scenario(args.map, seed, args.stage, args.alloc)


def _cmd_run(args) -> int:
    cfg = _scenario_from_args(args, args.seed)
    log_path = None
    if args.out:
        if args.out.endswith(".jsonl"):
            log_path = args.out
            parent = os.path.dirname(args.out)
            if parent:
                os.makedirs(parent, exist_ok=True)
        else:
            os.makedirs(args.out, exist_ok=True)
            log_path = os.path.join(args.out, f"ep{args.seed:05d}.jsonl")
    res = run_episode(cfg, seed=args.seed, policy=args.policy,
                      log_path=log_path, coverage_only=args.coverage_only)
    print(json.dumps(res.deterministic_dict(), sort_keys=True))
    return 0


def _cmd_batch(args) -> int:
    report = run_batch(
        map_name=args.map, n_episodes=args.episodes, base_seed=args.seed,
        stage_id=args.stage, alloc_mode=args.alloc, policy=args.policy,
        coverage_only=args.coverage_only, parallelism=args.parallelism,
        out_dir=args.out)
    out = report.deterministic_dict()
    out.pop("episodes")
    out["timing"] = report.timing_dict()
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_gen_map(args) -> int:
    cfg = generate_random_map(args.width, args.height, args.n_obstacles,
                              args.seed)
    save_config(cfg, args.out)
    print(f"wrote {args.out} ({len(cfg.obstacles)} obstacles)")
    return 0


def _cmd_replay(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    world_rows = []
    agent_rows = []
    with open(args.log) as fh:
        for line in fh:
            rec = json.loads(line)
            if rec["type"] == "world":
                for i, (x, y, th, v) in enumerate(rec["agents"]):
                    world_rows.append((rec["step"], i, x, y, th, v,
                                       rec["coverage"]))
            elif rec["type"] == "agent":
                r = rec["reward"]
                agent_rows.append((rec["step"], rec["id"], rec["mode"],
                                   rec["sub"] or "", rec["action"][0],
                                   rec["action"][1], r["mission"], r["safety"],
                                   r["guide"], r["explore"], r["total"]))
    with open(os.path.join(args.out, "world.csv"), "w") as fh:
        fh.write("step,agent,x,y,theta,v,coverage\n")
        for row in world_rows:
            fh.write(",".join(str(c) for c in row) + "\n")
    with open(os.path.join(args.out, "agents.csv"), "w") as fh:
        fh.write("step,agent,mode,sub,dtheta,dv,"
                 "r_mission,r_safety,r_guide,r_explore,r_total\n")
        for row in agent_rows:
            fh.write(",".join(str(c) for c in row) + "\n")
    print(f"wrote {args.out}/world.csv and {args.out}/agents.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pursuitsim",
        description="Deterministic multi-robot pursuit-evasion simulator")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run one episode")
    _add_scenario_args(pr)
    pr.add_argument("--out", default=None,
                    help="trajectory log destination (.jsonl or directory)")
    pr.set_defaults(fn=_cmd_run)

    pb = sub.add_parser("batch", help="run an episode batch")
    _add_scenario_args(pb)
    pb.add_argument("--episodes", type=int, default=50)
    pb.add_argument("--parallelism", type=int, default=1)
    pb.add_argument("--out", default=None, help="output directory")
    pb.set_defaults(fn=_cmd_batch)

    pg = sub.add_parser("gen-map", help="generate a random scenario YAML")
    pg.add_argument("--width", type=float, default=15.0)
    pg.add_argument("--height", type=float, default=15.0)
    pg.add_argument("--n-obstacles", type=int, default=8)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--out", required=True)
    pg.set_defaults(fn=_cmd_gen_map)

    pp = sub.add_parser("replay", help="expand a trajectory log to CSV")
    pp.add_argument("--log", required=True)
    pp.add_argument("--out", required=True)
    pp.set_defaults(fn=_cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except PursuitSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
