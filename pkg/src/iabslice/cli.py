"""Command line entry point: ``iabslice {gen-profiles,train,eval,sweep,oracle}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .agent import DDQNAgent
from .config import RunConfig, load_config
from .env import SlicingEnv, Split
from .errors import ConfigError, DomainError, GenerationError, ProfileParseError, UsageError
from .harness import evaluate, oracle_max_reward, run_sweep, run_training
from .profiles import ProfileGenConfig, generate_default_profiles, load_profiles_csv, save_profiles_csv
from .topology import build_topology

log = logging.getLogger("iabslice")

SPLITS = {"train": Split.TRAIN, "val": Split.VALIDATION, "test": Split.TEST, "full": Split.FULL_DAY}


def _profiles(args, n_bs: int = 7, capacity: float = 1000.0):
    if args.profiles:
        return load_profiles_csv(args.profiles, n_bs=n_bs)
    return generate_default_profiles(ProfileGenConfig(n_bs=n_bs, capacity_mbps=capacity, seed=args.profile_seed))


def cmd_gen_profiles(args) -> int:
    profiles = generate_default_profiles(ProfileGenConfig(seed=args.seed))
    save_profiles_csv(profiles, args.out)
    print(f"wrote {args.out}/slices.csv and {args.out}/loads.csv")
    return 0


def cmd_train(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {"out_dir": args.out}
    if args.seed is not None:
        changes["seed"] = args.seed
    config = config.replace(**changes)
    report = run_training(config)
    eps = report.episodes_to_target if report.converged else "DNC"
    print(
        f"episodes={eps} last={report.last_episode_reward} avg={report.average_episode_reward} "
        f"val={report.validation_reward} test={report.test_reward} full={report.full_day_reward}"
    )
    return 0


def cmd_eval(args) -> int:
    try:
        data = json.loads(Path(args.checkpoint).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read checkpoint {args.checkpoint}: {exc}") from exc
    agent = DDQNAgent.from_dict(data)
    extra = data.get("extra") or {}
    n_bs = int(extra.get("n_bs", agent.spec.action_size))
    wired = float(extra.get("wired_mbps", 1000.0))
    topo = build_topology(n_bs, wired, float(extra.get("wireless_mbps", 1000.0)))
    env = SlicingEnv(_profiles(args, n_bs, wired), topo, norm_divisor=float(extra.get("norm_divisor", 1000.0)))
    if env.obs_size != agent.spec.obs_size:
        raise UsageError("checkpoint does not match the environment's observation size")
    split = SPLITS[args.split]
    print(f"{args.split} reward {evaluate(agent, env, split)} / {env.max_episode_reward(split)}")
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    result = run_sweep(config.replace(out_dir=args.out), jobs=args.jobs)
    for r in result.rows:
        eps = r.episodes_to_target if r.converged else "DNC"
        print(f"{r.hidden_layers} x {r.hidden_width}: episodes={eps} val={r.validation_reward} test={r.test_reward}")
    return 0


def cmd_oracle(args) -> int:
    env = SlicingEnv(_profiles(args))
    split = SPLITS[args.split]
    print(f"{args.split} oracle {oracle_max_reward(env, split)} / {env.max_episode_reward(split)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iabslice", description="IAB backhaul selection with a DDQN agent")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every training episode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-profiles", help="generate the default slice and load profiles as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_profiles)

    p = sub.add_parser("train", help="train one agent and write episodes.csv, report.json, checkpoint.json")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy rollout of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=sorted(SPLITS), default="test")
    p.add_argument("--profiles", help="directory holding slices.csv and loads.csv")
    p.add_argument("--profile-seed", type=int, default=0, help="generator seed when --profiles is absent")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train the layers x width grid")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="reward of the greedy feasibility oracle")
    p.add_argument("--profiles")
    p.add_argument("--profile-seed", type=int, default=0)
    p.add_argument("--split", choices=sorted(SPLITS), default="full")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, GenerationError, ProfileParseError, UsageError, OSError) as exc:
        print(f"iabslice: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
