"""Training with early stopping, greedy evaluation, the feasibility oracle,
the architecture sweep, and CSV/JSON exports."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .agent import DDQNAgent
from .config import RunConfig, format_config
from .env import SlicingEnv, Split, one_hot
from .profiles import ProfileGenConfig, ProfileSet, generate_default_profiles, load_profiles_csv, save_profiles_csv
from .topology import build_topology

log = logging.getLogger(__name__)

DNC = "DNC"
EPISODES_HEADER = ["episode", "train_reward", "moving_avg", "epsilon", "mean_throughput_gbps"]
SWEEP_HEADER = [
    "hidden_layers",
    "hidden_width",
    "seed",
    "training_episodes",
    "last_episode_reward",
    "average_episode_reward",
    "validation_reward",
    "testing_reward",
    "full_day_reward",
]


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    train_reward: int
    moving_avg: float
    epsilon: float
    mean_throughput_gbps: float


@dataclass
class TrainingReport:
    hidden_layers: int
    hidden_width: int
    seed: int
    threshold: float
    episodes: list[EpisodeRecord] = field(default_factory=list)
    episodes_to_target: int | None = None
    last_episode_reward: int | None = None
    average_episode_reward: float | None = None
    validation_reward: int = 0
    test_reward: int = 0
    full_day_reward: int = 0

    @property
    def converged(self) -> bool:
        return self.episodes_to_target is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("episodes")
        d["episodes_to_target"] = self.episodes_to_target if self.converged else DNC
        d["converged"] = self.converged
        d["n_episodes"] = len(self.episodes)
        return d


@dataclass
class SweepResult:
    rows: list[TrainingReport]

    def cell(self, layers: int, width: int) -> TrainingReport:
        for r in self.rows:
            if (r.hidden_layers, r.hidden_width) == (layers, width):
                return r
        raise KeyError((layers, width))


def load_profiles_for(config: RunConfig) -> ProfileSet:
    if config.profiles_dir:
        return load_profiles_csv(config.profiles_dir, n_bs=config.n_bs)
    gen = ProfileGenConfig(n_bs=config.n_bs, capacity_mbps=config.wired_mbps, seed=config.profile_seed)
    return generate_default_profiles(gen)


def make_env(config: RunConfig, profiles: ProfileSet | None = None) -> SlicingEnv:
    profiles = profiles if profiles is not None else load_profiles_for(config)
    topo = build_topology(config.n_bs, config.wired_mbps, config.wireless_mbps)
    return SlicingEnv(profiles, topo, norm_divisor=config.norm_divisor)


def evaluate(agent: DDQNAgent, env: SlicingEnv, split: Split) -> int:
    """Greedy rollout over ``split`` with exploration and learning off."""
    env.reset(split)
    total = 0
    while not env.done:
        action = agent.select_action(env.observe(), greedy=True)
        total += env.step(one_hot(action, env.n_actions)).reward
    return total


def oracle_max_reward(env: SlicingEnv, split: Split) -> int:
    """Reward of a greedy allocator that knows every path's residual.

    At each step BS1's wired link is preferred; otherwise the feasible donor
    with the widest bottleneck residual is taken. ``env`` is left untouched.
    """
    env = env.clone()
    env.reset(split)
    total = 0
    while not env.done:
        feasible = env.feasible_choices()
        donors = sorted(
            range(2, env.n_actions + 1), key=lambda k: (-min(env.topology.path_residual(k)), k)
        )
        choice = next((k for k in [1] + donors if k in feasible), 1)
        total += env.step(one_hot(choice - 1, env.n_actions)).reward
    return total


def train_agent(config: RunConfig, profiles: ProfileSet | None = None) -> tuple[TrainingReport, DDQNAgent]:
    env = make_env(config, profiles)
    agent = DDQNAgent(config.net_spec, config.hyperparameters, seed=config.seed)
    max_train = env.max_episode_reward(Split.TRAIN)
    threshold = config.fraction * max_train
    n_intervals = max_train // env.n_slices
    report = TrainingReport(config.hidden_layers, config.hidden_width, config.seed, threshold)

    rewards: list[int] = []
    for episode in range(1, config.max_episodes + 1):
        env.reset(Split.TRAIN)
        total, served_mbps = 0, 0.0
        while not env.done:
            outcome = agent.interact(env)
            total += outcome.reward
            served_mbps += outcome.info[0] + outcome.info[1]
        agent.end_episode()
        rewards.append(total)
        recent = rewards[-config.window :]
        moving = sum(recent) / len(recent)
        report.episodes.append(
            EpisodeRecord(episode, total, moving, agent.epsilon, served_mbps / n_intervals / 1000.0)
        )
        log.info("episode %d reward %d avg %.2f eps %.4f", episode, total, moving, agent.epsilon)
        if episode >= config.window and moving >= threshold:
            report.episodes_to_target = episode
            break

    if report.episodes:
        report.last_episode_reward = report.episodes[-1].train_reward
        report.average_episode_reward = report.episodes[-1].moving_avg
    report.validation_reward = evaluate(agent, env, Split.VALIDATION)
    report.test_reward = evaluate(agent, env, Split.TEST)
    report.full_day_reward = evaluate(agent, env, Split.FULL_DAY)
    return report, agent


def run_training(config: RunConfig, profiles: ProfileSet | None = None) -> TrainingReport:
    """Train, evaluate, and write outputs to ``config.out_dir`` when set."""
    profiles = profiles if profiles is not None else load_profiles_for(config)
    report, agent = train_agent(config, profiles)
    if config.out_dir:
        out = Path(config.out_dir)
        export_outputs(report, out, agent=agent, config=config)
        save_profiles_csv(profiles, out / "profiles")
    return report


def cell_seed(root_seed: int, layers: int, width: int) -> int:
    return int(np.random.SeedSequence([root_seed, layers, width]).generate_state(1)[0])


def _run_cell(args) -> TrainingReport:
    config, profiles = args
    try:
        return run_training(config, profiles)
    except Exception:
        log.exception("sweep cell %dx%d failed", config.hidden_layers, config.hidden_width)
        return TrainingReport(config.hidden_layers, config.hidden_width, config.seed, float("nan"))


def run_sweep(config: RunConfig, jobs: int = 1) -> SweepResult:
    """Train one agent per (layers, width) cell of the configured grid."""
    profiles = load_profiles_for(config)
    cells = []
    for layers in config.sweep_layers:
        for width in config.sweep_widths:
            out = str(Path(config.out_dir) / f"L{layers}_W{width}") if config.out_dir else ""
            cell = config.replace(
                hidden_layers=layers, hidden_width=width, seed=cell_seed(config.seed, layers, width), out_dir=out
            )
            cells.append((cell, profiles))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    result = SweepResult(rows)
    if config.out_dir:
        write_sweep_csv(result, Path(config.out_dir) / "sweep.csv")
    return result


def write_episodes_csv(records, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(EPISODES_HEADER)
        for r in records:
            w.writerow([r.episode, r.train_reward, repr(r.moving_avg), repr(r.epsilon), repr(r.mean_throughput_gbps)])


def read_episodes_csv(path) -> list[EpisodeRecord]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        if next(reader, None) != EPISODES_HEADER:
            raise ValueError(f"{path}: unexpected header")
        return [EpisodeRecord(int(a), int(b), float(c), float(d), float(e)) for a, b, c, d, e in reader]


def _cell(value):
    return DNC if value is None else value


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.rows:
            w.writerow(
                [
                    r.hidden_layers,
                    r.hidden_width,
                    r.seed,
                    _cell(r.episodes_to_target),
                    _cell(r.last_episode_reward),
                    _cell(r.average_episode_reward),
                    r.validation_reward,
                    r.test_reward,
                    r.full_day_reward,
                ]
            )


def export_outputs(report: TrainingReport, out_dir, agent: DDQNAgent | None = None, config: RunConfig | None = None):
    """Write episodes.csv, report.json and (given an agent) checkpoint.json."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "episodes.csv", out / "report.json"]
        write_episodes_csv(report.episodes, written[0])
        written[1].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        if agent is not None:
            extra = None
            if config is not None:
                extra = {
                    "n_bs": config.n_bs,
                    "wired_mbps": config.wired_mbps,
                    "wireless_mbps": config.wireless_mbps,
                    "norm_divisor": config.norm_divisor,
                }
            agent.save(out / "checkpoint.json", extra=extra)
            written.append(out / "checkpoint.json")
        if config is not None:
            (out / "config.txt").write_text(format_config(config))
            written.append(out / "config.txt")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write outputs to {out}: {exc.strerror}") from exc
    return written
