"""Double DQN agent: epsilon-greedy acting, uniform replay, periodic target sync."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .env import SlicingEnv, StepOutcome, one_hot
from .errors import DomainError
from .qnet import NetSpec, OptimizerConfig, QNetwork, clip_by_global_norm, copy_parameters, init_network

CHECKPOINT_FORMAT = "iabslice.agent"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class Hyperparameters:
    alpha: float = 1e-4
    gamma: float = 0.99
    epsilon_init: float = 0.99
    epsilon_decay: float = 0.01
    epsilon_min: float = 0.01
    minibatch_M: int = 64
    buffer_N: int = 10000
    target_sync_C: int = 4
    # "step": decay after every environment step, "episode": after every episode
    epsilon_schedule: str = "step"
    persist_replay: bool = True
    # global-norm gradient clipping; 0 disables it
    grad_clip: float = 0.0
    # treat the last step of a split as terminal (no bootstrap)
    terminal_at_split_end: bool = False
    # start the output bias at r_max / (1 - gamma) instead of 0
    optimistic_init: bool = True
    # scale of the output layer's initial weights relative to He init
    output_gain: float = 0.01

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise DomainError("gamma must lie in [0, 1]")
        if not (0 <= self.epsilon_min <= self.epsilon_init <= 1):
            raise DomainError("need 0 <= epsilon_min <= epsilon_init <= 1")
        if not 0 <= self.epsilon_decay < 1:
            raise DomainError("epsilon_decay must lie in [0, 1)")
        if not 1 <= self.minibatch_M <= self.buffer_N:
            raise DomainError("need 1 <= minibatch_M <= buffer_N")
        if self.target_sync_C < 1:
            raise DomainError("target_sync_C must be >= 1")
        if self.epsilon_schedule not in ("step", "episode"):
            raise DomainError("epsilon_schedule must be 'step' or 'episode'")
        if self.grad_clip < 0:
            raise DomainError("grad_clip must be >= 0")
        if self.output_gain < 0:
            raise DomainError("output_gain must be >= 0")

    @property
    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(alpha=self.alpha)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: int
    next_state: np.ndarray
    terminal: bool


@dataclass
class Batch:
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_transitions(cls, transitions) -> Batch:
        return cls(
            np.array([t.state for t in transitions], dtype=np.float64),
            np.array([t.action for t in transitions], dtype=np.int64),
            np.array([t.reward for t in transitions], dtype=np.float64),
            np.array([t.next_state for t in transitions], dtype=np.float64),
            np.array([t.terminal for t in transitions], dtype=bool),
        )


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions."""

    def __init__(self, capacity: int, obs_size: int):
        if capacity < 1:
            raise DomainError("replay capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, obs_size))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, obs_size))
        self.terminals = np.zeros(capacity, dtype=bool)
        self.insertions = 0

    def __len__(self):
        return min(self.insertions, self.capacity)

    def add(self, t: Transition) -> None:
        i = self.insertions % self.capacity
        self.states[i] = t.state
        self.actions[i] = t.action
        self.rewards[i] = t.reward
        self.next_states[i] = t.next_state
        self.terminals[i] = t.terminal
        self.insertions += 1

    def clear(self) -> None:
        self.insertions = 0

    def _take(self, idx) -> Batch:
        return Batch(
            self.states[idx].copy(),
            self.actions[idx].copy(),
            self.rewards[idx].copy(),
            self.next_states[idx].copy(),
            self.terminals[idx].copy(),
        )

    def sample(self, rng: np.random.Generator, size: int) -> Batch:
        if size > len(self):
            raise DomainError(f"cannot sample {size} from {len(self)} transitions")
        return self._take(rng.choice(len(self), size=size, replace=False))

    def ordered(self) -> Batch:
        """Stored transitions, oldest first."""
        n = len(self)
        start = self.insertions % self.capacity if self.insertions > self.capacity else 0
        return self._take((start + np.arange(n)) % self.capacity)


class DDQNAgent:
    def __init__(self, spec: NetSpec, hp: Hyperparameters | None = None, seed=0):
        self.spec = spec
        self.hp = hp or Hyperparameters()
        net_seed, rng_seed = np.random.SeedSequence(seed).spawn(2)
        self.online = init_network(spec, net_seed, self.hp.output_gain)
        if self.hp.optimistic_init:
            self.online.biases[-1][:] = 1.0 / (1.0 - self.hp.gamma) if self.hp.gamma < 1 else 1.0
        self.target = init_network(spec, net_seed)
        copy_parameters(self.online, self.target)
        self.buffer = ReplayBuffer(self.hp.buffer_N, spec.obs_size)
        self.epsilon = self.hp.epsilon_init
        self.step_counter = 0
        self.rng = np.random.default_rng(rng_seed)
        self.last_loss: float | None = None

    @property
    def n_actions(self) -> int:
        return self.spec.action_size

    def select_action(self, observation, greedy: bool = False) -> int:
        """Action index (0-based) for ``observation``; ties go to the lowest index."""
        if not greedy and self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.online.q_all_actions(observation)))

    def compute_targets(self, batch: Batch, return_actions: bool = False):
        """Double-Q targets: the online net picks a', the target net scores it."""
        if len(batch) == 0:
            raise DomainError("empty batch")
        best = np.argmax(self.online.q_all_actions_batch(batch.next_states), axis=1)
        q_target = self.target.q_all_actions_batch(batch.next_states)
        bootstrap = q_target[np.arange(len(batch)), best]
        y = batch.rewards + self.hp.gamma * np.where(batch.terminals, 0.0, bootstrap)
        return (y, best) if return_actions else y

    def learn_step(self) -> float | None:
        loss = None
        if len(self.buffer) >= self.hp.minibatch_M:
            batch = self.buffer.sample(self.rng, self.hp.minibatch_M)
            y = self.compute_targets(batch)
            X = np.hstack([batch.states, np.eye(self.n_actions)[batch.actions]])
            loss, grads = self.online.loss_and_gradients(X, y)
            if self.hp.grad_clip > 0:
                grads = clip_by_global_norm(grads, self.hp.grad_clip)
            self.online.adam_step(grads, self.hp.optimizer)
        if self.step_counter % self.hp.target_sync_C == 0:
            copy_parameters(self.online, self.target)
        return loss

    def decay_epsilon(self) -> None:
        self.epsilon = max(self.hp.epsilon_min, self.epsilon * (1.0 - self.hp.epsilon_decay))

    def interact(self, env: SlicingEnv) -> StepOutcome:
        state = env.observe()
        action = self.select_action(state)
        outcome = env.step(one_hot(action, self.n_actions))
        terminal = outcome.done and self.hp.terminal_at_split_end
        self.buffer.add(Transition(state, action, outcome.reward, outcome.observation, terminal))
        self.step_counter += 1
        if self.hp.epsilon_schedule == "step":
            self.decay_epsilon()
        self.last_loss = self.learn_step()
        return outcome

    def end_episode(self) -> None:
        if self.hp.epsilon_schedule == "episode":
            self.decay_epsilon()
        if not self.hp.persist_replay:
            self.buffer.clear()

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "hyperparameters": asdict(self.hp),
            "epsilon": float(self.epsilon).hex(),
            "step_counter": self.step_counter,
            "online": self.online.to_dict(),
            "target": self.target.to_dict(),
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_dict(cls, data: dict) -> DDQNAgent:
        if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
            raise DomainError("unsupported checkpoint format or version")
        known = {f.name for f in fields(Hyperparameters)}
        hp = Hyperparameters(**{k: v for k, v in data["hyperparameters"].items() if k in known})
        online = QNetwork.from_dict(data["online"])
        agent = cls(online.spec, hp)
        agent.online = online
        agent.target = QNetwork.from_dict(data["target"])
        agent.epsilon = float.fromhex(data["epsilon"])
        agent.step_counter = int(data["step_counter"])
        if "rng_state" in data:
            agent.rng.bit_generator.state = data["rng_state"]
        return agent

    def save(self, path, extra: dict | None = None) -> None:
        data = self.to_dict()
        if extra:
            data["extra"] = extra
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> DDQNAgent:
        return cls.from_dict(json.loads(Path(path).read_text()))
