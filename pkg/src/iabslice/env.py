"""Discrete-action environment for per-slice backhaul selection.

Each step decides the backhaul of one slice of BS1 for one 15-minute
interval; slices of an interval are decided in ascending id order, and
allocations are released when the interval ends. Action ``k`` (BS id,
1-based) routes the slice over BS1's wired link for ``k == 1`` or over the
wireless link to donor ``k`` otherwise. The reward is 1 when the whole
path accepts the slice's DL and UL demand and 0 otherwise.

Observation layout (length ``2 + 2 * n_bs``)::

    [req_dl, req_ul, free_dl[1], free_ul[1], ..., free_dl[N], free_ul[N]]

where ``free_*[k]`` is the bottleneck residual over the path of choice k.
All values are divided by ``norm_divisor`` and clamped to [0, 1].
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .profiles import ProfileSet
from .topology import Topology, build_topology

TRAIN_FRACTION = 0.7
VALIDATION_FRACTION = 0.1


class Split(enum.Enum):
    FULL_DAY = "full"
    TRAIN = "train"
    VALIDATION = "val"
    TEST = "test"


def split_intervals(split: Split, n_intervals: int) -> tuple[int, int]:
    """Half-open interval range of ``split``; train/val/test are contiguous."""
    n_train = int(TRAIN_FRACTION * n_intervals)
    n_val = int(VALIDATION_FRACTION * n_intervals)
    return {
        Split.FULL_DAY: (0, n_intervals),
        Split.TRAIN: (0, n_train),
        Split.VALIDATION: (n_train, n_train + n_val),
        Split.TEST: (n_train + n_val, n_intervals),
    }[Split(split)]


def one_hot(index: int, n: int) -> np.ndarray:
    v = np.zeros(n)
    v[index] = 1.0
    return v


@dataclass(frozen=True)
class StepOutcome:
    observation: np.ndarray
    reward: int
    done: bool
    info: tuple[float, float]


class SlicingEnv:
    def __init__(self, profiles: ProfileSet, topology: Topology | None = None, norm_divisor: float = 1000.0):
        if norm_divisor <= 0:
            raise DomainError("norm_divisor must be positive")
        self.profiles = profiles
        self.topology = topology if topology is not None else build_topology(profiles.n_bs)
        if self.topology.n_bs != profiles.n_bs:
            raise DomainError("topology and profiles disagree on the number of base stations")
        self.norm_divisor = float(norm_divisor)
        self.reset(Split.FULL_DAY)

    @property
    def n_actions(self) -> int:
        return self.topology.n_bs

    @property
    def obs_size(self) -> int:
        return 2 + 2 * self.topology.n_bs

    @property
    def n_slices(self) -> int:
        return self.profiles.n_slices

    def split_steps(self, split: Split) -> tuple[int, int]:
        lo, hi = split_intervals(split, self.profiles.n_intervals)
        return lo * self.n_slices, hi * self.n_slices

    def max_episode_reward(self, split: Split = Split.FULL_DAY) -> int:
        lo, hi = self.split_steps(split)
        return hi - lo

    @property
    def done(self) -> bool:
        return self.step_index >= self._stop

    @property
    def interval(self) -> int:
        # past the last step the day wraps to the next midnight
        return (self.step_index // self.n_slices) % self.profiles.n_intervals

    @property
    def slice_id(self) -> int:
        return self.step_index % self.n_slices + 1

    def current_demand(self) -> tuple[float, float]:
        return self.profiles.slice_demand(self.interval, self.slice_id)

    def _enter_interval(self) -> None:
        self.topology.release_interval()
        self.topology.set_bs_loads(self.profiles.loads_at(self.interval))

    def reset(self, split: Split = Split.FULL_DAY) -> np.ndarray:
        self.split = Split(split)
        self.step_index, self._stop = self.split_steps(self.split)
        self._enter_interval()
        return self.observe()

    def _require_active(self) -> None:
        if self.done:
            raise UsageError("episode is done; call reset()")

    def observe(self) -> np.ndarray:
        self._require_active()
        return self._observation()

    def _observation(self) -> np.ndarray:
        obs = np.empty(self.obs_size)
        obs[0:2] = self.current_demand()
        for k in self.topology.bs_ids:
            obs[2 * k : 2 * k + 2] = self.topology.path_residual(k)
        return np.clip(obs / self.norm_divisor, 0.0, 1.0)

    def feasible_choices(self) -> frozenset[int]:
        """BS ids whose path would accept the current slice."""
        self._require_active()
        dl, ul = self.current_demand()
        out = set()
        for k in self.topology.bs_ids:
            free_dl, free_ul = self.topology.path_residual(k)
            if free_dl >= dl and free_ul >= ul:
                out.add(k)
        return frozenset(out)

    def _decode(self, action) -> int:
        a = np.asarray(action)
        if a.shape != (self.n_actions,):
            raise DomainError(f"action must be a one-hot vector of length {self.n_actions}")
        nonzero = np.flatnonzero(a)
        if len(nonzero) != 1 or a[nonzero[0]] != 1:
            raise DomainError("action must have exactly one TRUE element")
        return int(nonzero[0]) + 1

    def step(self, action) -> StepOutcome:
        self._require_active()
        choice = self._decode(action)
        dl, ul = self.current_demand()
        result = self.topology.try_allocate(self.slice_id, choice, dl, ul, self.interval)
        reward = 1 if result.accepted else 0
        info = (dl, ul) if result.accepted else (0.0, 0.0)
        self.step_index += 1
        if self.step_index % self.n_slices == 0:
            self._enter_interval()
        return StepOutcome(self._observation(), reward, self.done, info)

    def state_key(self) -> tuple:
        return (self.split, self.step_index, self._stop, self.topology.snapshot())

    def clone(self) -> SlicingEnv:
        """Independent copy sharing the immutable profiles."""
        new = copy.copy(self)
        new.topology = copy.deepcopy(self.topology)
        return new
