"""Slice-level backhaul selection for a congested IAB base station.

A 7-BS topology with wired and wireless backhaul, a daily traffic profile
generator, a one-slice-per-step environment, and a Double DQN agent built
on a small numpy MLP.
"""

from .agent import DDQNAgent, Hyperparameters, ReplayBuffer, Transition
from .config import RunConfig, load_config, parse_config
from .env import SlicingEnv, Split, StepOutcome
from .errors import ConfigError, DomainError, GenerationError, InvalidTopologyError, ProfileParseError, UsageError
from .harness import TrainingReport, evaluate, oracle_max_reward, run_sweep, run_training, train_agent
from .profiles import ProfileGenConfig, ProfileSet, assign_profile, generate_default_profiles
from .qnet import NetSpec, OptimizerConfig, QNetwork, init_network
from .topology import Topology, build_topology

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DDQNAgent",
    "DomainError",
    "GenerationError",
    "Hyperparameters",
    "InvalidTopologyError",
    "NetSpec",
    "OptimizerConfig",
    "ProfileGenConfig",
    "ProfileParseError",
    "ProfileSet",
    "QNetwork",
    "ReplayBuffer",
    "RunConfig",
    "SlicingEnv",
    "Split",
    "StepOutcome",
    "Topology",
    "TrainingReport",
    "Transition",
    "UsageError",
    "assign_profile",
    "build_topology",
    "evaluate",
    "generate_default_profiles",
    "init_network",
    "load_config",
    "oracle_max_reward",
    "parse_config",
    "run_sweep",
    "run_training",
    "train_agent",
]
