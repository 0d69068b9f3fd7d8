"""Run configuration and its flat ``key = value`` file format.

Blank lines and ``#`` comments are ignored. Every key must name a
:class:`RunConfig` field; list-valued fields take comma-separated values.
An empty ``profiles_dir`` means "generate profiles with ``profile_seed``".
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .agent import Hyperparameters
from .errors import ConfigError
from .qnet import NetSpec


@dataclass(frozen=True)
class RunConfig:
    n_bs: int = 7
    wired_mbps: float = 1000.0
    wireless_mbps: float = 1000.0
    norm_divisor: float = 1000.0
    profile_seed: int = 0
    profiles_dir: str = ""
    hidden_layers: int = 1
    hidden_width: int = 32
    alpha: float = 1e-4
    gamma: float = 0.99
    epsilon_init: float = 0.99
    epsilon_decay: float = 0.01
    epsilon_min: float = 0.01
    minibatch_M: int = 64
    buffer_N: int = 10000
    target_sync_C: int = 4
    epsilon_schedule: str = "step"
    persist_replay: bool = True
    grad_clip: float = 0.0
    terminal_at_split_end: bool = False
    optimistic_init: bool = True
    output_gain: float = 0.01
    window: int = 10
    fraction: float = 0.975
    max_episodes: int = 200
    seed: int = 0
    out_dir: str = ""
    sweep_layers: tuple[int, ...] = (1, 3, 5)
    sweep_widths: tuple[int, ...] = (8, 16, 24, 32, 40, 48)

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise ConfigError("fraction must lie in (0, 1]")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.max_episodes < 0:
            raise ConfigError("max_episodes must be >= 0")
        if self.n_bs < 2:
            raise ConfigError("n_bs must be >= 2")

    @property
    def net_spec(self) -> NetSpec:
        return NetSpec(self.hidden_layers, self.hidden_width, input_size=3 * self.n_bs + 2, action_size=self.n_bs)

    @property
    def hyperparameters(self) -> Hyperparameters:
        names = {f.name for f in fields(Hyperparameters)}
        return Hyperparameters(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


def _convert(name: str, default, raw: str):
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    defaults = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, getattr(defaults, key), raw)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def format_config(config: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
