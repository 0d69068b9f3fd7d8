"""Fully connected ReLU critic Q(s, a) with hand-written backprop and Adam.

The network input is the observation followed by the one-hot action;
hidden layers are affine + ReLU and the single output unit is affine.
Weights are stored as ``(fan_in, fan_out)`` matrices so a batch ``X`` of
shape ``(B, fan_in)`` propagates as ``X @ W + b``. Everything runs in
float64.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError

FORMAT_NAME = "iabslice.qnet"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetSpec:
    hidden_layers: int
    hidden_width: int
    input_size: int = 23
    action_size: int = 7
    output_size: int = 1

    def __post_init__(self):
        if self.hidden_layers < 1 or self.hidden_width < 1:
            raise DomainError("need at least one hidden layer of width >= 1")
        if self.output_size != 1:
            raise DomainError("the critic has exactly one output unit")
        if not 0 < self.action_size < self.input_size:
            raise DomainError("input must hold the observation and the one-hot action")

    @property
    def obs_size(self) -> int:
        return self.input_size - self.action_size

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_size] + [self.hidden_width] * self.hidden_layers + [self.output_size]

    @property
    def n_parameters(self) -> int:
        sizes = self.layer_sizes
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("learning rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise DomainError("moment decay rates must lie in (0, 1)")
        if not self.eps_hat > 0:
            raise DomainError("eps_hat must be positive")


class QNetwork:
    def __init__(self, spec: NetSpec, weights: list[np.ndarray], biases: list[np.ndarray]):
        sizes = spec.layer_sizes
        if len(weights) != len(sizes) - 1 or len(biases) != len(weights):
            raise DomainError("layer count does not match the spec")
        for W, b, fan_in, fan_out in zip(weights, biases, sizes[:-1], sizes[1:]):
            if W.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise DomainError("parameter shapes do not match the spec")
        self.spec = spec
        self.weights = [np.array(W, dtype=np.float64) for W in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.adam_m = [np.zeros_like(p) for p in self.parameters]
        self.adam_v = [np.zeros_like(p) for p in self.parameters]
        self.adam_t = 0

    @property
    def parameters(self) -> list[np.ndarray]:
        """Parameter arrays in the order W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def _check_inputs(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.spec.input_size:
            raise DomainError(f"inputs must have {self.spec.input_size} columns")
        return X

    def forward_batch(self, X) -> np.ndarray:
        a = self._check_inputs(X)
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ W + b
            if i < last:
                a = np.maximum(a, 0.0)
        return a[:, 0]

    def forward(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.spec.input_size,):
            raise DomainError(f"input must have length {self.spec.input_size}")
        if not np.all(np.isfinite(x)):
            raise DomainError("input must be finite")
        return float(self.forward_batch(x[None, :])[0])

    def loss_and_gradients(self, inputs, targets) -> tuple[float, list[np.ndarray]]:
        """Mean squared error over the batch and its exact gradients.

        Gradients are returned in :attr:`parameters` order.
        """
        X = self._check_inputs(inputs)
        y = np.asarray(targets, dtype=np.float64).reshape(-1)
        if len(X) == 0:
            raise DomainError("empty batch")
        if len(y) != len(X):
            raise DomainError("one target per input is required")

        acts = [X]
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W + b
            acts.append(np.maximum(z, 0.0) if i < last else z)
        diff = acts[-1][:, 0] - y
        loss = float(np.mean(diff**2))

        grads: list[np.ndarray] = [None] * (2 * len(self.weights))
        delta = (2.0 / len(X)) * diff[:, None]
        for i in range(last, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                # acts[i] > 0 exactly where the ReLU pre-activation was positive
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return loss, grads

    def adam_step(self, gradients: list[np.ndarray], config: OptimizerConfig) -> None:
        params = self.parameters
        if len(gradients) != len(params) or any(g.shape != p.shape for g, p in zip(gradients, params)):
            raise DomainError("gradient shapes do not match the parameters")
        self.adam_t += 1
        t = self.adam_t
        bc1 = 1.0 - config.beta1**t
        bc2 = 1.0 - config.beta2**t
        for p, g, m, v in zip(params, gradients, self.adam_m, self.adam_v):
            m *= config.beta1
            m += (1.0 - config.beta1) * g
            v *= config.beta2
            v += (1.0 - config.beta2) * (g * g)
            p -= config.alpha * (m / bc1) / (np.sqrt(v / bc2) + config.eps_hat)

    def action_inputs(self, observations) -> np.ndarray:
        """Rows ``concat(obs_i, one_hot(k))`` for every observation and action k."""
        obs = np.asarray(observations, dtype=np.float64)
        n_act = self.spec.action_size
        B = len(obs)
        X = np.zeros((B, n_act, self.spec.input_size))
        X[:, :, : self.spec.obs_size] = obs[:, None, :]
        X[:, np.arange(n_act), self.spec.obs_size + np.arange(n_act)] = 1.0
        return X.reshape(B * n_act, self.spec.input_size)

    def q_all_actions_batch(self, observations) -> np.ndarray:
        obs = np.asarray(observations, dtype=np.float64)
        if obs.ndim != 2 or obs.shape[1] != self.spec.obs_size:
            raise DomainError(f"observations must have {self.spec.obs_size} columns")
        return self.forward_batch(self.action_inputs(obs)).reshape(len(obs), self.spec.action_size)

    def q_all_actions(self, observation) -> np.ndarray:
        obs = np.asarray(observation, dtype=np.float64)
        if obs.shape != (self.spec.obs_size,):
            raise DomainError(f"observation must have length {self.spec.obs_size}")
        return self.q_all_actions_batch(obs[None, :])[0]

    def to_dict(self) -> dict:
        def enc(a):
            return [float(x).hex() for x in a.reshape(-1)]

        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "spec": asdict(self.spec),
            "layers": [
                {"shape": list(W.shape), "weights": enc(W), "bias": enc(b)} for W, b in zip(self.weights, self.biases)
            ],
            "adam": {"t": self.adam_t, "m": [enc(m) for m in self.adam_m], "v": [enc(v) for v in self.adam_v]},
        }

    @classmethod
    def from_dict(cls, data: dict) -> QNetwork:
        if data.get("format") != FORMAT_NAME or data.get("version") != FORMAT_VERSION:
            raise DomainError("unsupported network format or version")

        def dec(values, shape):
            return np.array([float.fromhex(x) for x in values], dtype=np.float64).reshape(shape)

        spec = NetSpec(**data["spec"])
        weights = [dec(layer["weights"], layer["shape"]) for layer in data["layers"]]
        biases = [dec(layer["bias"], (layer["shape"][1],)) for layer in data["layers"]]
        net = cls(spec, weights, biases)
        net.adam_t = int(data["adam"]["t"])
        shapes = [p.shape for p in net.parameters]
        net.adam_m = [dec(m, s) for m, s in zip(data["adam"]["m"], shapes)]
        net.adam_v = [dec(v, s) for v, s in zip(data["adam"]["v"], shapes)]
        return net

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> QNetwork:
        return cls.from_dict(json.loads(Path(path).read_text()))


def init_network(spec: NetSpec, seed, output_gain: float = 1.0) -> QNetwork:
    """He-uniform weights scaled by fan-in, zero biases.

    ``output_gain`` multiplies the output layer's weights only.
    """
    rng = np.random.default_rng(seed)
    sizes = spec.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    weights[-1] *= output_gain
    return QNetwork(spec, weights, biases)


def copy_parameters(source: QNetwork, destination: QNetwork) -> None:
    """Overwrite ``destination``'s weights with ``source``'s; Adam state is kept."""
    if source.spec != destination.spec:
        raise DomainError("cannot copy between networks of different specs")
    for dst, src in zip(destination.parameters, source.parameters):
        dst[...] = src


def clip_by_global_norm(gradients: list[np.ndarray], max_norm: float) -> list[np.ndarray]:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in gradients)))
    if norm <= max_norm or norm == 0.0:
        return gradients
    return [g * (max_norm / norm) for g in gradients]
