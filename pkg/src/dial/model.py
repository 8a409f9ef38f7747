"""Shared embedder, linear reward head and MLP critic head."""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Node


class ConvergenceError(RuntimeError):
    pass


@dataclass
class MLP:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise ValueError("weights, biases and activations must have equal length")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ad.ShapeError(f"layer {i}", w.shape, b.shape)
            if i and self.weights[i - 1].shape[1] != w.shape[0]:
                raise ad.ShapeError(f"layer {i} chain", self.weights[i - 1].shape, w.shape)

    @classmethod
    def init(cls, sizes: Sequence[int], activations: Sequence[str], rng: np.random.Generator) -> "MLP":
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            a = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-a, a, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, list(activations))

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> "MLP":
        return MLP(list(arrays[0::2]), list(arrays[1::2]), list(self.activations))

    def bind(self, requires_grad: bool) -> list[tuple[Node, Node]]:
        leaf = ad.param if requires_grad else ad.const
        return [(leaf(w), leaf(b)) for w, b in zip(self.weights, self.biases)]

    def copy(self) -> "MLP":
        return self.with_arrays([a.copy() for a in self.arrays()])


@dataclass
class GraphParams:
    """Parameters bound as graph leaves for one forward/backward pass."""
    embedder: list[tuple[Node, Node]]
    embed_acts: list[str]
    reward: Node
    critic: list[tuple[Node, Node]]
    critic_acts: list[str]

    def leaves(self, groups: Sequence[str]) -> list[Node]:
        out: list[Node] = []
        for g in groups:
            if g == "theta":
                out += [n for layer in self.embedder for n in layer]
            elif g == "phi":
                out.append(self.reward)
            elif g == "psi":
                out += [n for layer in self.critic for n in layer]
            else:
                raise KeyError(g)
        return out


@dataclass
class DialParams:
    """theta (embedder), phi (reward head, no bias), psi (critic head)."""
    embedder: MLP
    reward: np.ndarray
    critic: MLP

    def __post_init__(self):
        self.reward = np.asarray(self.reward, dtype=np.float64)
        if self.reward.shape != (self.embedder.out_dim,):
            raise ad.ShapeError("reward head", self.reward.shape, (self.embedder.out_dim,))
        if self.critic.in_dim != self.embedder.out_dim or self.critic.out_dim != 1:
            raise ad.ShapeError("critic head", self.critic.weights[0].shape, (self.embedder.out_dim, "..."))

    @property
    def input_dim(self) -> int:
        return self.embedder.in_dim

    @property
    def embed_dim(self) -> int:
        return self.embedder.out_dim

    def bind(self, trainable: Sequence[str] = ()) -> GraphParams:
        return GraphParams(
            embedder=self.embedder.bind("theta" in trainable),
            embed_acts=self.embedder.activations,
            reward=(ad.param if "phi" in trainable else ad.const)(self.reward),
            critic=self.critic.bind("psi" in trainable),
            critic_acts=self.critic.activations,
        )

    def group(self, name: str) -> list[np.ndarray]:
        if name == "theta":
            return self.embedder.arrays()
        if name == "phi":
            return [self.reward]
        if name == "psi":
            return self.critic.arrays()
        raise KeyError(name)

    def replace_group(self, name: str, arrays: Sequence[np.ndarray]) -> None:
        if name == "theta":
            self.embedder = self.embedder.with_arrays(arrays)
        elif name == "phi":
            (self.reward,) = arrays
        elif name == "psi":
            self.critic = self.critic.with_arrays(arrays)
        else:
            raise KeyError(name)

    def copy(self) -> "DialParams":
        return DialParams(self.embedder.copy(), self.reward.copy(), self.critic.copy())

    # numpy conveniences for evaluation; no graph is recorded
    def embed(self, inputs) -> np.ndarray:
        return embed(self.bind(), _check_inputs(inputs, self.input_dim)).value

    def rewards(self, inputs) -> np.ndarray:
        return reward_score(self.bind(), _check_inputs(inputs, self.input_dim)).value

    def critic_scores(self, inputs) -> np.ndarray:
        return critic_score(self.bind(), _check_inputs(inputs, self.input_dim)).value

    def checksum(self, group: str) -> str:
        import hashlib
        h = hashlib.sha256()
        for a in self.group(group):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _check_inputs(inputs, dim: int) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != dim:
        raise ad.ShapeError("embed", x.shape, (None, dim))
    return x


def init_params(input_dim: int, embed_dims: Sequence[int] = (64, 32), critic_dims: Sequence[int] = (32, 16),
                seed: int | np.random.Generator = 0) -> DialParams:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sizes = [input_dim, *embed_dims]
    embedder = MLP.init(sizes, ["gelu"] * (len(sizes) - 1), rng)
    emb = sizes[-1]
    a = np.sqrt(6.0 / (emb + 1))
    reward = rng.uniform(-a, a, size=emb)
    csizes = [emb, *critic_dims, 1]
    critic = MLP.init(csizes, ["gelu"] * len(critic_dims) + ["identity"], rng)
    return DialParams(embedder, reward, critic)


# ---------------------------------------------------------------- graph forward


def embed(gp: GraphParams, inputs) -> Node:
    x = ad.const(inputs) if not isinstance(inputs, Node) else inputs
    if x.shape[-1] != gp.embedder[0][0].shape[0]:
        raise ad.ShapeError("embed", x.shape, gp.embedder[0][0].shape)
    return ad.mlp_forward(gp.embedder, gp.embed_acts, x)


def reward_head(gp: GraphParams, z: Node) -> Node:
    return ad.matmul(z, gp.reward)


def critic_head(gp: GraphParams, z) -> Node:
    out = ad.mlp_forward(gp.critic, gp.critic_acts, z)
    return ad.reshape(out, out.shape[:-1])


def reward_score(gp: GraphParams, inputs) -> Node:
    return reward_head(gp, embed(gp, inputs))


def critic_score(gp: GraphParams, inputs) -> Node:
    return critic_head(gp, embed(gp, inputs))


# ---------------------------------------------------------------- Lipschitz bound


def spectral_norm(w: np.ndarray, iters: int = 200, tol: float = 1e-9) -> float:
    """Largest singular value by power iteration on ``w.T @ w``."""
    w = np.asarray(w, dtype=np.float64)
    if not w.any():
        return 0.0
    v = np.random.default_rng(0).standard_normal(w.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iters):
        u = w @ v
        new_sigma = float(np.linalg.norm(u))
        wtu = w.T @ u
        v = wtu / np.linalg.norm(wtu)
        if abs(new_sigma - sigma) <= tol * new_sigma:
            return new_sigma
        sigma = new_sigma
    residual = float(np.linalg.norm(w.T @ (w @ v) - sigma**2 * v))
    raise ConvergenceError(f"power iteration did not converge in {iters} iterations (residual {residual:.3e})")


@functools.lru_cache(maxsize=None)
def activation_lipschitz(name: str) -> float:
    """sup |f'| over a dense grid on [-6, 6] (step 1e-4)."""
    if name == "identity":
        return 1.0
    grid = np.arange(-60000, 60001) * 1e-4
    return float(np.max(np.abs(ad.get_activation(name).df(grid))))


def lipschitz_upper_bound(params: DialParams) -> float:
    """Upper bound on the Lipschitz constant of the reward path in input space."""
    k = float(np.linalg.norm(params.reward))
    for w, act in zip(params.embedder.weights, params.embedder.activations):
        k *= spectral_norm(w) * activation_lipschitz(act)
    return k


# ---------------------------------------------------------------- checkpoints


def params_to_json(params: DialParams) -> dict:
    def mlp(m: MLP):
        return {"weights": [w.tolist() for w in m.weights], "biases": [b.tolist() for b in m.biases],
                "activations": list(m.activations)}
    return {"theta": mlp(params.embedder), "phi": params.reward.tolist(), "psi": mlp(params.critic)}


def params_from_json(obj: dict) -> DialParams:
    def mlp(d):
        return MLP([np.array(w, dtype=np.float64).reshape(len(w), -1) for w in d["weights"]],
                   [np.array(b, dtype=np.float64) for b in d["biases"]], list(d["activations"]))
    return DialParams(mlp(obj["theta"]), np.array(obj["phi"], dtype=np.float64), mlp(obj["psi"]))


@dataclass
class Checkpoint:
    params: DialParams
    config: dict = field(default_factory=dict)
    rng_state: dict | None = None
    step: int = 0

    def save(self, path) -> None:
        obj = {"config": self.config, **params_to_json(self.params), "rng_state": self.rng_state, "step": self.step}
        Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Checkpoint":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(params_from_json(obj), obj.get("config", {}), obj.get("rng_state"), int(obj.get("step", 0)))
