"""Stochastic bandit environment over a set function.

Noise is counter-based: the perturbation of the ``n``-th pull is fixed by the
seed and ``n`` alone, whatever sequence of ``pull``/``pull_many`` calls led
there. Algorithms interact through :class:`PullChannel`, which has no access
to noiseless values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError
from .itemset import as_itemset
from .setfn import SetFunction

GENERATOR_NAME = "numpy.random.Philox"

# sub-streams spawned from one replication seed
NOISE_KEY = 0
POLICY_KEY = 1

_BLOCK = 4096

NONE_SIGMA = 1e-12


@dataclass(frozen=True)
class RngStream:
    """Seed plus replication index; children give independent sub-streams."""

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def child(self, *keys: int) -> RngStream:
        return RngStream(self.seed, self.stream_id, self.path + tuple(keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))


RngLike = Union[RngStream, np.random.Generator, int, None]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return RngStream(0 if rng is None else int(rng)).generator()


class UniformStream:
    """Sequential uniform draws with look-ahead.

    ``peek(n)`` returns the next ``n`` draws without consuming them; the draws
    are identical to what ``random(n)`` would return next.
    """

    def __init__(self, gen: np.random.Generator, block: int = _BLOCK):
        self._gen = gen
        self._block = block
        self._buf = np.empty(0)
        self._pos = 0

    def _ensure(self, n: int) -> None:
        have = self._buf.size - self._pos
        if have >= n:
            return
        need = n - have
        blocks = -(-need // self._block)
        fresh = self._gen.random(blocks * self._block)
        self._buf = np.concatenate([self._buf[self._pos :], fresh])
        self._pos = 0

    def peek(self, n: int) -> np.ndarray:
        self._ensure(n)
        return self._buf[self._pos : self._pos + n]

    def consume(self, n: int) -> None:
        self._ensure(n)
        self._pos += n

    def random(self, n: int) -> np.ndarray:
        out = self.peek(n).copy()
        self._pos += n
        return out


@dataclass(frozen=True)
class NoiseModel:
    """Additive reward noise.

    ``kind`` is ``gaussian`` (``scale`` is the standard deviation),
    ``uniform`` (uniform on ``[-scale, scale]``) or ``none``.
    """

    kind: str = "gaussian"
    scale: float = 0.1

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "none"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        if self.kind != "none" and not self.scale > 0:
            raise ParameterError(f"{self.kind} noise needs a positive scale, got {self.scale}")

    @property
    def sigma(self) -> float:
        """Declared sub-Gaussian parameter."""
        return NONE_SIGMA if self.kind == "none" else float(self.scale)

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * gen.standard_normal(n)
        if self.kind == "uniform":
            return gen.uniform(-self.scale, self.scale, n)
        return np.zeros(n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale}

    @classmethod
    def from_dict(cls, data: dict) -> NoiseModel:
        kind = data.get("kind", "gaussian")
        scale = data.get("scale", data.get("sigma", data.get("half_width", 0.0 if kind == "none" else 0.1)))
        return cls(kind, float(scale))


class Environment:
    """Noisy reward channel ``Z_t = f(A_t) + eta_t`` with a round counter.

    Every pull is logged (action, noiseless value, observation) for regret
    accounting by the harness.
    """

    def __init__(self, f: SetFunction, noise: NoiseModel, rng: RngLike = None):
        self.f = f
        self.noise = noise
        self._gen = as_generator(rng)
        self._noise_buf = np.empty(0)
        self._noise_start = 0  # pull index of _noise_buf[0]
        self.t = 0
        self._members: list[np.ndarray] = []
        self._values: list[np.ndarray] = []
        self._observed: list[np.ndarray] = []

    @property
    def d(self) -> int:
        return self.f.d

    def _noise(self, n: int) -> np.ndarray:
        offset = self.t - self._noise_start
        missing = offset + n - self._noise_buf.size
        if missing > 0:
            blocks = -(-missing // _BLOCK)
            fresh = self.noise.sample(self._gen, blocks * _BLOCK)
            self._noise_buf = np.concatenate([self._noise_buf[offset:], fresh])
            self._noise_start = self.t
            offset = 0
        return self._noise_buf[offset : offset + n]

    def preview(self, members: np.ndarray) -> np.ndarray:
        """Observations the next ``len(members)`` pulls of these sets would return.

        Nothing is consumed. Batched algorithms use this to replay a sequence
        of actions that is already fixed; the subsequent ``pull_many`` of any
        prefix returns exactly the same numbers.
        """
        values = self.f.batch(members)
        return values + self._noise(values.size)

    def pull_many(self, members: np.ndarray) -> np.ndarray:
        members = np.asarray(members, dtype=bool)
        values = self.f.batch(members)
        z = values + self._noise(values.size)
        self._members.append(members.copy())
        self._values.append(values)
        self._observed.append(z.copy())
        self.t += values.size
        return z

    def pull(self, A) -> tuple[float, int]:
        A = as_itemset(A, self.d)
        z = self.pull_many(A.to_mask()[None, :])
        return float(z[0]), self.t

    def true_value(self, A) -> float:
        """Noiseless ``f(A)``; harness-side only, consumes no round."""
        return self.f(A)

    def history(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(members, values, observed)`` for every pull so far."""
        if not self._members:
            return np.zeros((0, self.d), dtype=bool), np.zeros(0), np.zeros(0)
        return np.concatenate(self._members), np.concatenate(self._values), np.concatenate(self._observed)

    def channel(self) -> PullChannel:
        return PullChannel(self)


class PullChannel:
    """What an algorithm may see of an environment: pulls and their observations."""

    __slots__ = ("_env",)

    def __init__(self, env: Environment):
        self._env = env

    @property
    def d(self) -> int:
        return self._env.d

    @property
    def t(self) -> int:
        return self._env.t

    def pull(self, A) -> tuple[float, int]:
        return self._env.pull(A)

    def pull_many(self, members: np.ndarray) -> np.ndarray:
        return self._env.pull_many(members)

    def preview(self, members: np.ndarray) -> np.ndarray:
        return self._env.preview(members)


def make_environment(f: SetFunction, noise: NoiseModel, stream: RngStream) -> Environment:
    """Environment whose noise comes from the replication's noise sub-stream."""
    return Environment(f, noise, stream.child(NOISE_KEY))


def pull(env: Environment, A) -> tuple[float, int]:
    return env.pull(A)


def true_value(env: Environment, A) -> float:
    return env.true_value(A)
