"""Double-Greedy and its bandit-feedback variants.

``dg_offline``/``dg_repeated`` need exact values. ``DgEtc`` and ``Rgl`` only
see noisy observations through a :class:`~dgetc.env.PullChannel`; both can be
driven one round at a time (``step``) or to the horizon in batches (``run``),
and the two modes produce identical traces for the same seed.
"""

from __future__ import annotations

import logging
import math
import warnings
from typing import Optional, Sequence

import numpy as np

from .coremath import (
    ConfidenceParams,
    argmin_on_bounds,
    default_probability,
    default_probability_array,
    g_conf,
    interval_bounds,
    loss,
    tau_max as compute_tau_max,
)
from .env import POLICY_KEY, Environment, PullChannel, RngLike, RngStream, UniformStream, as_generator
from .errors import InternalConsistencyError, ParameterError, StateError
from .harness.regret import EXPLOIT, EXPLORE, CommitRecord, RegretTrace, compute_regret
from .itemset import ItemSet
from .setfn import SetFunction

log = logging.getLogger(__name__)

# slack for in-run soundness assertions on committed weights (float rounding only)
SOUND_TOL = 1e-12

_FIRST_CHUNK = 64
_MAX_CHUNK = 4096
_EXPLOIT_CHUNK = 1 << 15


# ---------------------------------------------------------------------------
# offline Double-Greedy

def dg_offline_batch(f: SetFunction, n: int, rng: RngLike) -> np.ndarray:
    """``n`` independent Double-Greedy runs; row ``r`` is the membership of run ``r``'s output.

    Consumes ``d`` uniforms per run in run order, so the rows coincide with
    ``n`` successive :func:`dg_offline` calls on the same generator.
    """
    gen = as_generator(rng)
    d = f.d
    u = gen.random((n, d))
    X = np.zeros((n, d), dtype=bool)
    Y = np.ones((n, d), dtype=bool)
    for i in range(d):
        X_add = X.copy()
        X_add[:, i] = True
        Y_rem = Y.copy()
        Y_rem[:, i] = False
        alpha = f.batch(X_add) - f.batch(X)
        beta = f.batch(Y_rem) - f.batch(Y)
        take = u[:, i] < default_probability_array(alpha, beta)
        X[:, i] = take
        Y[:, i] = take
    return X


def dg_offline(f: SetFunction, rng: RngLike) -> ItemSet:
    """One run of randomized Double-Greedy with exact marginal gains (``4d`` evaluations)."""
    gen = as_generator(rng)
    d = f.d
    u = gen.random(d)
    X, Y = ItemSet.empty(d), ItemSet.full(d)
    for i in range(d):
        alpha = f(X.add(i)) - f(X)
        beta = f(Y.remove(i)) - f(Y)
        if u[i] < default_probability(alpha, beta):
            X = X.add(i)
        else:
            Y = Y.remove(i)
    return X


def dg_repeated(f: SetFunction, repeats: int, rng: RngLike) -> tuple[ItemSet, float]:
    """Best of ``repeats`` independent Double-Greedy runs by exact value (first wins ties)."""
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    members = dg_offline_batch(f, repeats, rng)
    values = f.batch(members)
    k = int(np.argmax(values))
    return ItemSet.from_mask(members[k]), float(values[k])


# ---------------------------------------------------------------------------
# building blocks of the bandit algorithm

def dg_sample(p: Sequence[Optional[float]], stop: int, rng) -> tuple[ItemSet, ItemSet]:
    """Sample the Double-Greedy pair after deciding items ``0 .. stop-1``.

    Item ``j < stop`` joins ``X`` with probability ``p[j]`` and otherwise
    leaves ``Y``; items from ``stop`` on stay undecided (in ``Y``, not in
    ``X``). ``rng`` needs a ``random(n)`` method; exactly ``stop`` draws are used.
    """
    d = len(p)
    if not 0 <= stop <= d:
        raise ParameterError(f"stop must lie in [0, {d}], got {stop}")
    if any(p[j] is None for j in range(stop)):
        raise StateError(f"weights of items below {stop} must be committed")
    u = rng.random(stop)
    X, Y = 0, (1 << d) - 1
    for j in range(stop):
        if u[j] < p[j]:
            X |= 1 << j
        else:
            Y &= ~(1 << j)
    return ItemSet(X, d), ItemSet(Y, d)


def _explore_update(alpha: float, beta: float, tau: int, g: float, tau_max: int):
    """``(p, branch)``; ``branch`` is None while the item must keep exploring."""
    lo, hi = interval_bounds(alpha, beta, g / math.sqrt(tau))
    if lo <= hi:
        return argmin_on_bounds(alpha, beta, lo, hi)[0], "lambda"
    if tau >= tau_max:
        return default_probability(alpha, beta), "cap"
    return 0.5, None


def upd_exp(i: int, alpha_hat: float, beta_hat: float, tau: int, g: float, tau_max: int) -> tuple[float, int]:
    """Exploration update for item ``i`` after ``tau`` blocks.

    Returns the loss-minimising weight among those absorbing ``g / sqrt(tau)``
    if any exists, the Double-Greedy weight once ``tau`` reaches ``tau_max``,
    and ``(0.5, i)`` (keep exploring) otherwise.
    """
    if tau < 1:
        raise ParameterError(f"tau must be >= 1, got {tau}")
    p, branch = _explore_update(alpha_hat, beta_hat, tau, g, tau_max)
    return p, i if branch is None else i + 1


def _block_actions(X: ItemSet, Y: ItemSet, i: int) -> list[ItemSet]:
    return [X, X.add(i), Y, Y.remove(i)]


class _PhaseLog:
    def __init__(self):
        self.runs: list[list[int]] = []

    def add(self, phase: int, count: int) -> None:
        if count <= 0:
            return
        if self.runs and self.runs[-1][0] == phase:
            self.runs[-1][1] += count
        else:
            self.runs.append([phase, count])

    def array(self) -> np.ndarray:
        if not self.runs:
            return np.zeros(0, dtype=np.int8)
        return np.repeat(np.array([r[0] for r in self.runs], dtype=np.int8), [r[1] for r in self.runs])


class _EtcBase:
    """Shared per-item estimation machinery: 4-round blocks, running means, truncation."""

    def __init__(self, d: int, T: int, rng: RngLike):
        if d < 1 or T < 1:
            raise ParameterError(f"need d >= 1 and T >= 1, got d={d}, T={T}")
        self.d = d
        self.T = int(T)
        self.uniforms = UniformStream(as_generator(rng))
        self.alpha_hat = [0.0] * d
        self.beta_hat = [0.0] * d
        self.tau = [0] * d
        self.p: list[Optional[float]] = [None] * d
        self.item = 0
        self.t = 0
        self.truncated = False
        self.abandoned_rounds = 0
        self.commitments: list[CommitRecord] = []
        self.phases = _PhaseLog()
        self._block: Optional[list[ItemSet]] = None
        self._obs: list[float] = []

    @property
    def exploring(self) -> bool:
        return self.item < self.d

    @property
    def exploration_rounds(self) -> int:
        return 4 * sum(self.tau) + self.abandoned_rounds

    def _update_estimates(self, k: int, da: float, db: float) -> None:
        tau = self.tau[k]
        self.alpha_hat[k] = (tau * self.alpha_hat[k] + da) / (tau + 1)
        self.beta_hat[k] = (tau * self.beta_hat[k] + db) / (tau + 1)
        self.tau[k] = tau + 1

    def _commit(self, k: int, p: float, branch: str) -> None:
        self.p[k] = p
        self.commitments.append(CommitRecord(k, self.tau[k], self.alpha_hat[k], self.beta_hat[k], p, branch))
        self.item = k + 1

    def _truncate(self) -> None:
        if self._block is not None:
            self.abandoned_rounds += len(self._obs)
            self._block, self._obs = None, []
        for k in range(self.item, self.d):
            self._commit(k, default_probability(self.alpha_hat[k], self.beta_hat[k]), "truncated")
        self.truncated = True
        log.debug("%s truncated at t=%d", type(self).__name__, self.t)

    def _new_block(self) -> list[ItemSet]:
        raise NotImplementedError

    def _finish_block(self, obs: list[float]) -> None:
        raise NotImplementedError

    def _exploit_action(self) -> ItemSet:
        raise NotImplementedError

    def step(self, channel: PullChannel) -> ItemSet:
        """Play one round and return the action."""
        if self.t >= self.T:
            raise StateError(f"horizon T={self.T} already reached")
        if self.exploring:
            if self._block is None:
                self._block = self._new_block()
            action = self._block[len(self._obs)]
            z, _ = channel.pull(action)
            self._obs.append(z)
            self.t += 1
            self.phases.add(EXPLORE, 1)
            if len(self._obs) == 4:
                obs, self._block, self._obs = self._obs, None, []
                self._finish_block(obs)
            if self.t == self.T and self.exploring:
                self._truncate()
        else:
            action = self._exploit_action()
            channel.pull(action)
            self.t += 1
            self.phases.add(EXPLOIT, 1)
        return action

    def run(self, channel: PullChannel) -> None:
        """Play every remaining round up to the horizon."""
        chunk = _FIRST_CHUNK
        current = self.item
        while self.t < self.T:
            if self.exploring:
                remaining_blocks = (self.T - self.t) // 4
                if self._block is not None or remaining_blocks == 0:
                    self.step(channel)
                    continue
                if self.item != current:
                    current, chunk = self.item, _FIRST_CHUNK
                self._explore_chunk(channel, min(chunk, remaining_blocks))
                chunk = min(2 * chunk, _MAX_CHUNK)
                if self.t == self.T and self.exploring:
                    self._truncate()
            else:
                self._exploit_chunk(channel, min(self.T - self.t, _EXPLOIT_CHUNK))

    def _explore_chunk(self, channel: PullChannel, blocks: int) -> None:
        raise NotImplementedError

    def _exploit_chunk(self, channel: PullChannel, rounds: int) -> None:
        raise NotImplementedError


class DgEtc(_EtcBase):
    """Double-Greedy Explore-then-Commit.

    Items are explored in order. Each 4-round block draws a fresh
    Double-Greedy prefix ``(X, Y)`` from the committed weights and plays
    ``X, X+i, Y, Y-i``; the two paired differences update running estimates
    of the add- and remove-gains. The item's weight is committed as soon as
    some weight has a worst-case loss below ``-g/sqrt(tau)``, or at
    ``tau_max`` blocks. Exploitation resamples the Double-Greedy set from the
    committed weights every round.
    """

    name = "dgetc"

    def __init__(self, d: int, c: float, sigma: float, delta: float, T: int, rng: RngLike = None):
        super().__init__(d, T, rng)
        self.params = ConfidenceParams(d, T, delta, sigma, c)
        self.g = g_conf(self.params)
        self.tau_max = compute_tau_max(T, d)

    def _new_block(self) -> list[ItemSet]:
        X, Y = dg_sample(self.p, self.item, self.uniforms)
        return _block_actions(X, Y, self.item)

    def _after_update(self, k: int) -> bool:
        tau = self.tau[k]
        if tau > self.tau_max:
            raise InternalConsistencyError(f"item {k} exceeded tau_max={self.tau_max}")
        p, branch = _explore_update(self.alpha_hat[k], self.beta_hat[k], tau, self.g, self.tau_max)
        if branch is None:
            return False
        self._check_commit(k, p, branch)
        self._commit(k, p, branch)
        return True

    def _check_commit(self, k: int, p: float, branch: str) -> None:
        a, b, tau = self.alpha_hat[k], self.beta_hat[k], self.tau[k]
        value = loss(a, b, p)
        if branch == "lambda":
            ok = value + self.g / math.sqrt(tau) <= SOUND_TOL
        else:
            degenerate = max(a, 0.0) + max(b, 0.0) == 0.0
            ok = value <= SOUND_TOL or (degenerate and value <= abs(a - b) / 4 + SOUND_TOL)
        if not ok:
            raise InternalConsistencyError(f"unsound {branch} commitment for item {k}: loss={value}")

    def _finish_block(self, obs: list[float]) -> None:
        k = self.item
        self._update_estimates(k, obs[1] - obs[0], obs[3] - obs[2])
        self._after_update(k)

    def _exploit_action(self) -> ItemSet:
        return dg_sample(self.p, self.d, self.uniforms)[0]

    def _explore_chunk(self, channel: PullChannel, blocks: int) -> None:
        k, d = self.item, self.d
        blocks = min(blocks, self.tau_max - self.tau[k])
        u = self.uniforms.peek(blocks * k).reshape(blocks, k)
        take = u < np.array(self.p[:k], dtype=float)
        members = np.zeros((blocks, 4, d), dtype=bool)
        members[:, :, :k] = take[:, None, :]
        members[:, 1, k] = True
        members[:, 2, k:] = True
        members[:, 3, k + 1 :] = True
        members = members.reshape(4 * blocks, d)
        z = channel.preview(members)
        da = (z[1::4] - z[0::4]).tolist()
        db = (z[3::4] - z[2::4]).tolist()
        used = blocks
        for j in range(blocks):
            self._update_estimates(k, da[j], db[j])
            if self._after_update(k):
                used = j + 1
                break
        pulled = channel.pull_many(members[: 4 * used])
        if not np.array_equal(pulled, z[: 4 * used]):
            raise InternalConsistencyError("environment replay diverged from preview")
        self.uniforms.consume(used * k)
        self.t += 4 * used
        self.phases.add(EXPLORE, 4 * used)

    def _exploit_chunk(self, channel: PullChannel, rounds: int) -> None:
        u = self.uniforms.random(rounds * self.d).reshape(rounds, self.d)
        channel.pull_many(u < np.array(self.p, dtype=float))
        self.t += rounds
        self.phases.add(EXPLOIT, rounds)


def rgl_blocks(T: int) -> int:
    """Per-item block budget of RGL, ``ceil(T^(2/3) log(T)^(1/3))`` and at least 1."""
    return max(1, math.ceil(T ** (2.0 / 3.0) * math.log(T) ** (1.0 / 3.0)))


class Rgl(_EtcBase):
    """Randomized Greedy Learning: a fixed budget of blocks per item.

    Unlike :class:`DgEtc` the prefix is a single realised set pair: after an
    item's estimates are complete its Bernoulli draw is made once, and the
    final set is played for the rest of the horizon.
    """

    name = "rgl"

    def __init__(self, d: int, T: int, rng: RngLike = None):
        super().__init__(d, T, rng)
        self.m = rgl_blocks(T)
        self.X = ItemSet.empty(d)
        self.Y = ItemSet.full(d)

    def _new_block(self) -> list[ItemSet]:
        return _block_actions(self.X, self.Y, self.item)

    def _close_item(self, k: int) -> None:
        p = default_probability(self.alpha_hat[k], self.beta_hat[k])
        self._commit(k, p, "cap")
        if self.uniforms.random(1)[0] < p:
            self.X = self.X.add(k)
        else:
            self.Y = self.Y.remove(k)

    def _finish_block(self, obs: list[float]) -> None:
        k = self.item
        self._update_estimates(k, obs[1] - obs[0], obs[3] - obs[2])
        if self.tau[k] == self.m:
            self._close_item(k)

    def _exploit_action(self) -> ItemSet:
        return self.X

    def _explore_chunk(self, channel: PullChannel, blocks: int) -> None:
        k = self.item
        blocks = min(blocks, self.m - self.tau[k])
        actions = np.array([A.to_mask() for A in _block_actions(self.X, self.Y, k)])
        z = channel.pull_many(np.tile(actions, (blocks, 1)))
        da = (z[1::4] - z[0::4]).tolist()
        db = (z[3::4] - z[2::4]).tolist()
        for j in range(blocks):
            self._update_estimates(k, da[j], db[j])
        self.t += 4 * blocks
        self.phases.add(EXPLORE, 4 * blocks)
        if self.tau[k] == self.m:
            self._close_item(k)

    def _exploit_chunk(self, channel: PullChannel, rounds: int) -> None:
        channel.pull_many(np.tile(self.X.to_mask(), (rounds, 1)))
        self.t += rounds
        self.phases.add(EXPLOIT, rounds)


# ---------------------------------------------------------------------------
# drivers

def dgetc_applicable(d: int, T: int) -> bool:
    """Horizon condition ``d (T sqrt(log dT))^(2/3) <= T/2`` under which the regret bounds hold."""
    return d * (T * math.sqrt(math.log(d * T))) ** (2.0 / 3.0) <= T / 2


def _policy_rng(rng: RngLike) -> RngLike:
    return RngStream(0).child(POLICY_KEY) if rng is None else rng


def _trace(env: Environment, start: int, alg: _EtcBase, opt_value: Optional[float]) -> RegretTrace:
    members, values, observed = env.history()
    return compute_regret(
        members[start:],
        env.f,
        opt_value,
        values=values[start:],
        observed=observed[start:],
        phase=alg.phases.array(),
        truncated=alg.truncated,
        commitments=alg.commitments,
    )


def run_dgetc(
    env: Environment,
    c: float,
    sigma: float,
    delta: float,
    T: int,
    rng: RngLike = None,
    opt_value: Optional[float] = None,
) -> RegretTrace:
    """Run DG-ETC for exactly ``T`` rounds and return the regret trace."""
    if not dgetc_applicable(env.d, T):
        warnings.warn(f"horizon T={T} is short for d={env.d}; regret guarantees do not apply", stacklevel=2)
    start = env.t
    alg = DgEtc(env.d, c, sigma, delta, T, _policy_rng(rng))
    alg.run(env.channel())
    return _trace(env, start, alg, opt_value)


def run_rgl(
    env: Environment,
    c: float,
    sigma: float,
    T: int,
    rng: RngLike = None,
    opt_value: Optional[float] = None,
) -> RegretTrace:
    """Run RGL for exactly ``T`` rounds; ``c`` and ``sigma`` do not affect its schedule."""
    if env.d * 4 * rgl_blocks(T) > T:
        log.info("RGL budget exceeds T=%d; final items will be truncated", T)
    start = env.t
    alg = Rgl(env.d, T, _policy_rng(rng))
    alg.run(env.channel())
    return _trace(env, start, alg, opt_value)
