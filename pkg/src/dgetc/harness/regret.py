"""Half-approximate pseudo-regret traces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ConfigError
from ..setfn import MAX_OPTIMUM_D, SetFunction, brute_force_optimum

EXPLORE = 0
EXPLOIT = 1
PHASE_NAMES = {EXPLORE: "explore", EXPLOIT: "exploit"}


@dataclass(frozen=True)
class CommitRecord:
    """How an item's Bernoulli weight was fixed.

    ``branch`` is ``lambda`` (loss-absorbing weight found), ``cap`` (block
    budget exhausted) or ``truncated`` (horizon ran out first).
    """

    item: int
    tau: int
    alpha_hat: float
    beta_hat: float
    p: float
    branch: str

    def to_dict(self) -> dict:
        return {
            "item": self.item,
            "tau": self.tau,
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "p": self.p,
            "branch": self.branch,
        }


@dataclass
class RegretTrace:
    actions: np.ndarray  # (T, d) bool
    values: np.ndarray  # f(A_t)
    observed: np.ndarray  # Z_t
    regret: np.ndarray  # f(A*)/2 - f(A_t)
    cumulative: np.ndarray
    opt_value: float
    phase: np.ndarray = None  # int8, EXPLORE / EXPLOIT
    truncated: bool = False
    commitments: list[CommitRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.phase is None:
            self.phase = np.full(self.values.size, EXPLOIT, dtype=np.int8)

    @property
    def T(self) -> int:
        return int(self.values.size)

    @property
    def total(self) -> float:
        """Cumulative regret after the last round (0 for an empty trace)."""
        return float(self.cumulative[-1]) if self.cumulative.size else 0.0

    @property
    def exploration_rounds(self) -> int:
        return int(np.count_nonzero(self.phase == EXPLORE))

    def exploitation_mean_regret(self) -> float:
        mask = self.phase == EXPLOIT
        return float(self.regret[mask].mean()) if mask.any() else float("nan")


def resolve_optimum(f: SetFunction, opt_value: Optional[float]) -> float:
    if opt_value is not None:
        return float(opt_value)
    if f.d > MAX_OPTIMUM_D:
        raise ConfigError(f"d={f.d} is too large for brute force; supply the optimum value")
    return brute_force_optimum(f)[1]


def compute_regret(
    actions: np.ndarray,
    f: SetFunction,
    opt_value: Optional[float] = None,
    *,
    values: Optional[np.ndarray] = None,
    observed: Optional[np.ndarray] = None,
    phase: Optional[np.ndarray] = None,
    truncated: bool = False,
    commitments: Optional[list[CommitRecord]] = None,
) -> RegretTrace:
    """Per-round ``f(A*)/2 - f(A_t)`` from noiseless values and its running sum.

    ``values`` may be passed when already known; otherwise the actions are
    evaluated. The total can be negative.
    """
    actions = np.asarray(actions, dtype=bool).reshape(-1, f.d)
    opt = resolve_optimum(f, opt_value)
    if values is None:
        values = f.batch(actions) if actions.shape[0] else np.zeros(0)
    regret = 0.5 * opt - values
    return RegretTrace(
        actions=actions,
        values=values,
        observed=values.copy() if observed is None else observed,
        regret=regret,
        cumulative=np.cumsum(regret),
        opt_value=opt,
        phase=phase,
        truncated=truncated,
        commitments=list(commitments or []),
    )
