"""Closed-form quantities used by the exploration rule.

All functions are pure and operate on Python floats; the few that have an
``_array`` twin accept numpy arrays elementwise. Logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError

INF = math.inf

# sums alpha + beta below -ZONE_TOL are treated as outside the submodular regime
ZONE_TOL = 1e-12


class LossArgs(NamedTuple):
    alpha: float
    beta: float
    p: float


@dataclass(frozen=True)
class ConfidenceParams:
    d: int
    T: float
    delta: float
    sigma: float
    c: float

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"d must be >= 1, got {self.d}")
        if self.T < 1:
            raise ParameterError(f"T must be >= 1, got {self.T}")
        if not 0 < self.delta <= 1:
            raise ParameterError(f"delta must lie in (0, 1], got {self.delta}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.c <= 0:
            raise ParameterError(f"c must be > 0, got {self.c}")


@dataclass(frozen=True)
class FeasibleInterval:
    empty: bool
    lo: float = math.nan
    hi: float = math.nan

    def __contains__(self, x: float) -> bool:
        return not self.empty and self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo


EMPTY = FeasibleInterval(True)


def loss_plus(alpha: float, beta: float, p: float) -> float:
    """Per-round loss of Bernoulli weight ``p`` when the item belongs to the optimum."""
    return (1.0 - p) * alpha - 0.5 * (p * alpha + (1.0 - p) * beta)


def loss_minus(alpha: float, beta: float, p: float) -> float:
    """Per-round loss of Bernoulli weight ``p`` when the item is outside the optimum."""
    return p * beta - 0.5 * (p * alpha + (1.0 - p) * beta)


def loss(alpha: float, beta: float, p: float) -> float:
    return max(loss_plus(alpha, beta, p), loss_minus(alpha, beta, p))


def loss_coefficients(alpha: float, beta: float) -> tuple[float, float, float, float]:
    """Intercepts and slopes ``(a0, a1, b0, b1)`` with ``loss_plus = a0 + a1*p``, ``loss_minus = b0 + b1*p``."""
    return (alpha - 0.5 * beta, 0.5 * beta - 1.5 * alpha, -0.5 * beta, 1.5 * beta - 0.5 * alpha)


def _check_log_arg(T: float, d: int) -> float:
    dT = d * T
    if dT < 2:
        raise ParameterError(f"need d*T >= 2 for a positive log(dT), got d={d}, T={T}")
    return math.log(dT)


def tau_max(T: int, d: int) -> int:
    """Per-item cap on estimation blocks, ``ceil(T^(2/3) * log(dT)^(1/3))``."""
    log_dT = _check_log_arg(T, d)
    return math.ceil(T ** (2.0 / 3.0) * log_dT ** (1.0 / 3.0))


def g_conf(params: ConfidenceParams) -> float:
    """Confidence radius aggregating noise, sampling and estimation error.

    The per-round exploitation error for an item explored over ``tau`` blocks is
    bounded by ``g_conf(params) / sqrt(tau)`` with high probability.
    """
    d, T, delta, sigma, c = params.d, params.T, params.delta, params.sigma, params.c
    log_dT = _check_log_arg(T, d)
    scale = 2.0 * sigma**2 + c**2
    lead = math.sqrt(2.0 * scale) * math.sqrt(2.0 * log_dT + math.log(1.0 / delta))
    correction = 1.0 + 2.0 * math.sqrt(log_dT / T) + 9.0 * c / math.sqrt(scale) * (log_dT / T) ** (1.0 / 3.0)
    return lead * correction


def gamma_conf(params: ConfidenceParams) -> float:
    """Estimation slack entering the sufficient-exploration thresholds."""
    d, T, delta, sigma, c = params.d, params.T, params.delta, params.sigma, params.c
    return 3.0 * math.sqrt((2.0 * sigma**2 + c**2) * (math.log(d * T / delta) + math.log(1.0 + T)))


def _halfline(slope: float, rhs: float) -> tuple[float, float]:
    """Solution set of ``slope * x <= rhs`` as ``(lo, hi)``; ``lo > hi`` when empty."""
    if slope > 0.0:
        return -INF, rhs / slope
    if slope < 0.0:
        return rhs / slope, INF
    return (-INF, INF) if rhs >= 0.0 else (INF, -INF)


def interval_bounds(alpha: float, beta: float, threshold: float) -> tuple[float, float]:
    """Raw bounds of ``{x in [0, 1] : loss(alpha, beta, x) <= -threshold}``; empty iff ``lo > hi``."""
    a0, a1, b0, b1 = loss_coefficients(alpha, beta)
    lo_a, hi_a = _halfline(a1, -threshold - a0)
    lo_b, hi_b = _halfline(b1, -threshold - b0)
    return max(0.0, lo_a, lo_b), min(1.0, hi_a, hi_b)


def feasible_interval(alpha: float, beta: float, threshold: float) -> FeasibleInterval:
    """Weights ``x`` in [0, 1] whose worst-case loss absorbs ``threshold``.

    Both loss branches are affine in ``x``, so the set is a closed interval
    (possibly empty) obtained from two linear inequalities.
    """
    if threshold < 0:
        raise ParameterError(f"threshold must be >= 0, got {threshold}")
    lo, hi = interval_bounds(alpha, beta, threshold)
    if lo > hi:
        return EMPTY
    return FeasibleInterval(False, lo + 0.0, hi + 0.0)  # drop signed zeros


def argmin_on_bounds(alpha: float, beta: float, lo: float, hi: float) -> tuple[float, float]:
    a0, a1, b0, b1 = loss_coefficients(alpha, beta)
    candidates = [lo, hi]
    if a1 != b1:
        cross = (b0 - a0) / (a1 - b1)
        if lo < cross < hi:
            candidates.append(cross)
    candidates.sort()
    best_p, best_v = lo, loss(alpha, beta, lo)
    for x in candidates[1:]:
        v = loss(alpha, beta, x)
        if v < best_v:
            best_p, best_v = x, v
    return best_p, best_v


def argmin_loss_on_interval(alpha: float, beta: float, iv: FeasibleInterval) -> tuple[float, float]:
    """Minimise ``loss(alpha, beta, .)`` over a non-empty interval.

    The loss is a maximum of two affine functions, so the minimum is attained
    at an endpoint or at the crossing point of the branches. Ties go to the
    smallest weight.
    """
    if iv.empty:
        raise ParameterError("cannot minimise over an empty interval")
    return argmin_on_bounds(alpha, beta, iv.lo, iv.hi)


def default_probability(alpha: float, beta: float) -> float:
    """Double-Greedy weight ``alpha+ / (alpha+ + beta+)``, and 1/2 when both parts vanish."""
    a = alpha if alpha > 0.0 else 0.0
    b = beta if beta > 0.0 else 0.0
    if a + b == 0.0:
        return 0.5
    return a / (a + b)


def default_probability_array(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    a = np.maximum(alpha, 0.0)
    b = np.maximum(beta, 0.0)
    s = a + b
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s == 0.0, 0.5, a / s)


def _inv_sq(x: float) -> float:
    sq = x * x
    return INF if sq == 0.0 else 1.0 / sq


def _ratio(a: float, b: float) -> float:
    """``(a+b)^2 / (b-a)^4``, ``inf`` when the denominator vanishes or underflows."""
    den = (b - a) ** 4
    return INF if den == 0.0 else (a + b) ** 2 / den


def zone_threshold(alpha_bar: float, beta_bar: float) -> float:
    """Sufficient value of ``tau / (g + gamma)^2`` for a loss-absorbing weight to exist.

    Piecewise over five zones of the (alpha, beta) plane. Zones are taken
    closed and the smallest value wins where they overlap. Returns ``inf``
    when the sum of the gains is negative or a denominator vanishes.
    """
    a, b = alpha_bar, beta_bar
    if a + b < -ZONE_TOL:
        return INF
    best = INF
    if a <= 0.0 and b >= 0.0:
        best = min(best, _inv_sq(b))
    if 0.0 <= a and 3.0 * a <= b:
        best = min(best, _inv_sq(b - 2.0 * a))
    if 0.0 <= b <= 3.0 * a and a <= 3.0 * b:
        best = min(best, _ratio(a, b))
    if 0.0 <= b and 3.0 * b <= a:
        best = min(best, _inv_sq(a - 2.0 * b))
    if a >= 0.0 and b <= 0.0:
        best = min(best, _inv_sq(a))
    return best


def zone_threshold_array(alpha_bar: np.ndarray, beta_bar: np.ndarray) -> np.ndarray:
    """Elementwise :func:`zone_threshold`."""
    a = np.asarray(alpha_bar, dtype=float)
    b = np.asarray(beta_bar, dtype=float)
    out = np.full(np.broadcast(a, b).shape, INF)

    def inv_sq(x):
        sq = x * x
        return np.where(sq == 0.0, INF, 1.0 / np.where(sq == 0.0, 1.0, sq))

    ok = a + b >= -ZONE_TOL
    zones = [
        (ok & (a <= 0.0) & (b >= 0.0), inv_sq(b)),
        (ok & (0.0 <= a) & (3.0 * a <= b), inv_sq(b - 2.0 * a)),
        (ok & (0.0 <= b) & (b <= 3.0 * a) & (a <= 3.0 * b), _ratio_array(a, b)),
        (ok & (0.0 <= b) & (3.0 * b <= a), inv_sq(a - 2.0 * b)),
        (ok & (a >= 0.0) & (b <= 0.0), inv_sq(a)),
    ]
    for mask, value in zones:
        out = np.where(mask, np.minimum(out, value), out)
    return out


def _ratio_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    den = (b - a) ** 4
    safe = np.where(den == 0.0, 1.0, den)
    return np.where(den == 0.0, INF, (a + b) ** 2 / safe)


def hardness_ratio(alpha: float, beta: float) -> float:
    """``(a+ + b+)^2 / (a+ - b+)^4`` with ``inf`` whenever the positive parts coincide."""
    a = max(alpha, 0.0)
    b = max(beta, 0.0)
    return _ratio(a, b)


def hardness_ratio_array(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return _ratio_array(np.maximum(alpha, 0.0), np.maximum(beta, 0.0))
