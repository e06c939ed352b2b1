"""Bounded set functions, concrete families, exact oracles and structural checks.

Every function is evaluated in batches through :meth:`SetFunction.batch`, which
takes an ``(n, d)`` boolean membership matrix. Row results never depend on the
batch they are evaluated in, so a set scores identically whether it is
evaluated alone or among a million others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import coremath
from .errors import CapacityError, DomainError, InternalConsistencyError, ParameterError
from .itemset import ItemSet, as_itemset, masks_to_members

TOL = 1e-9

MAX_TABLE_D = 25
MAX_OPTIMUM_D = 25
MAX_SUBMODULAR_D = 12
MAX_HARDNESS_D = 20
MAX_EXHAUSTIVE_RANGE_D = 12

_CHUNK = 1 << 16


class SetFunction:
    """A real-valued function on subsets of ``range(d)`` with declared range ``[0, c]``.

    Subclasses override :meth:`batch` (vectorised) or :meth:`_scalar` (one set
    at a time); the other is derived.
    """

    def __init__(self, d: int, c: float):
        if d < 1:
            raise ParameterError(f"d must be >= 1, got {d}")
        if c < 0:
            raise ParameterError(f"c must be >= 0, got {c}")
        self.d = int(d)
        self.c = float(c)
        self._table: Optional[np.ndarray] = None

    def _scalar(self, A: ItemSet) -> float:
        raise NotImplementedError

    def batch(self, members: np.ndarray) -> np.ndarray:
        members = self._check_members(members)
        return np.array([self._scalar(ItemSet.from_mask(row)) for row in members], dtype=float)

    def batch_masks(self, masks: np.ndarray) -> np.ndarray:
        if self.d > 63:
            raise CapacityError("integer masks only support d <= 63")
        return self.batch(masks_to_members(masks, self.d))

    def __call__(self, A) -> float:
        A = as_itemset(A, self.d)
        return float(self.batch(A.to_mask()[None, :])[0])

    def _check_members(self, members: np.ndarray) -> np.ndarray:
        members = np.asarray(members, dtype=bool)
        if members.ndim != 2 or members.shape[1] != self.d:
            raise DomainError(f"membership matrix has shape {members.shape}, expected (n, {self.d})")
        return members

    def table(self) -> np.ndarray:
        """Values of all ``2^d`` subsets indexed by bit mask (cached)."""
        if self._table is None:
            if self.d > MAX_TABLE_D:
                raise CapacityError(f"cannot tabulate d={self.d} > {MAX_TABLE_D}")
            n = 1 << self.d
            out = np.empty(n)
            for start in range(0, n, _CHUNK):
                masks = np.arange(start, min(n, start + _CHUNK), dtype=np.int64)
                out[start : start + masks.size] = self.batch_masks(masks)
            self._table = out
        return self._table


def evaluate(f: SetFunction, A) -> float:
    """``f(A)``; raises :class:`DomainError` when ``A`` has items outside ``range(f.d)``."""
    return f(A)


@dataclass(frozen=True)
class ExampleFamilyParams:
    xi: tuple[float, ...]
    nu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        if not self.xi:
            raise ParameterError("xi must contain at least one item")
        if any(not -1.0 <= x <= 1.0 for x in self.xi):
            raise ParameterError(f"every xi must lie in [-1, 1], got {self.xi}")
        if not 0.0 < self.nu <= 1.0:
            raise ParameterError(f"nu must lie in (0, 1], got {self.nu}")


class ExampleFamily(SetFunction):
    """``g(X) = (sum of positive xi in X)^nu - (sum of |negative xi| in X)^(1/nu) + ||xi_-||_1^(1/nu)``.

    Submodular for every valid parameter choice; modular when ``nu == 1``.
    """

    def __init__(self, params: ExampleFamilyParams):
        self.params = params
        xi = np.asarray(params.xi)
        self._xi = xi
        self._pos = [(j, xi[j]) for j in range(xi.size) if xi[j] >= 0.0]
        self._neg = [(j, -xi[j]) for j in range(xi.size) if xi[j] < 0.0]
        self._offset = self._neg_part(np.ones((1, xi.size), dtype=bool))[0] ** (1.0 / params.nu)
        c = self._pos_part(np.ones((1, xi.size), dtype=bool))[0] ** params.nu + self._offset
        super().__init__(xi.size, c)

    @staticmethod
    def _accumulate(members: np.ndarray, terms) -> np.ndarray:
        # fixed column order keeps each row's sum independent of the batch
        total = np.zeros(members.shape[0])
        for j, w in terms:
            total += np.where(members[:, j], w, 0.0)
        return total

    def _pos_part(self, members):
        return self._accumulate(members, self._pos)

    def _neg_part(self, members):
        return self._accumulate(members, self._neg)

    def batch(self, members: np.ndarray) -> np.ndarray:
        members = self._check_members(members)
        nu = self.params.nu
        return self._pos_part(members) ** nu - self._neg_part(members) ** (1.0 / nu) + self._offset


def make_example_family(params: ExampleFamilyParams) -> ExampleFamily:
    return ExampleFamily(params)


class TableFunction(SetFunction):
    """A set function given by its ``2^d`` values, indexed by bit mask."""

    def __init__(self, values: Sequence[float], c: Optional[float] = None):
        values = np.asarray(values, dtype=float)
        d = int(round(math.log2(values.size))) if values.size else 0
        if values.ndim != 1 or values.size != 1 << d or d < 1:
            raise ParameterError(f"table length must be 2^d with d >= 1, got {values.size}")
        if d > MAX_TABLE_D:
            raise CapacityError(f"table functions support d <= {MAX_TABLE_D}")
        super().__init__(d, float(values.max()) if c is None else c)
        self._table = values.copy()
        self._weights = np.left_shift(np.int64(1), np.arange(d, dtype=np.int64))

    def batch(self, members: np.ndarray) -> np.ndarray:
        members = self._check_members(members)
        return self._table[members.astype(np.int64) @ self._weights]


class CallableFunction(SetFunction):
    """Wraps ``fn(A: ItemSet) -> float``."""

    def __init__(self, d: int, c: float, fn: Callable[[ItemSet], float]):
        super().__init__(d, c)
        self._fn = fn

    def _scalar(self, A: ItemSet) -> float:
        return float(self._fn(A))


class CutFunction(SetFunction):
    """Weighted cut of an undirected graph, ``sum of w_ij over i in A, j not in A``.

    A standard non-monotone submodular function. Declared range is the total
    edge weight.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ParameterError("cut weights must be a square matrix")
        if (w < 0).any() or not np.allclose(w, w.T):
            raise ParameterError("cut weights must be symmetric and non-negative")
        self.weights = w
        super().__init__(w.shape[0], float(np.triu(w, 1).sum()))

    def batch(self, members: np.ndarray) -> np.ndarray:
        members = self._check_members(members)
        total = np.zeros(members.shape[0])
        d = self.d
        for i in range(d):
            for j in range(i + 1, d):
                if self.weights[i, j] != 0.0:
                    total += np.where(members[:, i] != members[:, j], self.weights[i, j], 0.0)
        return total


class PermutedFunction(SetFunction):
    """Relabels items: item ``k`` of this function is item ``perm[k]`` of ``base``."""

    def __init__(self, base: SetFunction, perm: Sequence[int]):
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(base.d)):
            raise ParameterError(f"{perm.tolist()} is not a permutation of range({base.d})")
        super().__init__(base.d, base.c)
        self.base = base
        self.perm = perm
        self._inverse = np.argsort(perm)

    def batch(self, members: np.ndarray) -> np.ndarray:
        members = self._check_members(members)
        return self.base.batch(members[:, self._inverse])


@dataclass(frozen=True)
class FunctionDescriptor:
    """Serializable recipe for a set function.

    ``family`` is one of ``example`` (needs ``xi``, optional ``nu``), ``table``
    (needs ``values``) or ``cut`` (needs ``weights``). ``permutation``
    reorders items before any algorithm sees them.
    """

    family: str = "example"
    xi: Optional[tuple[float, ...]] = None
    nu: float = 1.0
    values: Optional[tuple[float, ...]] = None
    weights: Optional[tuple[tuple[float, ...], ...]] = None
    c: Optional[float] = None
    permutation: Optional[tuple[int, ...]] = None
    name: str = ""

    def build(self) -> SetFunction:
        if self.family == "example":
            if self.xi is None:
                raise ParameterError("example family needs 'xi'")
            f: SetFunction = ExampleFamily(ExampleFamilyParams(tuple(self.xi), self.nu))
        elif self.family == "table":
            if self.values is None:
                raise ParameterError("table family needs 'values'")
            f = TableFunction(self.values, c=self.c)
        elif self.family == "cut":
            if self.weights is None:
                raise ParameterError("cut family needs 'weights'")
            f = CutFunction(self.weights)
        else:
            raise ParameterError(f"unknown function family {self.family!r}")
        if self.c is not None and self.family != "table":
            f.c = float(self.c)
        if self.permutation is not None:
            f = PermutedFunction(f, self.permutation)
        return f

    def to_dict(self) -> dict:
        out: dict = {"family": self.family}
        if self.name:
            out["name"] = self.name
        if self.xi is not None:
            out["xi"] = list(self.xi)
            out["nu"] = self.nu
        if self.values is not None:
            out["values"] = list(self.values)
        if self.weights is not None:
            out["weights"] = [list(r) for r in self.weights]
        if self.c is not None:
            out["c"] = self.c
        if self.permutation is not None:
            out["permutation"] = list(self.permutation)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> FunctionDescriptor:
        known = {"family", "xi", "nu", "values", "weights", "c", "permutation", "name"}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown function descriptor keys: {sorted(unknown)}")
        return cls(
            family=data.get("family", "example"),
            xi=None if data.get("xi") is None else tuple(float(x) for x in data["xi"]),
            nu=float(data.get("nu", 1.0)),
            values=None if data.get("values") is None else tuple(float(v) for v in data["values"]),
            weights=None if data.get("weights") is None else tuple(tuple(float(v) for v in r) for r in data["weights"]),
            c=None if data.get("c") is None else float(data["c"]),
            permutation=None if data.get("permutation") is None else tuple(int(k) for k in data["permutation"]),
            name=str(data.get("name", "")),
        )


# ---------------------------------------------------------------------------
# marginal gains

def _prefix_subset(X, i: int, d: int) -> ItemSet:
    X = as_itemset(X, d)
    if not 0 <= i < d:
        raise DomainError(f"item {i} outside ground set of size {d}")
    if X.bits >> i:
        raise DomainError(f"X={X} must only contain items below {i}")
    return X


def marginal_alpha(f: SetFunction, i: int, X) -> float:
    """Gain of adding item ``i`` to ``X``, where ``X`` only holds items below ``i``."""
    X = _prefix_subset(X, i, f.d)
    return f(X.add(i)) - f(X)


def marginal_beta(f: SetFunction, i: int, X) -> float:
    """Gain of removing item ``i`` from ``X | {i, ..., d-1}``."""
    X = _prefix_subset(X, i, f.d)
    Y = ItemSet(X.bits | (((1 << f.d) - 1) >> i << i), f.d)
    return f(Y.remove(i)) - f(Y)


def _prefix_gains(table: np.ndarray, d: int, i: int) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) of item ``i`` for every X below ``i``, indexed by X's mask."""
    X = np.arange(1 << i, dtype=np.int64)
    bit = 1 << i
    above = ((1 << d) - 1) >> (i + 1) << (i + 1)
    alpha = table[X | bit] - table[X]
    beta = table[X | above] - table[X | above | bit]
    return alpha, beta


# ---------------------------------------------------------------------------
# exact oracles

def brute_force_optimum(f: SetFunction) -> tuple[ItemSet, float]:
    """Maximiser over all ``2^d`` sets; ties go to the smallest bit mask."""
    if f.d > MAX_OPTIMUM_D:
        raise CapacityError(f"brute force limited to d <= {MAX_OPTIMUM_D}, got {f.d}")
    table = f.table()
    k = int(np.argmax(table))
    return ItemSet(k, f.d), float(table[k])


def validate_range(f: SetFunction, tol: float = TOL, samples: int = 10_000, seed: int = 0) -> bool:
    """Whether every value lies in ``[0, c]`` (exhaustive for small ``d``, sampled otherwise)."""
    if f.d <= MAX_EXHAUSTIVE_RANGE_D:
        values = f.table()
    else:
        gen = np.random.default_rng(seed)
        values = f.batch(gen.random((samples, f.d)) < 0.5)
    return bool(values.min() >= -tol and values.max() <= f.c + tol)


def submodularity_violation(f: SetFunction, tol: float = TOL):
    """First witness ``(A, B, i)`` with ``A <= B``, ``i not in B`` and increasing gains, else ``None``."""
    if f.d > MAX_SUBMODULAR_D:
        raise CapacityError(f"exhaustive check limited to d <= {MAX_SUBMODULAR_D}, got {f.d}")
    d, v = f.d, f.table()
    n = 1 << d
    masks = np.arange(n, dtype=np.int64)
    bits = np.left_shift(np.int64(1), np.arange(d, dtype=np.int64))
    # gains[i, S] = f(S + i) - f(S)
    gains = v[masks[None, :] | bits[:, None]] - v[masks[None, :]]
    absent = (masks[None, :] & bits[:, None]) == 0
    for A in range(n):
        supersets = (masks & A) == A
        cand = absent & supersets[None, :]
        bad = cand & (gains > gains[:, A][:, None] + tol)
        bad &= absent[:, A][:, None]
        if bad.any():
            i, B = np.argwhere(bad)[0]
            return ItemSet(A, d), ItemSet(int(B), d), int(i)
    return None


def lattice_violation(f: SetFunction, tol: float = TOL):
    """First pair ``(A, B)`` with ``f(A|B) + f(A&B) > f(A) + f(B)``, else ``None``."""
    if f.d > MAX_SUBMODULAR_D:
        raise CapacityError(f"exhaustive check limited to d <= {MAX_SUBMODULAR_D}, got {f.d}")
    d, v = f.d, f.table()
    masks = np.arange(1 << d, dtype=np.int64)
    for A in range(1 << d):
        excess = v[A | masks] + v[A & masks] - v[A] - v[masks]
        bad = np.flatnonzero(excess > tol)
        if bad.size:
            return ItemSet(A, d), ItemSet(int(bad[0]), d)
    return None


def check_submodular(f: SetFunction, tol: float = TOL) -> bool:
    """Exhaustive diminishing-returns check, cross-checked against the lattice form."""
    by_gains = submodularity_violation(f, tol) is None
    by_lattice = lattice_violation(f, tol) is None
    if by_gains != by_lattice:
        raise InternalConsistencyError(
            f"submodularity characterizations disagree (gains: {by_gains}, lattice: {by_lattice})"
        )
    return by_gains


def min_marginal_sum(f: SetFunction) -> float:
    """Smallest ``alpha + beta`` over every item ``i`` and every ``X`` below ``i``.

    Non-negative for submodular functions.
    """
    if f.d > MAX_HARDNESS_D:
        raise CapacityError(f"exhaustive scan limited to d <= {MAX_HARDNESS_D}, got {f.d}")
    table = f.table()
    worst = math.inf
    for i in range(f.d):
        alpha, beta = _prefix_gains(table, f.d, i)
        worst = min(worst, float((alpha + beta).min()))
    return worst


# ---------------------------------------------------------------------------
# hardness

@dataclass(frozen=True)
class HardnessReport:
    per_item: tuple[float, ...]
    total: float
    gaps: tuple[float, ...]
    zone: tuple[float, ...] = field(default=())

    @classmethod
    def from_per_item(cls, per_item: Sequence[float], zone: Sequence[float] = ()) -> HardnessReport:
        per_item = tuple(float(h) for h in per_item)
        gaps = tuple(0.0 if math.isinf(h) else h**-0.5 for h in per_item)
        total = math.inf if any(math.isinf(h) for h in per_item) else math.fsum(per_item)
        return cls(per_item, total, gaps, tuple(float(z) for z in zone))

    def to_csv(self) -> str:
        lines = ["item,h,gap" + (",zone" if self.zone else "")]
        for i, (h, gap) in enumerate(zip(self.per_item, self.gaps)):
            row = f"{i},{_fmt(h)},{_fmt(gap)}"
            if self.zone:
                row += f",{_fmt(self.zone[i])}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def compute_hardness(f: SetFunction) -> HardnessReport:
    """Per-item and global DG-hardness by enumerating every prefix set.

    ``zone`` holds the tighter per-zone exploration thresholds maximised the
    same way, for comparison.
    """
    if f.d > MAX_HARDNESS_D:
        raise CapacityError(f"exact hardness limited to d <= {MAX_HARDNESS_D}, got {f.d}")
    table = f.table()
    per_item, zone = [], []
    for i in range(f.d):
        alpha, beta = _prefix_gains(table, f.d, i)
        per_item.append(float(coremath.hardness_ratio_array(alpha, beta).max()))
        zone.append(float(coremath.zone_threshold_array(alpha, beta).max()))
    return HardnessReport.from_per_item(per_item, zone)


def closed_form_gaps_example(params: ExampleFamilyParams) -> list[float]:
    """Gaps of the example family: add-gain along the prefix for non-negative
    weights, remove-gain along the suffix for negative ones."""
    g = ExampleFamily(params)
    d = g.d
    gaps = []
    for i, x in enumerate(params.xi):
        if x >= 0.0:
            gaps.append(g(range(i + 1)) - g(range(i)))
        else:
            gaps.append(g(range(i + 1, d)) - g(range(i, d)))
    return gaps
