"""Immutable subsets of the ground set ``{0, ..., d-1}`` stored as bit masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ItemSet:
    """A subset of ``range(d)``.

    Bit ``i`` of ``bits`` is set iff item ``i`` belongs to the set. Python
    integers are unbounded, so any ``d`` is accepted; the exact oracles in
    :mod:`dgetc.setfn` impose their own limits.
    """

    bits: int
    d: int

    def __post_init__(self):
        if self.d < 0:
            raise DomainError(f"negative ground-set size {self.d}")
        if self.bits < 0 or self.bits >> self.d:
            raise DomainError(f"bits {self.bits:#x} reference items >= d={self.d}")

    @classmethod
    def empty(cls, d: int) -> ItemSet:
        return cls(0, d)

    @classmethod
    def full(cls, d: int) -> ItemSet:
        return cls((1 << d) - 1, d)

    @classmethod
    def of(cls, items: Iterable[int], d: int) -> ItemSet:
        bits = 0
        for i in items:
            i = int(i)
            if not 0 <= i < d:
                raise DomainError(f"item {i} outside ground set of size {d}")
            bits |= 1 << i
        return cls(bits, d)

    @classmethod
    def from_mask(cls, row: np.ndarray) -> ItemSet:
        """Build from a boolean membership vector of length ``d``."""
        row = np.asarray(row, dtype=bool)
        return cls.of(np.flatnonzero(row), row.shape[0])

    def _check(self, i: int) -> int:
        if not 0 <= i < self.d:
            raise DomainError(f"item {i} outside ground set of size {self.d}")
        return i

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.d and bool(self.bits >> i & 1)

    def __iter__(self) -> Iterator[int]:
        bits, i = self.bits, 0
        while bits:
            if bits & 1:
                yield i
            bits >>= 1
            i += 1

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def add(self, i: int) -> ItemSet:
        return ItemSet(self.bits | 1 << self._check(i), self.d)

    def remove(self, i: int) -> ItemSet:
        return ItemSet(self.bits & ~(1 << self._check(i)), self.d)

    def _same_ground(self, other: ItemSet) -> None:
        if other.d != self.d:
            raise DomainError(f"ground sets differ: {self.d} vs {other.d}")

    def __or__(self, other: ItemSet) -> ItemSet:
        self._same_ground(other)
        return ItemSet(self.bits | other.bits, self.d)

    def __and__(self, other: ItemSet) -> ItemSet:
        self._same_ground(other)
        return ItemSet(self.bits & other.bits, self.d)

    def __sub__(self, other: ItemSet) -> ItemSet:
        self._same_ground(other)
        return ItemSet(self.bits & ~other.bits, self.d)

    def complement(self) -> ItemSet:
        return ItemSet(((1 << self.d) - 1) & ~self.bits, self.d)

    def issubset(self, other: ItemSet) -> bool:
        self._same_ground(other)
        return self.bits & ~other.bits == 0

    def to_mask(self) -> np.ndarray:
        row = np.zeros(self.d, dtype=bool)
        row[list(self)] = True
        return row

    def bitstring(self) -> str:
        """Membership as ``'0'``/``'1'`` characters, item 0 first."""
        return "".join("1" if i in self else "0" for i in range(self.d))

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self)) + "}"


def as_itemset(A, d: int) -> ItemSet:
    """Coerce an ItemSet, boolean vector or iterable of items to an ItemSet over ``d`` items."""
    if isinstance(A, ItemSet):
        if A.bits >> d:
            raise DomainError(f"set {A} references items >= d={d}")
        return A if A.d == d else ItemSet(A.bits, d)
    if isinstance(A, np.ndarray) and A.dtype == bool:
        if A.shape != (d,):
            raise DomainError(f"membership vector has shape {A.shape}, expected ({d},)")
        return ItemSet.from_mask(A)
    return ItemSet.of(A, d)


def masks_to_members(masks: np.ndarray, d: int) -> np.ndarray:
    """Expand integer bit masks (``d <= 63``) into an ``(n, d)`` boolean matrix."""
    masks = np.asarray(masks, dtype=np.int64)
    return (masks[:, None] >> np.arange(d, dtype=np.int64)) & 1 == 1


def members_to_masks(members: np.ndarray) -> np.ndarray:
    """Inverse of :func:`masks_to_members`."""
    members = np.asarray(members, dtype=bool)
    weights = np.left_shift(np.int64(1), np.arange(members.shape[1], dtype=np.int64))
    return members.astype(np.int64) @ weights
