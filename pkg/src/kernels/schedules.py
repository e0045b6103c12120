"""Reduction schedules: the exact order in which a dot product's summands are combined.

A schedule stands in for a GPU kernel's accumulation tree. ``reduce`` consumes a
``terms`` array whose axis 0 indexes summands; any trailing axes are independent
lanes (logits, batch rows) that are reduced side by side with the same order.
Parallelism is therefore over lanes only, never over summands of one reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ..errors import ScheduleError


Rounder = Callable[[np.ndarray], np.ndarray]

_UINT64 = 1 << 64


class ScheduleKind(str, Enum):
    SEQUENTIAL = "sequential"
    PAIRWISE = "pairwise"
    BLOCKED = "blocked"
    PERMUTED = "permuted"


@dataclass(frozen=True)
class ReductionSchedule:
    kind: ScheduleKind
    block_size: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind is ScheduleKind.BLOCKED:
            if not isinstance(self.block_size, int) or isinstance(self.block_size, bool) or self.block_size < 1:
                raise ScheduleError(f"blocked schedule needs block_size >= 1, got {self.block_size!r}")
        elif self.block_size is not None:
            raise ScheduleError(f"{self.kind.value} schedule takes no block_size")
        if self.kind is ScheduleKind.PERMUTED:
            if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not -(1 << 63) <= self.seed < _UINT64:
                raise ScheduleError(f"permuted schedule needs a 64-bit integer seed, got {self.seed!r}")
        elif self.seed is not None:
            raise ScheduleError(f"{self.kind.value} schedule takes no seed")

    @classmethod
    def sequential(cls) -> "ReductionSchedule":
        return cls(ScheduleKind.SEQUENTIAL)

    @classmethod
    def pairwise(cls) -> "ReductionSchedule":
        return cls(ScheduleKind.PAIRWISE)

    @classmethod
    def blocked(cls, block_size: int) -> "ReductionSchedule":
        return cls(ScheduleKind.BLOCKED, block_size=block_size)

    @classmethod
    def permuted(cls, seed: int) -> "ReductionSchedule":
        return cls(ScheduleKind.PERMUTED, seed=seed)

    @classmethod
    def parse(cls, text) -> "ReductionSchedule":
        """Parse ``sequential``, ``pairwise``, ``blocked:<n>`` or ``permuted:<seed>``."""
        if isinstance(text, ReductionSchedule):
            return text
        name, _, arg = str(text).strip().lower().partition(":")
        try:
            kind = ScheduleKind(name)
        except ValueError:
            raise ScheduleError(f"Unknown schedule '{text}'") from None
        if kind in (ScheduleKind.BLOCKED, ScheduleKind.PERMUTED):
            if not arg:
                raise ScheduleError(f"Schedule '{text}' needs a parameter, e.g. '{name}:32'")
            try:
                value = int(arg)
            except ValueError:
                raise ScheduleError(f"Schedule parameter must be an integer: '{text}'") from None
            if kind is ScheduleKind.BLOCKED:
                return cls.blocked(value)
            return cls.permuted(value)
        if arg:
            raise ScheduleError(f"Schedule '{name}' takes no parameter: '{text}'")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is ScheduleKind.BLOCKED:
            return f"blocked:{self.block_size}"
        if self.kind is ScheduleKind.PERMUTED:
            return f"permuted:{self.seed}"
        return self.kind.value

    def realized_order(self, n: int) -> np.ndarray:
        """Summand indices in the order the schedule consumes them."""
        if n < 0:
            raise ScheduleError(f"reduction length must be non-negative, got {n}")
        if self.kind is ScheduleKind.PERMUTED:
            rng = np.random.default_rng(np.random.SeedSequence(self.seed % _UINT64))
            return rng.permutation(n)
        return np.arange(n)

    def reduce(self, terms: np.ndarray, rnd: Rounder) -> np.ndarray:
        """Combine ``terms`` along axis 0, rounding every partial sum with ``rnd``."""
        if terms.shape[0] < 1:
            raise ScheduleError("cannot reduce an empty sequence of terms")
        if self.kind is ScheduleKind.SEQUENTIAL:
            return _sequential(terms, rnd)
        if self.kind is ScheduleKind.PAIRWISE:
            return _pairwise(terms, rnd)
        if self.kind is ScheduleKind.BLOCKED:
            return _blocked(terms, rnd, self.block_size)
        return _sequential(terms[self.realized_order(terms.shape[0])], rnd)


def _sequential(terms: np.ndarray, rnd: Rounder) -> np.ndarray:
    acc = terms[0]
    for k in range(1, terms.shape[0]):
        acc = rnd(acc + terms[k])
    return np.array(acc, dtype=np.float64)


def _pairwise(terms: np.ndarray, rnd: Rounder) -> np.ndarray:
    # Level-wise tree: neighbours (0,1), (2,3), ... are added; an odd tail
    # element is carried unchanged to the next level.
    level = terms
    while level.shape[0] > 1:
        n = level.shape[0]
        paired = rnd(level[0:n - 1:2] + level[1:n:2])
        if n % 2:
            paired = np.concatenate([paired, level[n - 1:]], axis=0)
        level = paired
    return np.array(level[0], dtype=np.float64)


def _blocked(terms: np.ndarray, rnd: Rounder, block_size: int) -> np.ndarray:
    n = terms.shape[0]
    full = n // block_size
    partials = []
    if full:
        blocks = terms[:full * block_size].reshape(full, block_size, *terms.shape[1:])
        acc = blocks[:, 0]
        for k in range(1, block_size):
            acc = rnd(acc + blocks[:, k])
        partials.append(acc)
    if n % block_size:
        partials.append(_sequential(terms[full * block_size:], rnd)[np.newaxis])
    # Block partials are combined left to right, tail block last
    return _sequential(np.concatenate(partials, axis=0), rnd)
