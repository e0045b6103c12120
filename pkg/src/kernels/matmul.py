"""Emulated reduced-precision matrix multiplication with explicit reduction schedules."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np

from ..errors import ConfigError, ShapeMismatchError
from ..precision.formats import PrecisionFormat, quantize, round_array
from .schedules import ReductionSchedule, Rounder


# Output logits processed per slab; per-logit reductions are independent so
# slabbing bounds memory without touching any reduction order.
_LOGIT_SLAB = 256

_UINT64 = 1 << 64


class AccumulatorPrecision(str, Enum):
    """Format that partial products and partial sums are rounded to."""

    NATIVE = "native"   # the operand format itself
    F32 = "f32"         # single-precision accumulation, result rounded to the operand format
    F64 = "f64"         # widened: exact float64 arithmetic, only the result is rounded

    def __str__(self) -> str:
        return self.value


def resolve_accumulator(widened: bool, accumulator: Optional[AccumulatorPrecision] = None) -> AccumulatorPrecision:
    if accumulator is None:
        return AccumulatorPrecision.F64 if widened else AccumulatorPrecision.NATIVE
    accumulator = AccumulatorPrecision(accumulator)
    if widened and accumulator is not AccumulatorPrecision.F64:
        raise ConfigError("accumulator", f"widened accumulation is f64, not '{accumulator.value}'")
    return accumulator


@dataclass(frozen=True)
class MatmulSpec:
    d_in: int
    d_out: int
    batch: int = 1
    precision: PrecisionFormat = PrecisionFormat.FLOAT16
    accumulator: AccumulatorPrecision = AccumulatorPrecision.NATIVE
    flush_to_zero: bool = False

    def __post_init__(self):
        for name in ("d_in", "d_out", "batch"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")

    @property
    def accumulator_widened(self) -> bool:
        return self.accumulator is AccumulatorPrecision.F64


def _identity(x: np.ndarray) -> np.ndarray:
    return x


def accumulator_rounding(fmt: PrecisionFormat, accumulator: AccumulatorPrecision,
                         flush_to_zero: bool = False) -> Rounder:
    if accumulator is AccumulatorPrecision.F64:
        return _identity
    target = fmt if accumulator is AccumulatorPrecision.NATIVE else PrecisionFormat.FLOAT32_REF
    return partial(round_array, fmt=target, flush_to_zero=flush_to_zero)


def _scheduled_products(X: np.ndarray, W: np.ndarray, schedule: ReductionSchedule,
                        fmt: PrecisionFormat, accumulator: AccumulatorPrecision,
                        flush_to_zero: bool) -> np.ndarray:
    """Rows of X times W; every (row, logit) reduction follows ``schedule`` exactly."""
    rnd = accumulator_rounding(fmt, accumulator, flush_to_zero)
    rows, d_out = X.shape[0], W.shape[1]
    out = np.empty((rows, d_out), dtype=np.float64)
    for lo in range(0, d_out, _LOGIT_SLAB):
        hi = min(lo + _LOGIT_SLAB, d_out)
        # terms[k, r, j] = X[r, k] * W[k, j]; axis 0 is the summand axis
        terms = rnd(X.T[:, :, np.newaxis] * W[:, np.newaxis, lo:hi])
        out[:, lo:hi] = schedule.reduce(terms, rnd)
    return round_array(out, fmt, flush_to_zero)


def dot_scheduled(a, b, schedule: ReductionSchedule, fmt: PrecisionFormat,
                  widened: bool = False, *, accumulator: Optional[AccumulatorPrecision] = None,
                  flush_to_zero: bool = False) -> float:
    """Dot product of two pre-quantized vectors accumulated in ``schedule`` order.

    Products and partial sums are rounded to the accumulator format (``fmt``
    itself unless widened); the result is always a value of ``fmt``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ShapeMismatchError(f"dot operands must be equal-length vectors, got {a.shape} and {b.shape}")
    if a.size == 0:
        raise ShapeMismatchError("dot operands must not be empty")
    acc = resolve_accumulator(widened, accumulator)
    out = _scheduled_products(a[np.newaxis, :], b[:, np.newaxis], schedule, fmt, acc, flush_to_zero)
    return float(out[0, 0])


def _check_weights(W: np.ndarray, spec: MatmulSpec) -> np.ndarray:
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (spec.d_in, spec.d_out):
        raise ShapeMismatchError(f"W must be {spec.d_in}x{spec.d_out}, got {W.shape}")
    return W


def matmul_single(x, W, spec: MatmulSpec, schedule: ReductionSchedule) -> np.ndarray:
    """The single-input path: ``x @ W`` with every logit reduced in ``schedule`` order."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.d_in,):
        raise ShapeMismatchError(f"x must have length {spec.d_in}, got shape {x.shape}")
    W = _check_weights(W, spec)
    return _scheduled_products(x[np.newaxis, :], W, schedule, spec.precision,
                               spec.accumulator, spec.flush_to_zero)[0]


def matmul_batched(X, W, spec: MatmulSpec, schedule: ReductionSchedule) -> np.ndarray:
    """The batched path: ``X @ W`` for a full B x d_in batch."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (spec.batch, spec.d_in):
        raise ShapeMismatchError(f"X must be {spec.batch}x{spec.d_in}, got {X.shape}")
    W = _check_weights(W, spec)
    return _scheduled_products(X, W, schedule, spec.precision, spec.accumulator, spec.flush_to_zero)


def filler_rows(d_in: int, count: int, fmt: PrecisionFormat, filler_seed: int,
                flush_to_zero: bool = False) -> np.ndarray:
    """Seeded standard-normal batch filler, quantized to ``fmt``."""
    rng = np.random.default_rng(np.random.SeedSequence(int(filler_seed) % _UINT64))
    return quantize(rng.standard_normal((count, d_in)), fmt, flush_to_zero).reshape(count, d_in)


def matmul_batched_row0(x, W, spec: MatmulSpec, schedule: ReductionSchedule, filler_seed: int) -> np.ndarray:
    """Embed ``x`` as row 0 of a seeded batch, run the batched path, return row 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.d_in,):
        raise ShapeMismatchError(f"x must have length {spec.d_in}, got shape {x.shape}")
    filler = filler_rows(spec.d_in, spec.batch - 1, spec.precision, filler_seed, spec.flush_to_zero)
    batch = np.vstack([x[np.newaxis, :], filler])
    return matmul_batched(batch, W, spec, schedule)[0]
