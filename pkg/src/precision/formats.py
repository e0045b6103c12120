"""Bit-exact software rounding to float16, bfloat16 and float32.

Quantized values are carried in float64 containers: every value of the three
emulated formats is exactly representable in float64, so arithmetic on the
containers followed by quantize() reproduces reduced-precision results on any
CPU. Rounding is round-to-nearest, ties-to-even; subnormals are honored unless
flush_to_zero is requested; overflow saturates to signed infinity; NaN stays NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Sequence, Tuple, Union

import numpy as np


ArrayLike = Union[float, Sequence[float], np.ndarray]


class PrecisionFormat(str, Enum):
    FLOAT16 = "f16"
    BFLOAT16 = "bf16"
    FLOAT32_REF = "f32"

    @property
    def mantissa_bits(self) -> int:
        return _BITS[self][0]

    @property
    def exponent_bits(self) -> int:
        return _BITS[self][1]

    @classmethod
    def from_bits(cls, mantissa_bits: int, exponent_bits: int) -> "PrecisionFormat":
        for fmt, bits in _BITS.items():
            if bits == (mantissa_bits, exponent_bits):
                return fmt
        raise ValueError(
            f"No emulated format with {mantissa_bits} mantissa and {exponent_bits} exponent bits"
        )

    @classmethod
    def parse(cls, text: Union[str, "PrecisionFormat"]) -> "PrecisionFormat":
        if isinstance(text, PrecisionFormat):
            return text
        key = str(text).strip().lower()
        if key not in _ALIASES:
            raise ValueError(f"Unknown precision '{text}' (expected one of {sorted(_ALIASES)})")
        return _ALIASES[key]

    def __str__(self) -> str:
        return self.value


# (explicit mantissa bits, exponent bits)
_BITS: Dict[PrecisionFormat, Tuple[int, int]] = {
    PrecisionFormat.FLOAT16: (10, 5),
    PrecisionFormat.BFLOAT16: (7, 8),
    PrecisionFormat.FLOAT32_REF: (23, 8),
}

_ALIASES: Dict[str, PrecisionFormat] = {
    "f16": PrecisionFormat.FLOAT16,
    "fp16": PrecisionFormat.FLOAT16,
    "float16": PrecisionFormat.FLOAT16,
    "half": PrecisionFormat.FLOAT16,
    "bf16": PrecisionFormat.BFLOAT16,
    "bfloat16": PrecisionFormat.BFLOAT16,
    "f32": PrecisionFormat.FLOAT32_REF,
    "fp32": PrecisionFormat.FLOAT32_REF,
    "float32": PrecisionFormat.FLOAT32_REF,
}


@dataclass(frozen=True)
class FormatInfo:
    mantissa_bits: int
    exponent_bits: int
    emax: int
    emin: int
    max_finite: float
    min_normal: float
    min_subnormal: float
    epsilon: float


@lru_cache(maxsize=None)
def format_info(fmt: PrecisionFormat) -> FormatInfo:
    m, e = fmt.mantissa_bits, fmt.exponent_bits
    emax = (1 << (e - 1)) - 1
    emin = 1 - emax
    return FormatInfo(
        mantissa_bits=m,
        exponent_bits=e,
        emax=emax,
        emin=emin,
        max_finite=float(np.ldexp(2.0 - 2.0 ** -m, emax)),
        min_normal=float(np.ldexp(1.0, emin)),
        min_subnormal=float(np.ldexp(1.0, emin - m)),
        epsilon=float(np.ldexp(1.0, -m)),
    )


def _round_bits(x: np.ndarray, fmt: PrecisionFormat, flush_to_zero: bool) -> np.ndarray:
    info = format_info(fmt)
    shift = 52 - info.mantissa_bits

    # Normal range: round the float64 significand to the target width on the
    # raw bit pattern. Sign-magnitude layout makes this symmetric in sign, and a
    # carry out of the significand correctly bumps the exponent.
    bits = x.view(np.uint64)
    lsb = (bits >> np.uint64(shift)) & np.uint64(1)
    bias = np.uint64((1 << (shift - 1)) - 1)
    keep = ~np.uint64((1 << shift) - 1)
    out = ((bits + bias + lsb) & keep).view(np.float64)

    magnitude = np.abs(x)
    tiny = magnitude < info.min_normal
    if tiny.any():
        if flush_to_zero:
            out[tiny] = np.copysign(0.0, x[tiny])
        else:
            # Subnormal grid has a fixed spacing of min_subnormal
            scale = info.emin - info.mantissa_bits
            out[tiny] = np.ldexp(np.rint(np.ldexp(x[tiny], -scale)), scale)

    overflow = np.abs(out) > info.max_finite
    if overflow.any():
        out[overflow] = np.copysign(np.inf, x[overflow])

    special = ~np.isfinite(x)
    if special.any():
        out[special] = x[special]
    return out


def _round_float32(x: np.ndarray) -> np.ndarray:
    # Hardware float64 -> float32 conversion is IEEE round-to-nearest-even
    with np.errstate(over="ignore"):
        return x.astype(np.float32).astype(np.float64)


def round_array(x: np.ndarray, fmt: PrecisionFormat, flush_to_zero: bool = False) -> np.ndarray:
    """Round a float64 array to ``fmt``; the hot path used by the reduction kernels."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if fmt is PrecisionFormat.FLOAT32_REF and not flush_to_zero:
        return _round_float32(x)
    return _round_bits(x, fmt, flush_to_zero)


def quantize(x: ArrayLike, fmt: PrecisionFormat, flush_to_zero: bool = False):
    """Nearest value of ``fmt`` to ``x`` (ties to even), as float64.

    Scalars return a Python float, arrays are rounded elementwise.
    """
    fmt = PrecisionFormat.parse(fmt)
    arr = np.asarray(x, dtype=np.float64)
    out = round_array(arr.reshape(-1), fmt, flush_to_zero).reshape(arr.shape)
    if out.ndim == 0:
        return float(out)
    return out


def quantize_vector(v: ArrayLike, fmt: PrecisionFormat, flush_to_zero: bool = False) -> np.ndarray:
    """Elementwise quantize of a vector; length is preserved."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    return quantize(arr, fmt, flush_to_zero)
