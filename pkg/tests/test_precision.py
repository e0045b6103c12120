import math

import ml_dtypes
import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from src.precision import PrecisionFormat, format_info, quantize, quantize_vector

FORMATS = list(PrecisionFormat)

finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_quantize_examples():
    assert quantize(1.0, PrecisionFormat.BFLOAT16) == 1.0
    assert quantize(0.1, PrecisionFormat.FLOAT16) == 0.0999755859375


def test_quantize_vector_examples():
    assert quantize_vector([], PrecisionFormat.FLOAT16).shape == (0,)
    assert quantize_vector([1.0, 2.0], PrecisionFormat.BFLOAT16).tolist() == [1.0, 2.0]
    assert quantize_vector([0.1, 0.2], PrecisionFormat.FLOAT16).tolist() == [0.0999755859375, 0.199951171875]


@pytest.mark.parametrize("fmt,bits", [
    (PrecisionFormat.FLOAT16, (10, 5)),
    (PrecisionFormat.BFLOAT16, (7, 8)),
    (PrecisionFormat.FLOAT32_REF, (23, 8)),
])
def test_format_bits_round_trip(fmt, bits):
    assert (fmt.mantissa_bits, fmt.exponent_bits) == bits
    assert PrecisionFormat.from_bits(*bits) is fmt


def test_from_bits_unknown_pair():
    with pytest.raises(ValueError):
        PrecisionFormat.from_bits(3, 4)


@pytest.mark.parametrize("text,fmt", [
    ("f16", PrecisionFormat.FLOAT16),
    ("Float16", PrecisionFormat.FLOAT16),
    ("half", PrecisionFormat.FLOAT16),
    ("bf16", PrecisionFormat.BFLOAT16),
    ("bfloat16", PrecisionFormat.BFLOAT16),
    ("fp32", PrecisionFormat.FLOAT32_REF),
])
def test_parse_aliases(text, fmt):
    assert PrecisionFormat.parse(text) is fmt


def test_parse_rejects_unknown():
    with pytest.raises(ValueError):
        PrecisionFormat.parse("f8")


def test_format_info_float16():
    info = format_info(PrecisionFormat.FLOAT16)
    assert info.max_finite == 65504.0
    assert info.min_normal == 2.0 ** -14
    assert info.min_subnormal == 2.0 ** -24
    assert info.epsilon == 2.0 ** -10


def test_format_info_bfloat16_matches_ml_dtypes():
    info = format_info(PrecisionFormat.BFLOAT16)
    finfo = ml_dtypes.finfo(ml_dtypes.bfloat16)
    assert info.max_finite == float(finfo.max)
    assert info.min_normal == float(finfo.tiny)
    assert info.epsilon == float(finfo.eps)


@pytest.mark.parametrize("fmt", FORMATS)
def test_idempotence_on_million_inputs(fmt):
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(10 ** 6) * np.exp2(rng.integers(-30, 30, size=10 ** 6))
    once = quantize(x, fmt)
    twice = quantize(once, fmt)
    assert np.array_equal(once.view(np.uint64), twice.view(np.uint64))


@pytest.mark.parametrize("fmt", FORMATS)
def test_monotone_on_sorted_inputs(fmt):
    rng = np.random.default_rng(5)
    x = np.sort(rng.standard_normal(100_000) * 1e3)
    assert np.all(np.diff(quantize(x, fmt)) >= 0)


@settings(max_examples=300)
@given(finite_floats, st.sampled_from(FORMATS))
def test_sign_symmetry(x, fmt):
    assert quantize(-x, fmt) == -quantize(x, fmt)


@settings(max_examples=300)
@given(finite_floats, finite_floats, st.sampled_from(FORMATS))
def test_monotonicity(x, y, fmt):
    lo, hi = min(x, y), max(x, y)
    assert quantize(lo, fmt) <= quantize(hi, fmt)


@settings(max_examples=300)
@given(finite_floats, st.sampled_from(FORMATS))
def test_half_ulp_bound_in_normal_range(x, fmt):
    info = format_info(fmt)
    if not info.min_normal <= abs(x) <= info.max_finite:
        return
    bound = 2.0 ** (-fmt.mantissa_bits - 1) * 2.0 ** math.floor(math.log2(abs(x)))
    assert abs(quantize(x, fmt) - x) <= bound


@settings(max_examples=300)
@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_float16_matches_numpy_cast(x):
    expected = float(np.float32(x).astype(np.float16))
    assert quantize(float(x), PrecisionFormat.FLOAT16) == expected


@settings(max_examples=300)
@given(st.floats(allow_nan=False, allow_infinity=False, width=32))
def test_bfloat16_matches_ml_dtypes(x):
    expected = float(np.float32(x).astype(ml_dtypes.bfloat16))
    assert quantize(float(x), PrecisionFormat.BFLOAT16) == expected


def test_float32_reference_is_hardware_cast():
    x = np.random.default_rng(1).standard_normal(1000)
    assert np.array_equal(quantize(x, PrecisionFormat.FLOAT32_REF), x.astype(np.float32).astype(np.float64))


def test_representable_values_are_fixed_points():
    halves = np.arange(0, 1 << 15, dtype=np.uint16).view(np.float16).astype(np.float64)
    halves = halves[np.isfinite(halves)]
    assert np.array_equal(quantize(halves, PrecisionFormat.FLOAT16), halves)


def test_float16_subnormals_round_to_even():
    tiny = 2.0 ** -24
    assert quantize(tiny, PrecisionFormat.FLOAT16) == tiny
    assert quantize(0.5 * tiny, PrecisionFormat.FLOAT16) == 0.0
    assert quantize(0.75 * tiny, PrecisionFormat.FLOAT16) == tiny
    assert quantize(1.5 * tiny, PrecisionFormat.FLOAT16) == 2 * tiny
    assert quantize(2.5 * tiny, PrecisionFormat.FLOAT16) == 2 * tiny


def test_flush_to_zero_keeps_sign():
    assert quantize(1e-6, PrecisionFormat.FLOAT16, flush_to_zero=True) == 0.0
    flushed = quantize(-1e-6, PrecisionFormat.FLOAT16, flush_to_zero=True)
    assert flushed == 0.0 and math.copysign(1.0, flushed) == -1.0
    assert quantize(1e-6, PrecisionFormat.FLOAT16) != 0.0


def test_overflow_saturates_to_infinity():
    assert quantize(65519.0, PrecisionFormat.FLOAT16) == 65504.0
    assert quantize(65520.0, PrecisionFormat.FLOAT16) == math.inf
    assert quantize(-1e6, PrecisionFormat.FLOAT16) == -math.inf
    assert quantize(1e39, PrecisionFormat.BFLOAT16) == math.inf


@pytest.mark.parametrize("fmt", FORMATS)
def test_specials_pass_through(fmt):
    assert math.isnan(quantize(math.nan, fmt))
    assert quantize(math.inf, fmt) == math.inf
    assert quantize(-math.inf, fmt) == -math.inf
