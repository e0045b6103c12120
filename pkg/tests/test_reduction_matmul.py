import numpy as np
import pytest

from src.errors import ConfigError, ScheduleError, ShapeMismatchError
from src.kernels import (
    AccumulatorPrecision,
    MatmulSpec,
    ReductionSchedule,
    dot_scheduled,
    matmul_batched,
    matmul_batched_row0,
    matmul_single,
    resolve_accumulator,
)
from src.precision import PrecisionFormat, quantize

F16 = PrecisionFormat.FLOAT16
F32 = PrecisionFormat.FLOAT32_REF

SEQ = ReductionSchedule.sequential()
PAIR = ReductionSchedule.pairwise()

ALL_SCHEDULES = [SEQ, PAIR, ReductionSchedule.blocked(1), ReductionSchedule.blocked(4),
                 ReductionSchedule.blocked(32), ReductionSchedule.permuted(99)]


def _normal(rng, shape, fmt):
    return np.asarray(quantize(rng.standard_normal(shape), fmt)).reshape(shape)


def test_small_integer_dot_is_exact():
    assert dot_scheduled([1, 2, 3], [1, 1, 1], SEQ, F32, False) == 6.0


@pytest.mark.parametrize("schedule", ALL_SCHEDULES, ids=str)
def test_schedules_agree_below_integer_threshold(schedule):
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = rng.integers(-8, 9, size=20).astype(np.float64)
        b = rng.integers(-8, 9, size=20).astype(np.float64)
        assert dot_scheduled(a, b, schedule, F16) == dot_scheduled(a, b, SEQ, F16) == float(a @ b)


def test_pairwise_and_sequential_round_differently():
    small = 2.0 ** -11
    a = [1.0, small, small, small]
    ones = [1.0] * 4
    # sequential: every small addend ties back down to 1.0
    assert dot_scheduled(a, ones, SEQ, F16) == 1.0
    # pairwise and blocked(2): the small terms pair up first
    assert dot_scheduled(a, ones, PAIR, F16) == 1.0 + 2.0 ** -10
    assert dot_scheduled(a, ones, ReductionSchedule.blocked(2), F16) == 1.0 + 2.0 ** -10


def test_sequential_and_pairwise_diverge_on_normal_draws():
    differs = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        a, b = _normal(rng, 512, F16), _normal(rng, 512, F16)
        differs += dot_scheduled(a, b, SEQ, F16) != dot_scheduled(a, b, PAIR, F16)
    assert differs > 0


def test_degenerate_blocks_match_sequential():
    rng = np.random.default_rng(8)
    a, b = _normal(rng, 100, F16), _normal(rng, 100, F16)
    expected = dot_scheduled(a, b, SEQ, F16)
    assert dot_scheduled(a, b, ReductionSchedule.blocked(1), F16) == expected
    assert dot_scheduled(a, b, ReductionSchedule.blocked(100), F16) == expected
    assert dot_scheduled(a, b, ReductionSchedule.blocked(500), F16) == expected


@pytest.mark.parametrize("schedule", ALL_SCHEDULES, ids=str)
def test_result_is_in_format(schedule):
    rng = np.random.default_rng(11)
    a, b = _normal(rng, 257, F16), _normal(rng, 257, F16)
    for acc in AccumulatorPrecision:
        r = dot_scheduled(a, b, schedule, F16, accumulator=acc)
        assert quantize(r, F16) == r


def test_dot_length_mismatch_is_an_error():
    with pytest.raises(ShapeMismatchError):
        dot_scheduled([1.0, 2.0], [1.0], SEQ, F16)
    with pytest.raises(ShapeMismatchError):
        dot_scheduled([], [], SEQ, F16)


def test_matmul_matches_float32_triple_loop():
    rng = np.random.default_rng(21)
    d_in, d_out = 24, 6
    x = rng.standard_normal(d_in).astype(np.float32)
    W = rng.standard_normal((d_in, d_out)).astype(np.float32)
    expected = np.empty(d_out, dtype=np.float32)
    for j in range(d_out):
        acc = x[0] * W[0, j]
        for k in range(1, d_in):
            acc = np.float32(acc + np.float32(x[k] * W[k, j]))
        expected[j] = acc
    spec = MatmulSpec(d_in, d_out, precision=F32)
    got = matmul_single(x.astype(np.float64), W.astype(np.float64), spec, SEQ)
    assert np.array_equal(got, expected.astype(np.float64))


@pytest.mark.parametrize("fmt", list(PrecisionFormat))
def test_identity_weights_return_input(fmt):
    rng = np.random.default_rng(4)
    x = _normal(rng, 16, fmt)
    spec = MatmulSpec(16, 16, precision=fmt)
    for schedule in ALL_SCHEDULES:
        assert np.array_equal(matmul_single(x, np.eye(16), spec, schedule), x)


def test_zero_input_gives_zero_output():
    rng = np.random.default_rng(9)
    spec = MatmulSpec(32, 10, precision=F16)
    W = _normal(rng, (32, 10), F16)
    assert np.all(matmul_single(np.zeros(32), W, spec, PAIR) == 0.0)


def test_matmul_column_is_dot_product():
    rng = np.random.default_rng(13)
    spec = MatmulSpec(64, 5, precision=F16)
    x, W = _normal(rng, 64, F16), _normal(rng, (64, 5), F16)
    schedule = ReductionSchedule.blocked(16)
    y = matmul_single(x, W, spec, schedule)
    assert [dot_scheduled(x, W[:, j], schedule, F16) for j in range(5)] == y.tolist()


def test_batched_rows_are_independent():
    rng = np.random.default_rng(17)
    spec = MatmulSpec(40, 7, batch=3, precision=F16)
    X, W = _normal(rng, (3, 40), F16), _normal(rng, (40, 7), F16)
    out = matmul_batched(X, W, spec, PAIR)
    single = MatmulSpec(40, 7, precision=F16)
    for r in range(3):
        assert np.array_equal(out[r], matmul_single(X[r], W, single, PAIR))


def test_batch_of_one_with_same_schedule_matches_single():
    rng = np.random.default_rng(23)
    spec = MatmulSpec(128, 16, batch=1, precision=F16)
    x, W = _normal(rng, 128, F16), _normal(rng, (128, 16), F16)
    for schedule in ALL_SCHEDULES:
        assert np.array_equal(matmul_batched_row0(x, W, spec, schedule, filler_seed=5),
                              matmul_single(x, W, spec, schedule))


def test_widened_accumulation_hides_schedule_on_integers():
    rng = np.random.default_rng(29)
    spec = MatmulSpec(50, 8, batch=4, precision=F32, accumulator=AccumulatorPrecision.F64)
    x = rng.integers(-100, 100, size=50).astype(np.float64)
    W = rng.integers(-100, 100, size=(50, 8)).astype(np.float64)
    single = matmul_single(x, W, spec, SEQ)
    batched = matmul_batched_row0(x, W, spec, ReductionSchedule.blocked(3), filler_seed=1)
    assert np.array_equal(single, batched)
    assert np.array_equal(single, x @ W)


def test_single_and_batched_paths_diverge_in_float16():
    differs = 0
    spec = MatmulSpec(512, 8, batch=4, precision=F16)
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x, W = _normal(rng, 512, F16), _normal(rng, (512, 8), F16)
        y = matmul_single(x, W, spec, SEQ)
        y_tilde = matmul_batched_row0(x, W, spec, ReductionSchedule.blocked(32), filler_seed=seed)
        differs += not np.array_equal(y, y_tilde)
    assert differs > 0


def test_row0_is_reproducible():
    rng = np.random.default_rng(31)
    spec = MatmulSpec(64, 8, batch=8, precision=PrecisionFormat.BFLOAT16)
    x, W = _normal(rng, 64, spec.precision), _normal(rng, (64, 8), spec.precision)
    first = matmul_batched_row0(x, W, spec, PAIR, filler_seed=77)
    again = matmul_batched_row0(x, W, spec, PAIR, filler_seed=77)
    assert np.array_equal(first.view(np.uint64), again.view(np.uint64))


def test_dimension_mismatch_is_an_error():
    spec = MatmulSpec(8, 4, batch=2, precision=F16)
    with pytest.raises(ShapeMismatchError):
        matmul_single(np.zeros(7), np.zeros((8, 4)), spec, SEQ)
    with pytest.raises(ShapeMismatchError):
        matmul_single(np.zeros(8), np.zeros((4, 8)), spec, SEQ)
    with pytest.raises(ShapeMismatchError):
        matmul_batched(np.zeros((3, 8)), np.zeros((8, 4)), spec, SEQ)


@pytest.mark.parametrize("field", ["d_in", "d_out", "batch"])
def test_spec_dimensions_must_be_positive(field):
    kwargs = dict(d_in=4, d_out=4, batch=1)
    kwargs[field] = 0
    with pytest.raises(ConfigError) as e:
        MatmulSpec(**kwargs)
    assert e.value.field == field


def test_widened_conflicts_with_narrow_accumulator():
    assert resolve_accumulator(True) is AccumulatorPrecision.F64
    assert resolve_accumulator(False) is AccumulatorPrecision.NATIVE
    with pytest.raises(ConfigError):
        resolve_accumulator(True, AccumulatorPrecision.F32)


@pytest.mark.parametrize("n", [1, 2, 17, 512])
def test_permuted_order_is_a_bijection(n):
    order = ReductionSchedule.permuted(2 ** 63 + 5).realized_order(n)
    assert np.array_equal(np.sort(order), np.arange(n))


def test_identical_schedules_realize_identical_orders():
    a = ReductionSchedule.permuted(42)
    b = ReductionSchedule.parse("permuted:42")
    assert a == b
    assert np.array_equal(a.realized_order(300), b.realized_order(300))
    assert not np.array_equal(a.realized_order(300), ReductionSchedule.permuted(43).realized_order(300))


@pytest.mark.parametrize("text", ["sequential", "pairwise", "blocked:32", "permuted:-3"])
def test_schedule_text_round_trip(text):
    assert str(ReductionSchedule.parse(text)) == text


@pytest.mark.parametrize("text", ["blocked:0", "blocked", "blocked:x", "pairwise:2", "zigzag"])
def test_malformed_schedules_are_rejected(text):
    with pytest.raises(ScheduleError):
        ReductionSchedule.parse(text)
