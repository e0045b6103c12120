from .matmul import (
    AccumulatorPrecision,
    MatmulSpec,
    dot_scheduled,
    filler_rows,
    matmul_batched,
    matmul_batched_row0,
    matmul_single,
    resolve_accumulator,
)
from .schedules import ReductionSchedule, ScheduleKind

__all__ = [
    "AccumulatorPrecision",
    "MatmulSpec",
    "ReductionSchedule",
    "ScheduleKind",
    "dot_scheduled",
    "filler_rows",
    "matmul_batched",
    "matmul_batched_row0",
    "matmul_single",
    "resolve_accumulator",
]
