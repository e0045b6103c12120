from __future__ import annotations

from typing import Annotated, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, PlainValidator, PrivateAttr, model_validator

from ..kernels.matmul import AccumulatorPrecision, MatmulSpec
from ..kernels.schedules import ReductionSchedule
from ..precision.formats import PrecisionFormat


Precision = Annotated[PrecisionFormat, BeforeValidator(PrecisionFormat.parse)]
Schedule = Annotated[
    ReductionSchedule,
    PlainValidator(ReductionSchedule.parse),
    PlainSerializer(str, return_type=str),
]

SCHEMA_VERSION = 1


class ExperimentConfig(BaseModel):
    """Everything that determines an experiment's results."""

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        json_schema_extra={
            "example": {
                "d_in": 512,
                "d_out": 1024,
                "batch": 16,
                "n_trials": 10000,
                "precision": "f16",
                "schedule_single": "sequential",
                "schedule_batched": "blocked:32",
                "seed": 1234,
                "widened_accumulator": False,
                "accumulator": "f32",
                "fixed_weights": False,
                "flush_to_zero": False,
            }
        },
    )

    d_in: int = Field(512, ge=1)
    d_out: int = Field(1024, ge=1)
    batch: int = Field(16, ge=1)
    n_trials: int = Field(10_000, ge=1)
    precision: Precision = PrecisionFormat.FLOAT16
    schedule_single: Schedule = ReductionSchedule.sequential()
    schedule_batched: Schedule = ReductionSchedule.blocked(32)
    seed: int = Field(..., ge=-(1 << 63), lt=1 << 64)
    widened_accumulator: bool = False
    # None: f64 when widened, otherwise single-precision accumulation
    accumulator: Optional[AccumulatorPrecision] = None
    fixed_weights: bool = False
    flush_to_zero: bool = False

    @model_validator(mode="after")
    def _accumulator_agrees_with_widened(self):
        if self.widened_accumulator and self.accumulator not in (None, AccumulatorPrecision.F64):
            raise ValueError("widened_accumulator implies accumulator 'f64'")
        return self

    @property
    def accumulator_precision(self) -> AccumulatorPrecision:
        if self.accumulator is not None:
            return self.accumulator
        return AccumulatorPrecision.F64 if self.widened_accumulator else AccumulatorPrecision.F32

    def matmul_spec(self) -> MatmulSpec:
        return MatmulSpec(
            d_in=self.d_in,
            d_out=self.d_out,
            batch=self.batch,
            precision=self.precision,
            accumulator=self.accumulator_precision,
            flush_to_zero=self.flush_to_zero,
        )


class FlipReport(BaseModel):
    empirical_rate: float
    predicted_rate: Optional[float]
    n_flips: int
    n_samples: int


class MarginsHistogram(BaseModel):
    """Fixed 64-bin histogram of logit margins over [0, max margin]."""

    bin_edges: List[float]
    counts: List[int]


class CovarianceReport(BaseModel):
    k: int
    n_samples: int
    off_diagonal_ratio: float
    trace: float
    min_eigenvalue: float
    psd: bool
    degenerate: bool
    matrix_path: Optional[str] = None


class NullBaselineReport(BaseModel):
    sigma_model: float
    sigma_measured: float
    empirical_flip_rate: float
    predicted_flip_rate: float
    n_flips: int
    expected_js: float
    off_diagonal_ratio: Optional[float]
    n_draws: int
    k: int


class NoiseReport(BaseModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    config: ExperimentConfig
    accumulator: AccumulatorPrecision
    input_distribution: str = "standard_normal"
    sigma: float
    sigma_stderr: Optional[float]
    flip_stats: FlipReport
    expected_js: float
    covariance: Optional[CovarianceReport]
    null_baseline: Optional[NullBaselineReport]
    # R_off(measured) > R_off(matched i.i.d. null); None without a baseline
    structured_noise: Optional[bool]
    degenerate: bool
    calibration: Literal["ok", "calibration_failure", "degenerate"]
    margins_histogram: MarginsHistogram
    # run-local timing, not persisted
    wall_time_seconds: float = Field(default=0.0, exclude=True)

    _sigma_matrix: Optional[np.ndarray] = PrivateAttr(default=None)

    @property
    def sigma_matrix(self) -> Optional[np.ndarray]:
        return self._sigma_matrix
