"""Single-vs-batched matmul noise experiment.

Every trial draws a fresh input vector and weight matrix (standard normal,
quantized to the experiment precision), computes the single-input path and the
batched path with the input as row 0, and records the difference as one noise
sample. All randomness derives from ``cfg.seed`` through numpy SeedSequence
spawn keys ``(trial_index, stream)``, so trials can run in any order or on any
number of joblib workers with identical results.
"""

from __future__ import annotations

import logging
import time
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from ..kernels.matmul import matmul_batched_row0, matmul_single
from ..precision.formats import PrecisionFormat, quantize
from ..stats.covariance import estimate_covariance
from ..stats.divergence import expected_js
from ..stats.noise import NoiseSample, NoiseSet, estimate_sigma, flip_stats, sigma_standard_error
from ..stats.null_model import simulate_iid_null
from .schemas import (
    CovarianceReport,
    ExperimentConfig,
    FlipReport,
    MarginsHistogram,
    NoiseReport,
    NullBaselineReport,
)

logger = logging.getLogger(__name__)

_UINT64 = 1 << 64

# SeedSequence stream tags
STREAM_INPUT = 0
STREAM_WEIGHTS = 1
STREAM_FILLER = 2
STREAM_NULL = 3

# sigma outside this band means the schedule pair does not land in the
# reduced-precision noise regime and is reported as a calibration failure
CALIBRATION_BAND = (1e-5, 1e-2)

MARGIN_BINS = 64

_TRIAL_BLOCK = 64


def trial_seed_sequence(seed: int, trial_index: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) % _UINT64, spawn_key=(int(trial_index), int(stream)))


def _shared_seed_sequence(seed: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) % _UINT64, spawn_key=(int(stream),))


def _as_int_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def filler_seed(cfg: ExperimentConfig, trial_index: int) -> int:
    return _as_int_seed(trial_seed_sequence(cfg.seed, trial_index, STREAM_FILLER))


def null_seed(cfg: ExperimentConfig) -> int:
    return _as_int_seed(_shared_seed_sequence(cfg.seed, STREAM_NULL))


def _standard_normal(seq: np.random.SeedSequence, shape, cfg: ExperimentConfig) -> np.ndarray:
    draws = np.random.default_rng(seq).standard_normal(shape)
    return np.asarray(quantize(draws, cfg.precision, cfg.flush_to_zero)).reshape(shape)


def trial_inputs(cfg: ExperimentConfig, trial_index: int) -> Tuple[np.ndarray, np.ndarray]:
    """The (x, W) pair of one trial, already quantized to the experiment precision."""
    x = _standard_normal(trial_seed_sequence(cfg.seed, trial_index, STREAM_INPUT), (cfg.d_in,), cfg)
    if cfg.fixed_weights:
        w_seq = _shared_seed_sequence(cfg.seed, STREAM_WEIGHTS)
    else:
        w_seq = trial_seed_sequence(cfg.seed, trial_index, STREAM_WEIGHTS)
    W = _standard_normal(w_seq, (cfg.d_in, cfg.d_out), cfg)
    return x, W


def _trial_outputs(cfg: ExperimentConfig, trial_index: int) -> Tuple[np.ndarray, np.ndarray]:
    spec = cfg.matmul_spec()
    x, W = trial_inputs(cfg, trial_index)
    y = matmul_single(x, W, spec, cfg.schedule_single)
    y_tilde = matmul_batched_row0(x, W, spec, cfg.schedule_batched, filler_seed(cfg, trial_index))
    return y, y_tilde


def _run_trial_block(cfg: ExperimentConfig, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
    y = np.empty((stop - start, cfg.d_out), dtype=np.float64)
    y_tilde = np.empty_like(y)
    for row, trial_index in enumerate(range(start, stop)):
        y[row], y_tilde[row] = _trial_outputs(cfg, trial_index)
    return y, y_tilde


def regenerate_trial(cfg: ExperimentConfig, trial_index: int) -> NoiseSample:
    """Recompute one trial of the run defined by ``cfg``, bit-identically."""
    if not 0 <= trial_index < cfg.n_trials:
        raise IndexError(f"trial_index {trial_index} outside [0, {cfg.n_trials})")
    y, y_tilde = _trial_outputs(cfg, trial_index)
    return NoiseSample(y, y_tilde)


def run_trials(cfg: ExperimentConfig, n_jobs: int = 1) -> NoiseSet:
    """All trials of ``cfg``, collected in trial-index order."""
    blocks = [(lo, min(lo + _TRIAL_BLOCK, cfg.n_trials)) for lo in range(0, cfg.n_trials, _TRIAL_BLOCK)]
    logger.info(
        "Running %d trials (%s, d_in=%d, d_out=%d, B=%d, %s vs %s) on %d worker(s)",
        cfg.n_trials, cfg.precision, cfg.d_in, cfg.d_out, cfg.batch,
        cfg.schedule_single, cfg.schedule_batched, n_jobs,
    )
    # joblib returns results in submission order regardless of completion order
    parts = Parallel(n_jobs=n_jobs)(delayed(_run_trial_block)(cfg, lo, hi) for lo, hi in blocks)
    y = np.concatenate([p[0] for p in parts], axis=0)
    y_tilde = np.concatenate([p[1] for p in parts], axis=0)
    return NoiseSet(y, y_tilde)


def _margins_histogram(margins: np.ndarray) -> MarginsHistogram:
    finite = margins[np.isfinite(margins)]
    upper = float(finite.max()) if finite.size else 0.0
    if upper <= 0.0:
        upper = 1.0
    counts, edges = np.histogram(finite, bins=MARGIN_BINS, range=(0.0, upper))
    return MarginsHistogram(bin_edges=[float(e) for e in edges], counts=[int(c) for c in counts])


def _calibration(sigma: float) -> str:
    if sigma == 0.0:
        return "degenerate"
    lo, hi = CALIBRATION_BAND
    if lo <= sigma <= hi:
        return "ok"
    return "calibration_failure"


def summarize_noise(cfg: ExperimentConfig, noise: NoiseSet, wall_time_seconds: float = 0.0) -> NoiseReport:
    """Compute every noise metric of ``noise`` plus the matched i.i.d. null baseline."""
    sigma = estimate_sigma(noise)
    degenerate = sigma == 0.0
    flips = flip_stats(noise, sigma=sigma)

    covariance = estimate_covariance(noise) if noise.n >= 2 else None
    null = None
    if not degenerate and noise.n >= 2:
        # Same sigma, same y rows (hence margins), same K and N as the measurement
        null = simulate_iid_null(noise.y, sigma, null_seed(cfg), noise.n)

    structured = None
    if covariance is not None and null is not None:
        structured = covariance.off_diagonal_ratio > null.covariance.off_diagonal_ratio

    calibration = _calibration(sigma)
    if calibration == "degenerate":
        logger.info("Noise is identically zero: flip model degenerate")
    elif calibration == "calibration_failure":
        logger.warning(
            "sigma=%.3e lies outside the calibration band [%.0e, %.0e] for %s vs %s",
            sigma, *CALIBRATION_BAND, cfg.schedule_single, cfg.schedule_batched,
        )

    report = NoiseReport(
        config=cfg,
        accumulator=cfg.accumulator_precision,
        sigma=sigma,
        sigma_stderr=sigma_standard_error(noise) if noise.n >= 2 else None,
        flip_stats=FlipReport(
            empirical_rate=flips.empirical_rate,
            predicted_rate=flips.predicted_rate,
            n_flips=flips.n_flips,
            n_samples=flips.n_samples,
        ),
        expected_js=expected_js(noise),
        covariance=None if covariance is None else CovarianceReport(
            k=covariance.k,
            n_samples=covariance.n_samples,
            off_diagonal_ratio=covariance.off_diagonal_ratio,
            trace=covariance.trace,
            min_eigenvalue=covariance.min_eigenvalue,
            psd=covariance.is_psd,
            degenerate=covariance.degenerate,
        ),
        null_baseline=None if null is None else NullBaselineReport(
            sigma_model=null.sigma_model,
            sigma_measured=null.sigma_measured,
            empirical_flip_rate=null.flip_stats.empirical_rate,
            predicted_flip_rate=null.flip_stats.predicted_rate,
            n_flips=null.flip_stats.n_flips,
            expected_js=null.expected_js,
            off_diagonal_ratio=null.covariance.off_diagonal_ratio if null.covariance else None,
            n_draws=null.n_draws,
            k=null.k,
        ),
        structured_noise=structured,
        degenerate=degenerate,
        calibration=calibration,
        margins_histogram=_margins_histogram(flips.margins),
        wall_time_seconds=wall_time_seconds,
    )
    if covariance is not None:
        report._sigma_matrix = covariance.sigma_matrix
    return report


def run_experiment(cfg: ExperimentConfig, n_jobs: Optional[int] = None) -> NoiseReport:
    """Run every trial of ``cfg`` and assemble the full noise report."""
    start = time.perf_counter()
    noise = run_trials(cfg, n_jobs=n_jobs or 1)
    report = summarize_noise(cfg, noise)
    report.wall_time_seconds = time.perf_counter() - start
    logger.info(
        "sigma=%.3e, flips=%d/%d, E[D_JS]=%.3e, R_off=%s (null %s) in %.1fs",
        report.sigma, report.flip_stats.n_flips, report.flip_stats.n_samples, report.expected_js,
        f"{report.covariance.off_diagonal_ratio:.4f}" if report.covariance else "n/a",
        f"{report.null_baseline.off_diagonal_ratio:.4f}" if report.null_baseline else "n/a",
        report.wall_time_seconds,
    )
    return report


PROFILE_SIZES = {
    "desk": dict(d_in=128, d_out=256, batch=16, n_trials=1_000),
    "full": dict(d_in=512, d_out=1024, batch=16, n_trials=10_000),
}


def desk_profile(precision: PrecisionFormat, seed: int, **overrides) -> ExperimentConfig:
    """Small, fast profile: d_in 128, d_out 256, B 16, N 1,000."""
    return ExperimentConfig(**{**PROFILE_SIZES["desk"], "precision": precision, "seed": seed, **overrides})


def full_profile(precision: PrecisionFormat, seed: int, **overrides) -> ExperimentConfig:
    """Full-size profile: d_in 512, d_out 1024, B 16, N 10,000."""
    return ExperimentConfig(**{**PROFILE_SIZES["full"], "precision": precision, "seed": seed, **overrides})
