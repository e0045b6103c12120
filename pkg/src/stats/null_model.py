"""Matched i.i.d. Gaussian null: what every metric looks like when the noise really is N(0, sigma^2 I)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DegenerateModelError, ShapeMismatchError
from .covariance import CovarianceSummary, estimate_covariance
from .divergence import expected_js
from .noise import FlipStats, NoiseSet, estimate_sigma, flip_stats

logger = logging.getLogger(__name__)

_UINT64 = 1 << 64


@dataclass(frozen=True)
class NullBaseline:
    sigma_model: float
    sigma_measured: float
    flip_stats: FlipStats
    expected_js: float
    covariance: Optional[CovarianceSummary]
    n_draws: int
    k: int


def simulate_iid_null(y_list, sigma: float, seed: int, n_draws: int,
                      with_covariance: bool = True) -> NullBaseline:
    """Draw eta ~ N(0, sigma^2 I) around the given outputs and run every estimator.

    Draw t perturbs ``y_list[t % len(y_list)]``. Flip predictions use the model
    sigma, so the empirical flip rate can be checked against them directly.
    """
    if not sigma > 0.0:
        raise DegenerateModelError(f"null model needs sigma > 0, got {sigma!r}")
    if n_draws < 2:
        raise ValueError(f"n_draws must be at least 2, got {n_draws}")
    base = np.atleast_2d(np.asarray(y_list, dtype=np.float64))
    if base.shape[0] == 0 or base.shape[1] == 0:
        raise ShapeMismatchError("y_list must hold at least one non-empty output vector")

    rng = np.random.default_rng(np.random.SeedSequence(int(seed) % _UINT64))
    y = base[np.arange(n_draws) % base.shape[0]]
    eta = rng.normal(0.0, sigma, size=y.shape)
    noise = NoiseSet(y, y + eta)
    logger.debug("i.i.d. null: %d draws over K=%d logits, sigma=%.3e", n_draws, y.shape[1], sigma)

    return NullBaseline(
        sigma_model=float(sigma),
        sigma_measured=estimate_sigma(noise),
        flip_stats=flip_stats(noise, sigma=sigma),
        expected_js=expected_js(noise),
        covariance=estimate_covariance(noise) if with_covariance else None,
        n_draws=n_draws,
        k=y.shape[1],
    )
