"""Noise samples and the i.i.d. model's noise-level and flip-rate estimators.

A trial compares the ideal output ``y`` with its perturbed counterpart
``y_tilde``; the noise is ``eta = y_tilde - y``. Estimators accept either a
list of NoiseSample objects or a stacked NoiseSet and always reduce in trial
order, so results do not depend on how trials were produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import DegenerateModelError, ShapeMismatchError
from .normal import normal_cdf


@dataclass(frozen=True)
class NoiseSample:
    y: np.ndarray
    y_tilde: np.ndarray
    eta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        y_tilde = np.asarray(self.y_tilde, dtype=np.float64)
        if y.ndim != 1 or y.shape != y_tilde.shape:
            raise ShapeMismatchError(f"y and y_tilde must be equal-length vectors, got {y.shape} and {y_tilde.shape}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y_tilde", y_tilde)
        object.__setattr__(self, "eta", y_tilde - y)

    @property
    def k(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class NoiseSet:
    """N trials stacked row-wise: ``y`` and ``y_tilde`` are N x K."""

    y: np.ndarray
    y_tilde: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        y_tilde = np.asarray(self.y_tilde, dtype=np.float64)
        if y.ndim != 2 or y.shape != y_tilde.shape:
            raise ShapeMismatchError(f"y and y_tilde must be equal N x K arrays, got {y.shape} and {y_tilde.shape}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "y_tilde", y_tilde)

    @classmethod
    def from_samples(cls, samples: Sequence[NoiseSample]) -> "NoiseSet":
        if len(samples) == 0:
            raise ValueError("empty sample list")
        ks = {s.k for s in samples}
        if len(ks) != 1:
            raise ShapeMismatchError(f"samples have differing logit counts: {sorted(ks)}")
        return cls(np.stack([s.y for s in samples]), np.stack([s.y_tilde for s in samples]))

    @property
    def eta(self) -> np.ndarray:
        return self.y_tilde - self.y

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.y.shape[1]

    def __len__(self) -> int:
        return self.n

    def sample(self, index: int) -> NoiseSample:
        return NoiseSample(self.y[index], self.y_tilde[index])


Samples = Union[NoiseSet, Sequence[NoiseSample]]


def as_noise_set(samples: Samples) -> NoiseSet:
    if isinstance(samples, NoiseSet):
        if samples.n == 0:
            raise ValueError("empty sample list")
        return samples
    return NoiseSet.from_samples(samples)


def estimate_sigma(samples: Samples) -> float:
    """Global RMSE of the noise over all N trials and K logits (no mean-centering)."""
    ns = as_noise_set(samples)
    if ns.k == 0:
        raise ShapeMismatchError("samples have no logits")
    return float(np.sqrt(np.mean(np.square(ns.eta))))


def sigma_standard_error(samples: Samples) -> float:
    """Delta-method standard error of ``estimate_sigma``, treating trials as i.i.d."""
    ns = as_noise_set(samples)
    if ns.n < 2:
        raise ValueError("standard error needs at least two trials")
    per_trial = np.mean(np.square(ns.eta), axis=1)
    sigma = math.sqrt(float(np.mean(per_trial)))
    if sigma == 0.0:
        return 0.0
    se_var = float(np.std(per_trial, ddof=1)) / math.sqrt(ns.n)
    return se_var / (2.0 * sigma)


def logit_margins(y_rows) -> np.ndarray:
    """Top-minus-runner-up margin of every row; a single-logit row has margin +inf."""
    y_rows = np.atleast_2d(np.asarray(y_rows, dtype=np.float64))
    k = y_rows.shape[1]
    if k == 0:
        raise ShapeMismatchError("rows have no logits")
    if k == 1:
        return np.full(y_rows.shape[0], np.inf)
    top_two = np.partition(y_rows, k - 2, axis=1)[:, k - 2:]
    return top_two[:, 1] - top_two[:, 0]


def flip_mask(samples: Samples) -> np.ndarray:
    # np.argmax returns the first maximal index: ties go to the lowest index
    ns = as_noise_set(samples)
    return np.argmax(ns.y, axis=1) != np.argmax(ns.y_tilde, axis=1)


def empirical_flip_rate(samples: Samples) -> float:
    """Fraction of trials whose argmax differs between y and y_tilde."""
    mask = flip_mask(samples)
    return int(mask.sum()) / mask.shape[0]


def predicted_flip_rate(margins, sigma: float) -> float:
    """Mean over trials of Phi(-margin / (sigma * sqrt(2))), the i.i.d. model's flip rate."""
    if not sigma > 0.0:
        raise DegenerateModelError(f"flip model undefined for sigma={sigma!r}")
    margins = np.asarray(margins, dtype=np.float64).reshape(-1)
    if margins.size == 0:
        raise ValueError("no margins given")
    if np.any(np.isnan(margins)) or np.any(margins < 0):
        raise ValueError("margins must be non-negative")
    z = -margins / (sigma * math.sqrt(2.0))
    return float(np.mean(normal_cdf(z)))


def binomial_standard_error(p: float, n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass(frozen=True)
class FlipStats:
    empirical_rate: float
    predicted_rate: Optional[float]
    sigma: float
    margins: np.ndarray = field(repr=False)
    n_flips: int
    n_samples: int

    @property
    def degenerate(self) -> bool:
        return self.predicted_rate is None


def flip_stats(samples: Samples, sigma: Optional[float] = None) -> FlipStats:
    """Empirical and model-predicted flip rates; the prediction is None when sigma == 0."""
    ns = as_noise_set(samples)
    if sigma is None:
        sigma = estimate_sigma(ns)
    margins = logit_margins(ns.y)
    n_flips = int(flip_mask(ns).sum())
    predicted = predicted_flip_rate(margins, sigma) if sigma > 0.0 else None
    return FlipStats(
        empirical_rate=n_flips / ns.n,
        predicted_rate=predicted,
        sigma=float(sigma),
        margins=margins,
        n_flips=n_flips,
        n_samples=ns.n,
    )
