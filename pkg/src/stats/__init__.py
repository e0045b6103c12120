from .covariance import CovarianceSummary, estimate_covariance, off_diagonal_ratio
from .divergence import expected_js, js_divergence, softmax
from .noise import (
    FlipStats,
    NoiseSample,
    NoiseSet,
    binomial_standard_error,
    empirical_flip_rate,
    estimate_sigma,
    flip_stats,
    logit_margins,
    predicted_flip_rate,
    sigma_standard_error,
)
from .normal import normal_cdf
from .null_model import NullBaseline, simulate_iid_null

__all__ = [
    "CovarianceSummary",
    "FlipStats",
    "NoiseSample",
    "NoiseSet",
    "NullBaseline",
    "binomial_standard_error",
    "empirical_flip_rate",
    "estimate_covariance",
    "estimate_sigma",
    "expected_js",
    "flip_stats",
    "js_divergence",
    "logit_margins",
    "normal_cdf",
    "off_diagonal_ratio",
    "predicted_flip_rate",
    "sigma_standard_error",
    "simulate_iid_null",
    "softmax",
]
