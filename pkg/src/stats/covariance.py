"""Sample covariance of the noise vectors and its off-diagonal ratio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .noise import Samples, as_noise_set


@dataclass(frozen=True)
class CovarianceSummary:
    sigma_matrix: np.ndarray = field(repr=False)
    off_diagonal_ratio: float
    trace: float
    n_samples: int
    min_eigenvalue: float
    degenerate: bool = False

    @property
    def k(self) -> int:
        return self.sigma_matrix.shape[0]

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -1e-9 * max(self.trace, 0.0)


def off_diagonal_ratio(matrix) -> float:
    """Share of absolute matrix mass off the diagonal; 0 for an all-zero matrix."""
    a = np.abs(np.asarray(matrix, dtype=np.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    total = float(a.sum())
    if total == 0.0:
        return 0.0
    off = total - float(np.trace(a))
    return min(max(off / total, 0.0), 1.0)


def estimate_covariance(samples: Samples) -> CovarianceSummary:
    """Unbiased (N - 1) sample covariance of the mean-centered noise."""
    ns = as_noise_set(samples)
    if ns.n < 2:
        raise ValueError(f"covariance needs at least two samples, got {ns.n}")
    eta = ns.eta
    centered = eta - eta.mean(axis=0)
    sigma = centered.T @ centered / (ns.n - 1)
    sigma = 0.5 * (sigma + sigma.T)
    trace = float(np.trace(sigma))
    degenerate = not np.any(sigma)
    return CovarianceSummary(
        sigma_matrix=sigma,
        off_diagonal_ratio=off_diagonal_ratio(sigma),
        trace=trace,
        n_samples=ns.n,
        min_eigenvalue=0.0 if degenerate else float(np.linalg.eigvalsh(sigma)[0]),
        degenerate=degenerate,
    )
