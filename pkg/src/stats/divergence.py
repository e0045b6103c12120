"""Softmax and Jensen-Shannon divergence (natural log, bounded by ln 2)."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatchError
from .noise import Samples, as_noise_set


LN2 = math.log(2.0)

_ROW_CHUNK = 1024


def softmax(logits) -> np.ndarray:
    """Max-subtracted softmax over the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def _kl_to_mixture(p: np.ndarray, m: np.ndarray) -> np.ndarray:
    # 0 * log(0 / x) = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p / m), 0.0)
    return np.sum(terms, axis=-1)


def _js_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    M = 0.5 * (P + Q)
    js = 0.5 * (_kl_to_mixture(P, M) + _kl_to_mixture(Q, M))
    return np.clip(js, 0.0, LN2)


def js_divergence(p, q, atol: float = 1e-9) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape:
        raise ShapeMismatchError(f"distributions must be equal-length vectors, got {p.shape} and {q.shape}")
    for name, dist in (("p", p), ("q", q)):
        if dist.size == 0 or np.any(dist < 0) or abs(float(np.sum(dist)) - 1.0) > atol:
            raise ValueError(f"{name} is not a probability vector")
    return float(_js_rows(p[np.newaxis], q[np.newaxis])[0])


def expected_js(samples: Samples) -> float:
    """Mean D_JS(softmax(y_i) || softmax(y_tilde_i)) over trials, in trial order."""
    ns = as_noise_set(samples)
    per_trial = np.empty(ns.n, dtype=np.float64)
    for lo in range(0, ns.n, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, ns.n)
        per_trial[lo:hi] = _js_rows(softmax(ns.y[lo:hi]), softmax(ns.y_tilde[lo:hi]))
    return float(np.mean(per_trial))
