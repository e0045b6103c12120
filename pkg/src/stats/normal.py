"""Standard normal CDF via the complementary error function."""

import math
from typing import Union

import numpy as np


_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _phi(z: float) -> float:
    # erfc keeps full absolute accuracy on both tails
    return 0.5 * math.erfc(-z * _INV_SQRT2)


_phi_vec = np.vectorize(_phi, otypes=[np.float64])


def normal_cdf(z: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Phi(z) for a scalar or an array, absolute error below 1e-12."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.ndim == 0:
        return _phi(float(arr))
    if arr.size == 0:
        return np.empty(arr.shape, dtype=np.float64)
    return _phi_vec(arr)
