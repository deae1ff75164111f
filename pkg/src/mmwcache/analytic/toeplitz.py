"""Exponential of a lower-triangular Toeplitz matrix via its symbol.

A lower-triangular Toeplitz matrix is determined by its first column
(w_0, ..., w_{K-1}); its exponential is again lower-triangular Toeplitz
and its first column holds the power-series coefficients of
exp(sum_j w_j z^j). Those coefficients follow from differentiating the
generating function once:

    x_0 = exp(w_0),   x_m = sum_{j=0}^{m-1} ((m-j)/m) * w_{m-j} * x_j.

The induced l1 norm of the exponential equals the first-column sum when
the off-diagonal coefficients are nonnegative, which is the only regime
the success-probability formulas produce.
"""

from __future__ import annotations

import numpy as np


def toeplitz_exp_column(omega) -> np.ndarray:
    """First column of expm(T(omega)) for a single coefficient vector."""
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("omega must be a nonempty 1-D coefficient vector")
    return toeplitz_exp_column_batch(w[None, :])[0]


def toeplitz_exp_column_batch(omega: np.ndarray) -> np.ndarray:
    """Vectorized first columns: (B, K) coefficients -> (B, K) columns."""
    w = np.asarray(omega, dtype=float)
    if w.ndim != 2 or w.shape[1] == 0:
        raise ValueError("omega batch must have shape (B, K), K >= 1")
    b, k = w.shape
    x = np.zeros((b, k))
    x[:, 0] = np.exp(w[:, 0])
    for m in range(1, k):
        j = np.arange(m)
        # sum_j ((m-j)/m) w_{m-j} x_j
        x[:, m] = np.einsum("bj,bj->b", w[:, m - j] * ((m - j) / m), x[:, :m])
    return x


def toeplitz_exp_l1(omega) -> float:
    """Sum of the first column of expm(T(omega)).

    For the nonnegative off-diagonal coefficients produced by the
    success-probability construction this equals ||expm(T)||_1.
    """
    return float(toeplitz_exp_column(np.asarray(omega, dtype=float)).sum())


def toeplitz_exp_l1_batch(omega: np.ndarray) -> np.ndarray:
    return toeplitz_exp_column_batch(omega).sum(axis=1)
