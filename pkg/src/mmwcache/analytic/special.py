"""Gauss hypergeometric evaluation on the real slice used by the closed forms.

The coverage and delay closed forms only ever need 2F1(a, b; c; z) with
real parameters and real z < 1 (typically a = -2/alpha, b = 1,
c = 1 - 2/alpha, z = -threshold). Direct series summation handles
moderate |z|; a Pfaff transform maps z < 0 into (0, 1); far negative z
goes through the 1/z connection formula.
"""

from __future__ import annotations

import math

import numpy as np


class ConvergenceError(RuntimeError):
    """Series did not settle within the iteration budget."""


def _is_nonpositive_int(x: float, tol: float = 1e-12) -> bool:
    return x <= tol and abs(x - round(x)) < tol


def _series_vec(a: float, b: float, c: float, z: np.ndarray,
                max_terms: int = 200000, tol: float = 5e-17) -> np.ndarray:
    """Sum the defining series elementwise for |z| < 1."""
    total = np.ones_like(z)
    term = np.ones_like(z)
    settled = np.zeros(z.shape, dtype=bool)
    for k in range(max_terms):
        term = term * ((a + k) * (b + k)) / ((c + k) * (1.0 + k)) * z
        total = total + np.where(settled, 0.0, term)
        settled |= np.abs(term) <= tol * np.abs(total)
        if settled.all():
            return total
        if a + k == 0 or b + k == 0:
            return total
    raise ConvergenceError(
        f"2F1 series for a={a}, b={b}, c={c} left {int((~settled).sum())} "
        f"points unconverged after {max_terms} terms"
    )


def _pfaff_vec(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    # 2F1(a,b;c;z) = (1-z)^(-b) * 2F1(c-a, b; c; z/(z-1))
    w = z / (z - 1.0)
    return (1.0 - z) ** (-b) * _series_vec(c - a, b, c, w)


def _inverse_arg_vec(a: float, b: float, c: float, z: np.ndarray) -> np.ndarray:
    # Connection formula in 1/z, valid for z < 0 when a - b is not an integer.
    ga = math.gamma
    coef1 = ga(c) * ga(b - a) / (ga(b) * ga(c - a))
    coef2 = ga(c) * ga(a - b) / (ga(a) * ga(c - b))
    inv = 1.0 / z
    f1 = _series_vec(a, 1.0 - c + a, 1.0 - b + a, inv)
    f2 = _series_vec(b, 1.0 - c + b, 1.0 - a + b, inv)
    return coef1 * (-z) ** (-a) * f1 + coef2 * (-z) ** (-b) * f2


def gauss_2f1_vec(a: float, b: float, c: float, z) -> np.ndarray:
    """Elementwise 2F1 over an array of real arguments z < 1."""
    zz = np.asarray(z, dtype=float)
    if np.any(zz >= 1.0):
        raise ValueError("gauss_2f1 requires z < 1 on the real line")
    if _is_nonpositive_int(c):
        raise ValueError(f"2F1 undefined at nonpositive integer c={c}")
    flat = zz.ravel()
    out = np.empty_like(flat)

    direct = np.abs(flat) <= 0.9
    mid = (~direct) & (flat < 0.0) & (flat >= -60.0)
    far = flat < -60.0
    high = (~direct) & (flat > 0.0)  # z in (0.9, 1): series, just slower

    if direct.any():
        out[direct] = _series_vec(a, b, c, flat[direct])
    if high.any():
        out[high] = _series_vec(a, b, c, flat[high], max_terms=2000000)
    if mid.any():
        out[mid] = _pfaff_vec(a, b, c, flat[mid])
    if far.any():
        ab_int = abs((a - b) - round(a - b)) < 1e-9
        if ab_int or _is_nonpositive_int(a) or _is_nonpositive_int(b):
            out[far] = _pfaff_vec(a, b, c, flat[far])
        else:
            out[far] = _inverse_arg_vec(a, b, c, flat[far])
    return out.reshape(zz.shape)


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric 2F1 at a real point z < 1.

    Accurate to roughly 1e-12 relative on the parameter family the
    closed forms use (a in (-1, 0], b = 1, c = 1 + a, z <= 0) and on
    ordinary series-dominated arguments (|z| < 1).
    """
    return float(gauss_2f1_vec(a, b, c, np.asarray([float(z)]))[0])


def interference_hyp_factor(alpha: float, t) -> np.ndarray:
    """2F1(-2/alpha, 1; 1-2/alpha; -t) for t >= 0, vectorized.

    This is the tail-interference factor of the no-blockage closed
    forms: 1 plus the normalized mean interference seen past the
    serving link. Equals 1 at t = 0 and grows without bound in t.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("threshold argument must be nonnegative")
    delta = 2.0 / alpha
    return gauss_2f1_vec(-delta, 1.0, 1.0 - delta, -tt)
