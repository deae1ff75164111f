"""Intensity of the path-loss point process on the positive half-line.

Mapping each BS of a planar PPP through its (random) blockage state and
the state's power law turns the deployment into an inhomogeneous PPP of
path-loss values. Its mean measure over [0, x) is

    Lambda(x) = int_0^{r_L(x)} 2 pi lam v e^{-beta v} dv
              + int_0^{r_N(x)} 2 pi lam v (1 - e^{-beta v}) dv,

with r_S(x) = (x / kappa_S)^(1/alpha_S) the farthest distance at which
state S still yields loss below x. Both pieces are elementary; the
small-beta*r regime needs a series for 1 - e^{-t}(1+t) to avoid
catastrophic cancellation.
"""

from __future__ import annotations

import math

import numpy as np

from ..model import SystemParams


def _one_minus_exp_linear(t: np.ndarray) -> np.ndarray:
    """Stable 1 - e^{-t} (1 + t), the radial integral of v e^{-beta v}."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < 1e-2
    ts = t[small]
    # sum_{k>=2} (-1)^k (k-1)/k! t^k, truncated well below double precision
    acc = np.zeros_like(ts)
    for k in range(8, 1, -1):
        coef = (-1.0) ** k * (k - 1) / math.factorial(k)
        acc = acc * ts + coef
    out[small] = acc * ts * ts  # polynomial in ts starting at t^2
    tl = t[~small]
    out[~small] = 1.0 - np.exp(-tl) * (1.0 + tl)
    return out


def _equiv_radius(x: np.ndarray, kappa: float, alpha: float) -> np.ndarray:
    return (x / kappa) ** (1.0 / alpha)


def intensity_measure(x, params: SystemParams) -> np.ndarray | float:
    """Mean number of BSs with path loss below x."""
    xx = np.asarray(x, dtype=float)
    if np.any(xx < 0):
        raise ValueError("path loss must be nonnegative")
    lam = params.bs_density
    beta = params.blockage
    r_los = _equiv_radius(xx, params.kappa_los, params.alpha_los)
    r_nlos = _equiv_radius(xx, params.kappa_nlos, params.alpha_nlos)
    if beta == 0.0:
        val = math.pi * lam * r_los ** 2
    else:
        scale = 2.0 * math.pi * lam / beta ** 2
        los_part = scale * _one_minus_exp_linear(beta * r_los)
        nlos_part = math.pi * lam * r_nlos ** 2 - scale * _one_minus_exp_linear(beta * r_nlos)
        val = los_part + nlos_part
    if np.isscalar(x):
        return float(val)
    return val


def intensity_density(x, params: SystemParams) -> np.ndarray | float:
    """Derivative of the intensity measure with respect to path loss."""
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0):
        raise ValueError("the density is defined for positive path loss")
    lam = params.bs_density
    beta = params.blockage
    a_l, k_l = params.alpha_los, params.kappa_los
    a_n, k_n = params.alpha_nlos, params.kappa_nlos
    r_los = _equiv_radius(xx, k_l, a_l)
    r_nlos = _equiv_radius(xx, k_n, a_n)
    los = (2.0 * math.pi * lam / (a_l * k_l ** (2.0 / a_l))) \
        * xx ** (2.0 / a_l - 1.0) * np.exp(-beta * r_los)
    if beta == 0.0:
        nlos = np.zeros_like(xx)
    else:
        nlos = (2.0 * math.pi * lam / (a_n * k_n ** (2.0 / a_n))) \
            * xx ** (2.0 / a_n - 1.0) * (-np.expm1(-beta * r_nlos))
    val = los + nlos
    if np.isscalar(x):
        return float(val)
    return val


def intensity_inverse(u, params: SystemParams) -> np.ndarray | float:
    """Path loss x with intensity_measure(x) = u, elementwise.

    Bisection on log(x) after an exponential bracket search; the
    intensity is strictly increasing so the root is unique.
    """
    uu = np.asarray(u, dtype=float)
    if np.any(uu < 0):
        raise ValueError("intensity values must be nonnegative")
    flat = np.atleast_1d(uu.astype(float)).ravel()
    out = np.zeros_like(flat)
    pos = flat > 0.0
    if pos.any():
        target = flat[pos]
        # initial guess from the two single-state power laws
        lam = params.bs_density
        guess_los = params.kappa_los * (target / (math.pi * lam)) ** (params.alpha_los / 2.0)
        guess_nlos = params.kappa_nlos * (target / (math.pi * lam)) ** (params.alpha_nlos / 2.0)
        lo = np.minimum(guess_los, guess_nlos) * 1e-6
        hi = np.maximum(guess_los, guess_nlos) * 1e6
        for _ in range(200):
            grow = np.asarray(intensity_measure(hi, params)) < target
            if not grow.any():
                break
            hi[grow] *= 8.0
        for _ in range(200):
            shrink = np.asarray(intensity_measure(lo, params)) > target
            if not shrink.any():
                break
            lo[shrink] /= 8.0
        llo, lhi = np.log(lo), np.log(hi)
        for _ in range(100):
            mid = 0.5 * (llo + lhi)
            below = np.asarray(intensity_measure(np.exp(mid), params)) < target
            llo = np.where(below, mid, llo)
            lhi = np.where(below, lhi, mid)
        out[pos] = np.exp(0.5 * (llo + lhi))
    out = out.reshape(np.shape(uu)) if np.ndim(uu) else out[0]
    if np.isscalar(u):
        return float(out)
    return out


def nth_pathloss_pdf(x, n: int, params: SystemParams) -> np.ndarray | float:
    """Density of the n-th smallest path loss seen at the origin.

    Standard order-statistics form for a PPP:
    Lambda(x)^(n-1) Lambda'(x) exp(-Lambda(x)) / (n-1)!.
    """
    if n < 1 or int(n) != n:
        raise ValueError("order n must be a positive integer")
    xx = np.asarray(x, dtype=float)
    big_l = np.asarray(intensity_measure(xx, params), dtype=float)
    dens = np.asarray(intensity_density(xx, params), dtype=float)
    val = big_l ** (n - 1) * dens * np.exp(-big_l) / math.factorial(n - 1)
    if np.isscalar(x):
        return float(val)
    return val


def joint_pathloss_pdf(x_ordered, params: SystemParams) -> float:
    """Joint density of the N smallest path losses at their ordered values.

    For x_1 <= ... <= x_N this is prod_n Lambda'(x_n) * exp(-Lambda(x_N)).
    """
    xs = np.asarray(x_ordered, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("expected a 1-D ordered vector of path losses")
    if np.any(np.diff(xs) < 0):
        raise ValueError("path losses must be sorted ascending")
    dens = np.asarray(intensity_density(xs, params), dtype=float)
    tail = float(np.asarray(intensity_measure(xs[-1], params)))
    return float(np.prod(dens) * math.exp(-tail))
