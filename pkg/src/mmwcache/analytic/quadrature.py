"""Deterministic integration back end for the coverage and delay formulas.

Two schemes cover every integral the engine needs: panel-adaptive
Gauss-Legendre in one and two dimensions (embedded low/high order pair
for the error estimate, panels refined worst-first, all function
evaluations batched into single vectorized calls), and scrambled Sobol
sampling for the higher-dimensional ordered-cone integrals where
adaptivity stops paying.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc


class QuadratureError(RuntimeError):
    """Raised when the error estimate will not meet the requested tolerance."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and budget knobs shared by the analytic operations.

    ``u_max`` truncates the transformed serving-link coordinate; the
    neglected tail carries intensity mass exp(-u_max). ``method`` picks
    between the adaptive panels ("adaptive") and Sobol sampling ("qmc")
    for integrals where both apply; dimensions >= 3 always use Sobol.
    """

    method: str = "adaptive"
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    max_evals: int = 2_000_000
    u_max: float = 45.0
    qmc_points: int = 2 ** 18
    qmc_seed: int = 7

    def __post_init__(self):
        if self.method not in ("adaptive", "qmc"):
            raise ValueError("method must be 'adaptive' or 'qmc'")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1000:
            raise ValueError("max_evals too small to be useful")
        if self.u_max <= 1:
            raise ValueError("u_max must exceed 1")
        if self.qmc_points < 1024:
            raise ValueError("qmc_points too small for a stable estimate")


@lru_cache(maxsize=32)
def gauss_legendre_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (0, 1)."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (0.5 * (x + 1.0), 0.5 * w)


_LOW, _HIGH = 8, 16
_LOW2, _HIGH2 = 6, 12

# Ceiling on the points batched into one f call during refinement. The
# engine's integrands fan each outer point into a ~100-node inner rule,
# so an uncapped round on a hard integrand would exhaust memory long
# before it exhausts the evaluation budget.
_MAX_POINTS_PER_ROUND = 100_000


def _panel_estimates_1d(f, panels: np.ndarray, n_components: int):
    """Coarse/fine Gauss-Legendre estimates on each (a, b) panel row."""
    xs_lo, ws_lo = gauss_legendre_nodes(_LOW)
    xs_hi, ws_hi = gauss_legendre_nodes(_HIGH)
    a = panels[:, 0:1]
    width = (panels[:, 1] - panels[:, 0])[:, None]
    pts = np.concatenate([a + width * xs_lo, a + width * xs_hi], axis=1)
    vals = np.asarray(f(pts.ravel()), dtype=float)
    vals = vals.reshape(pts.shape[0], pts.shape[1], n_components)
    lo = np.einsum("pnk,n->pk", vals[:, :_LOW, :], ws_lo) * width
    hi = np.einsum("pnk,n->pk", vals[:, _LOW:, :], ws_hi) * width
    err = np.abs(hi - lo).max(axis=1)
    return hi, err, pts.shape[0] * pts.shape[1]


def integrate_1d(f, a: float, b: float, spec: QuadratureSpec,
                 n_components: int = 1, initial_panels: int = 8) -> np.ndarray:
    """Adaptive panel integration of a vectorized f over (a, b).

    ``f`` maps a flat array of points to an array of shape (npts,) or
    (npts, n_components); the return value has shape (n_components,).
    """
    if not b > a:
        raise ValueError("integration interval must have positive length")
    edges = np.linspace(a, b, initial_panels + 1)
    panels = np.column_stack([edges[:-1], edges[1:]])
    vals, errs, used = _panel_estimates_1d(f, panels, n_components)
    evals = used
    while True:
        total = vals.sum(axis=0)
        tol = max(spec.abs_tol, spec.rel_tol * float(np.abs(total).max()))
        if errs.sum() <= tol:
            return total
        if evals >= spec.max_evals:
            raise QuadratureError(
                "1-D quadrature exceeded its evaluation budget",
                {"error_estimate": float(errs.sum()), "tolerance": tol,
                 "evaluations": evals, "panels": panels.shape[0]},
            )
        k = max(1, panels.shape[0] // 4)
        k = min(k, _MAX_POINTS_PER_ROUND // (2 * (_LOW + _HIGH)))
        worst = np.argsort(errs)[-k:]
        mid = panels[worst].mean(axis=1)
        halves = np.concatenate([
            np.column_stack([panels[worst, 0], mid]),
            np.column_stack([mid, panels[worst, 1]]),
        ])
        new_vals, new_errs, used = _panel_estimates_1d(f, halves, n_components)
        evals += used
        keep = np.ones(panels.shape[0], dtype=bool)
        keep[worst] = False
        panels = np.concatenate([panels[keep], halves])
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])


def _cell_estimates_2d(f, cells: np.ndarray, n_components: int):
    xs_lo, ws_lo = gauss_legendre_nodes(_LOW2)
    xs_hi, ws_hi = gauss_legendre_nodes(_HIGH2)

    def tensor(xs, ws):
        gx, gy = np.meshgrid(xs, xs, indexing="ij")
        wxy = np.outer(ws, ws).ravel()
        return gx.ravel(), gy.ravel(), wxy

    gx_lo, gy_lo, w_lo = tensor(xs_lo, ws_lo)
    gx_hi, gy_hi, w_hi = tensor(xs_hi, ws_hi)
    x0, x1, y0, y1 = (cells[:, i] for i in range(4))
    wx = (x1 - x0)[:, None]
    wy = (y1 - y0)[:, None]
    px = np.concatenate([x0[:, None] + wx * gx_lo, x0[:, None] + wx * gx_hi], axis=1)
    py = np.concatenate([y0[:, None] + wy * gy_lo, y0[:, None] + wy * gy_hi], axis=1)
    vals = np.asarray(f(px.ravel(), py.ravel()), dtype=float)
    vals = vals.reshape(px.shape[0], px.shape[1], n_components)
    n_lo = gx_lo.size
    area = (wx * wy)
    lo = np.einsum("pnk,n->pk", vals[:, :n_lo, :], w_lo) * area
    hi = np.einsum("pnk,n->pk", vals[:, n_lo:, :], w_hi) * area
    err = np.abs(hi - lo).max(axis=1)
    return hi, err, px.shape[0] * px.shape[1]


def integrate_2d(f, spec: QuadratureSpec, n_components: int = 1,
                 initial_grid: int = 4) -> np.ndarray:
    """Adaptive tensor-panel integration of f(x, y) over the unit square."""
    edges = np.linspace(0.0, 1.0, initial_grid + 1)
    cells = np.array([
        (edges[i], edges[i + 1], edges[j], edges[j + 1])
        for i in range(initial_grid) for j in range(initial_grid)
    ])
    vals, errs, used = _cell_estimates_2d(f, cells, n_components)
    evals = used
    while True:
        total = vals.sum(axis=0)
        tol = max(spec.abs_tol, spec.rel_tol * float(np.abs(total).max()))
        if errs.sum() <= tol:
            return total
        if evals >= spec.max_evals:
            raise QuadratureError(
                "2-D quadrature exceeded its evaluation budget",
                {"error_estimate": float(errs.sum()), "tolerance": tol,
                 "evaluations": evals, "cells": cells.shape[0]},
            )
        k = max(1, cells.shape[0] // 4)
        k = min(k, _MAX_POINTS_PER_ROUND // (4 * (_LOW2 ** 2 + _HIGH2 ** 2)))
        worst = np.argsort(errs)[-k:]
        quads = []
        for x0, x1, y0, y1 in cells[worst]:
            xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            quads += [(x0, xm, y0, ym), (xm, x1, y0, ym),
                      (x0, xm, ym, y1), (xm, x1, ym, y1)]
        quads = np.array(quads)
        new_vals, new_errs, used = _cell_estimates_2d(f, quads, n_components)
        evals += used
        keep = np.ones(cells.shape[0], dtype=bool)
        keep[worst] = False
        cells = np.concatenate([cells[keep], quads])
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])


def integrate_fixed_1d(f, a: float, b: float, n_components: int = 1,
                       panels: int = 512, order: int = 4) -> np.ndarray:
    """Single-pass composite Gauss-Legendre rule, no error control.

    For bounded integrands with jumps (event indicators under a smooth
    weight) where adaptivity would chase the discontinuity forever and
    a coarse value is all that is needed.
    """
    xs, ws = gauss_legendre_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    width = (b - a) / panels
    pts = (edges[:-1, None] + width * xs[None, :]).ravel()
    vals = np.asarray(f(pts), dtype=float).reshape(panels, order, n_components)
    return np.einsum("pnk,n->k", vals, ws) * width


def integrate_fixed_2d(f, n_components: int = 1, grid: int = 40,
                       order: int = 4) -> np.ndarray:
    """2-D counterpart of integrate_fixed_1d on the unit square."""
    xs, ws = gauss_legendre_nodes(order)
    edges = np.linspace(0.0, 1.0, grid + 1)[:-1]
    width = 1.0 / grid
    axis = (edges[:, None] + width * xs[None, :]).ravel()
    px, py = np.meshgrid(axis, axis, indexing="ij")
    vals = np.asarray(f(px.ravel(), py.ravel()), dtype=float)
    vals = vals.reshape(grid, order, grid, order, n_components)
    return np.einsum("paqbk,a,b->k", vals, ws, ws) * width * width


def integrate_qmc(f, dim: int, spec: QuadratureSpec,
                  n_components: int = 1, chunk: int = 16384) -> np.ndarray:
    """Scrambled-Sobol mean of f over the unit cube, times its volume (1).

    Deterministic for a fixed spec: the scramble seed is part of the
    spec, and chunking does not change the accumulated sum.
    """
    n = 1 << int(np.ceil(np.log2(spec.qmc_points)))
    sampler = qmc.Sobol(d=dim, scramble=True, seed=spec.qmc_seed)
    points = sampler.random(n)
    acc = np.zeros(n_components)
    for start in range(0, n, chunk):
        block = points[start:start + chunk]
        vals = np.asarray(f(*(block[:, i] for i in range(dim))), dtype=float)
        vals = vals.reshape(block.shape[0], n_components)
        acc += vals.sum(axis=0)
    return acc / n
