"""Ornstein-Uhlenbeck process, OU bridge and related Gaussian kernels.

Kinds of kernel:

``process``     OU started at 0, ``E[Z_s Z_t] = e^{-ct} sinh(cs)/c`` (s <= t)
``bridge``      OU tied down at 1, ``sinh(cs) sinh(c(1-t)) / (c sinh c)``
``stationary``  two-sided stationary OU, ``e^{-|t-s|}``
``pittel``      ``e^{-|t-s|}/(2 cosh s cosh t) - (pi^2/6) h(s) h(t)`` with
                ``h(t) = (6/pi^2) (t tanh t - log(2 cosh t))``: the process
                ``Y_s / (sqrt(2) cosh s)`` (Y stationary OU) conditioned on
                zero integral over R (no sampler)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .shape import L_inf, _sinh_over, bridge_kernel

__all__ = [
    "KINDS",
    "GaussianPath",
    "ou_covariance",
    "pittel_h",
    "covariance_matrix",
    "sample_ou_process",
    "sample_ou_bridge",
    "sample_stationary_ou",
]

KINDS = ("process", "bridge", "stationary", "pittel")


@dataclass(frozen=True, eq=False)
class GaussianPath:
    """Values of a Gaussian process on ``grid``.

    ``values`` has shape ``(len(grid),)`` for one path or ``(size, len(grid))``
    for a batch.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.shape(self.values)[-1] != len(self.grid):
            raise ValueError("values and grid lengths differ")


def pittel_h(t):
    """``(6/pi^2)(t tanh t - log(2 cosh t))``.

    ``-(pi^2/6) h`` is the covariance of ``Y_s / (sqrt(2) cosh s)`` with its
    integral, whose variance is ``pi^2/6``.
    """
    t = np.asarray(t, dtype=float)
    return 6 / math.pi**2 * (t * np.tanh(t) - L_inf(t))


def ou_covariance(c: float, s, t, kind: str = "bridge"):
    """Covariance ``E[Y_s Y_t]`` for the given ``kind``; symmetric in ``(s, t)``."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    if kind == "bridge":
        return bridge_kernel(c, s, t)
    if kind == "process":
        lo, hi = np.minimum(s, t), np.maximum(s, t)
        out = np.exp(-c * hi) * _sinh_over(c, lo)
    elif kind == "stationary":
        out = np.exp(-np.abs(t - s))
    elif kind == "pittel":
        out = (
            np.exp(-np.abs(t - s)) / (2 * np.cosh(s) * np.cosh(t))
            - math.pi**2 / 6 * pittel_h(s) * pittel_h(t)
        )
    else:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")
    return float(out) if out.ndim == 0 else out


def covariance_matrix(c: float, grid, kind: str = "bridge") -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    return np.asarray(ou_covariance(c, grid[:, None], grid[None, :], kind))


def _check_grid(grid, lo=None, hi=None):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if lo is not None and (grid[0] < lo or grid[-1] > hi):
        raise ValueError(f"grid must lie in [{lo}, {hi}]")
    return grid


def sample_ou_process(c: float, grid, rng: np.random.Generator, size: int | None = None) -> GaussianPath:
    """OU from 0 as a time-changed Brownian motion ``e^{-ct} B((e^{2ct} - 1) / 2c)``."""
    grid = _check_grid(grid, 0.0, math.inf)
    clock = np.exp(c * grid) * _sinh_over(c, grid)  # (e^{2ct} - 1) / 2c
    shape = (len(grid),) if size is None else (size, len(grid))
    increments = rng.standard_normal(shape) * np.sqrt(np.diff(clock, prepend=0.0))
    brownian = np.cumsum(increments, axis=-1)
    return GaussianPath(grid, np.exp(-c * grid) * brownian)


def sample_ou_bridge(c: float, grid, rng: np.random.Generator, size: int | None = None,
                     method: str = "cholesky") -> GaussianPath:
    """Exact OU bridge on ``grid`` (a subset of [0, 1]).

    ``method="cholesky"`` factors the bridge covariance on the interior grid
    points; points at 0 or 1 are exact zeros.  ``method="pinning"`` samples
    the OU process ``Z`` on ``grid`` and at 1 and returns
    ``Z_t - sinh(ct)/sinh(c) Z_1``.
    """
    grid = _check_grid(grid, 0.0, 1.0)
    shape = (len(grid),) if size is None else (size, len(grid))
    if method == "pinning":
        full = np.append(grid, 1.0) if grid[-1] < 1.0 else grid
        z = sample_ou_process(c, full, rng, size).values
        pin = _sinh_over(c, grid) / _sinh_over(c, 1.0)
        values = z[..., : len(grid)] - pin * z[..., -1:]
        values[..., (grid == 0.0) | (grid == 1.0)] = 0.0
        return GaussianPath(grid, values)
    if method != "cholesky":
        raise ValueError(f"unknown method {method!r}")
    values = np.zeros(shape)
    inner = (grid > 0.0) & (grid < 1.0)
    if inner.any():
        chol = np.linalg.cholesky(covariance_matrix(c, grid[inner], "bridge"))
        z = rng.standard_normal(shape[:-1] + (int(inner.sum()),))
        values[..., inner] = z @ chol.T
    return GaussianPath(grid, values)


def sample_stationary_ou(grid, rng: np.random.Generator, size: int | None = None) -> GaussianPath:
    """Two-sided stationary OU (covariance ``e^{-|t-s|}``) by its Markov recursion."""
    grid = _check_grid(grid)
    shape = (len(grid),) if size is None else (size, len(grid))
    z = rng.standard_normal(shape)
    values = np.empty(shape)
    values[..., 0] = z[..., 0]
    decay = np.exp(-np.diff(grid))
    noise = np.sqrt(-np.expm1(-2 * np.diff(grid)))
    for k in range(1, len(grid)):
        values[..., k] = decay[k - 1] * values[..., k - 1] + noise[k - 1] * z[..., k]
    return GaussianPath(grid, values)
