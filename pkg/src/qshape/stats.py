"""Sample covariance with jackknife errors, and goodness-of-fit helpers."""

from __future__ import annotations

import numpy as np
from scipy import stats

__all__ = ["covariance_with_jackknife", "chi_square_pvalue", "ks_normal_pvalue", "ks_two_sample_pvalue"]


def covariance_with_jackknife(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased sample covariance of the columns and its delete-one jackknife SE.

    The leave-one-out estimates have the closed form
    ``(S - d_i d_i^T N/(N-1)) / (N-2)`` with ``d_i`` the deviations from the
    full mean, so the whole jackknife costs two matrix products.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ValueError("need a (N, m) array with N >= 3")
    n = x.shape[0]
    d = x - x.mean(axis=0)
    s = d.T @ d
    cov = s / (n - 1)
    sq = (d * d).T @ (d * d)
    spread = sq - s * s / n  # sum_i (d_ip d_ir - S_pr/N)^2
    scale = n / ((n - 1) * (n - 2))
    var = (n - 1) / n * scale**2 * np.maximum(spread, 0.0)
    return cov, np.sqrt(var)


def chi_square_pvalue(observed, expected_probs) -> float:
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected_probs, dtype=float)
    expected = expected / expected.sum() * observed.sum()
    return float(stats.chisquare(observed, expected).pvalue)


def ks_normal_pvalue(values, variance: float) -> float:
    return float(stats.kstest(np.asarray(values), "norm", args=(0.0, np.sqrt(variance))).pvalue)


def ks_two_sample_pvalue(x, y) -> float:
    return float(stats.ks_2samp(np.asarray(x), np.asarray(y)).pvalue)
