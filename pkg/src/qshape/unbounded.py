"""The grand-canonical measure ``q^|lambda| / Z(q)`` on all partitions.

Since ``Z(q) = prod_j (1 - q^j)^{-1}``, the multiplicities ``m_j`` of the part
sizes are independent with ``P(m_j = m) = q^{jm} (1 - q^j)``.

Boundary coordinates: the path ``Y_m`` (``m`` in Z, steps +-1) equals
``|m|`` outside the diagram; part ``lambda_r`` puts a down-step between
``m = lambda_r - r`` and ``m + 1``.  The rescaled boundary compared with
``L_inf(s) = log(2 cosh s)`` is ``psi(s) = (eps/2) Y(2s/eps)``, ``eps = 1 - q``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .qcore import log_q_binomial
from .shape import L_inf

__all__ = [
    "TAIL_MASS",
    "UnboundedSample",
    "part_cutoff",
    "sample_multiplicities",
    "sample_unbounded",
    "boundary_path",
    "rescaled_boundary",
    "log_Z",
    "log_Z_columns",
    "log_prob_marginal_unbounded",
    "log_prob_joint_unbounded",
    "vershik_distance",
    "rescaled_fluctuation_unbounded",
]

TAIL_MASS = 1e-12


def _check_q(q):
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")


def part_cutoff(q: float, tail: float = TAIL_MASS) -> int:
    """Largest part size sampled; parts beyond it have total probability < ``tail``."""
    _check_q(q)
    return max(1, math.ceil(math.log(tail * (1 - q)) / math.log(q)))


@dataclass(frozen=True)
class UnboundedSample:
    q: float
    sizes: np.ndarray  # part sizes present, decreasing
    counts: np.ndarray  # their multiplicities, all >= 1
    cutoff: int
    tail_bound: float

    @property
    def multiplicities(self) -> dict[int, int]:
        return {int(j): int(m) for j, m in zip(self.sizes, self.counts)}

    @property
    def area(self) -> int:
        return int(np.dot(self.sizes, self.counts))

    @property
    def parts(self) -> np.ndarray:
        return np.repeat(self.sizes, self.counts)

    def conjugate(self) -> "UnboundedSample":
        parts = self.parts
        if len(parts) == 0:
            return self
        cols = np.searchsorted(-parts, -np.arange(1, parts[0] + 1), side="right")
        sizes, counts = np.unique(cols, return_counts=True)
        return UnboundedSample(self.q, sizes[::-1], counts[::-1], self.cutoff, self.tail_bound)


def sample_multiplicities(q: float, rng: np.random.Generator, size=None, cutoff: int | None = None):
    """Independent geometric ``m_1..m_J`` by inverse CDF ``floor(log U / (j log q))``."""
    _check_q(q)
    J = part_cutoff(q) if cutoff is None else cutoff
    shape = (J,) if size is None else (size, J)
    u = 1.0 - rng.random(shape)  # in (0, 1]
    j = np.arange(1, J + 1)
    return np.floor(np.log(u) / (j * math.log(q))).astype(np.int64)


def sample_unbounded(q: float, rng: np.random.Generator, cutoff: int | None = None) -> UnboundedSample:
    """Exact draw from ``P^q`` conditioned on no part exceeding the cutoff.

    The neglected event has probability at most ``q^{J+1} / (1 - q)``,
    recorded as ``tail_bound``.
    """
    J = part_cutoff(q) if cutoff is None else cutoff
    m = sample_multiplicities(q, rng, cutoff=J)
    sizes = np.flatnonzero(m)[::-1] + 1
    return UnboundedSample(q, sizes, m[sizes - 1], J, q ** (J + 1) / (1 - q))


def boundary_path(sample: UnboundedSample) -> tuple[int, np.ndarray]:
    """``(m0, Y)`` with ``Y[r] = Y_{m0 + r}``, covering the whole diagram.

    ``Y`` equals ``|m|`` at both ends.
    """
    parts = sample.parts
    n_parts = len(parts)
    largest = int(parts[0]) if n_parts else 0
    steps = np.ones(n_parts + largest, dtype=np.int64)
    steps[parts - np.arange(1, n_parts + 1) + n_parts] = -1
    y = np.empty(n_parts + largest + 1, dtype=np.int64)
    y[0] = n_parts
    np.cumsum(steps, out=y[1:])
    y[1:] += n_parts
    return -n_parts, y


def rescaled_boundary(sample: UnboundedSample, s) -> np.ndarray:
    """``psi(s) = (eps/2) Y(2s/eps)``; linear between lattice points, ``|s|`` outside."""
    eps = 1.0 - sample.q
    m0, y = boundary_path(sample)
    m = 2 * np.asarray(s, dtype=float) / eps
    lattice = np.arange(m0, m0 + len(y))
    inside = np.interp(m, lattice, y)
    outside = (m < lattice[0]) | (m > lattice[-1])
    return eps / 2 * np.where(outside, np.abs(m), inside)


def vershik_distance(sample: UnboundedSample, q: float | None = None) -> float:
    """``sup_s |psi(s) - L_inf(s)|``.

    On each lattice segment the path has slope +-1 while ``L_inf' = tanh``
    stays inside (-1, 1), so the difference is monotone there; outside the
    diagram ``L_inf(s) - |s|`` decreases in ``|s|``.  Lattice points one step
    beyond the diagram therefore suffice.
    """
    q = sample.q if q is None else q
    eps = 1.0 - q
    m0, y = boundary_path(sample)
    m = np.arange(m0 - 1, m0 + len(y) + 1)
    y = np.concatenate(([abs(m0 - 1)], y, [m[-1]]))
    s = eps * m / 2
    return float(np.max(np.abs(eps * y / 2 - L_inf(s))))


def rescaled_fluctuation_unbounded(sample: UnboundedSample, q: float | None, s_grid) -> np.ndarray:
    """``2 cosh(s) / sqrt(eps) * (psi(s) - L_inf(s))`` on ``s_grid``.

    With this prefactor the limit has covariance ``e^{-|t-s|}``; the exact
    one-time law below gives variance ``1 - O(eps)`` (see the tests).
    """
    q = sample.q if q is None else q
    s = np.asarray(s_grid, dtype=float)
    eps = 1.0 - q
    return 2 * np.cosh(s) / math.sqrt(eps) * (rescaled_boundary(sample, s) - L_inf(s))


# -- exact laws ---------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _column_sums(q: float, size: int) -> np.ndarray:
    """``out[a] = -sum_{j<=a} log(1 - q^j)`` for ``a < size``."""
    j = np.arange(1, size)
    out = np.zeros(size)
    np.cumsum(-np.log(-np.expm1(j * math.log(q))), out=out[1:])
    out.setflags(write=False)
    return out


def log_Z_columns(a: int, q: float) -> float:
    """``log Z[a, inf] = -sum_{j<=a} log(1 - q^j)``."""
    _check_q(q)
    if a < 0:
        return -math.inf
    size = 1 << max(10, int(a).bit_length())
    return float(_column_sums(q, size)[a])


@functools.lru_cache(maxsize=32)
def log_Z(q: float, tail: float = 1e-13) -> float:
    """``log Z(q)`` truncated once the remaining terms sum to less than ``tail``."""
    _check_q(q)
    # remainder after J terms is below q^{J+1} / ((1 - q)(1 - q^{J+1}))
    J = max(1, math.ceil(math.log(tail * (1 - q) ** 2) / math.log(q)))
    j = np.arange(1, J + 1)
    return math.fsum(-np.log(-np.expm1(j * math.log(q))))


def log_prob_marginal_unbounded(q: float, k: int, i: int) -> float:
    """``log P^q(Y_{2k} = 2i)``."""
    ups, downs = k + i, i - k
    if ups < 0 or downs < 0:
        return -math.inf
    return ups * downs * math.log(q) + log_Z_columns(ups, q) + log_Z_columns(downs, q) - log_Z(q)


def log_prob_joint_unbounded(q: float, k: int, i: int, l: int, j: int) -> float:
    """``log P^q(Y_{2k} = 2i, Y_{2l} = 2j)`` for ``k < l``."""
    _check_q(q)
    if k >= l:
        raise ValueError(f"need k < l, got k={k}, l={l}")
    u1, d1 = k + i, i - k
    u2, d2 = l + j, j - l
    mid_up, mid_down = u2 - u1, d1 - d2
    if min(u1, d1, u2, d2, mid_up, mid_down) < 0:
        return -math.inf
    return (
        (u1 * d1 + mid_up * d2) * math.log(q)
        + log_Z_columns(u1, q)
        + log_q_binomial(mid_up + mid_down, mid_up, q)
        + log_Z_columns(d2, q)
        - log_Z(q)
    )
