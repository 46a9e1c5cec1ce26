"""q-arithmetic and exact partition functions of boxed Young diagrams.

Everything is kept in log domain.  A weight is a plain float holding its
natural logarithm; an exact zero is ``-inf``.

``Z[a, b](q)`` is the generating function of diagrams with at most ``a`` parts
each of size at most ``b``, i.e. the Gaussian polynomial ``binom(a+b, a)_q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "QParam",
    "LogZTable",
    "GaussianPolynomial",
    "q_integer",
    "log_q_integer",
    "log_q_factorial",
    "log_q_binomial",
    "build_logz_table",
    "enumerate_gaussian_polynomial",
    "MEMORY_BUDGET_ENTRIES",
    "ORACLE_MAX_AREA",
]

# dense table cap: 5e7 doubles = 400 MB
MEMORY_BUDGET_ENTRIES = 50_000_000
ORACLE_MAX_AREA = 400


@dataclass(frozen=True)
class QParam:
    """The weight parameter ``q`` of the measure ``q^area / Z``.

    Build it directly from ``q`` or, in the scaling regime, with
    :meth:`from_scaling` so that ``log q = -c/n`` holds exactly.
    """

    q: float
    n: int | None = None
    c: float | None = None

    def __post_init__(self):
        if not self.q > 0 or not math.isfinite(self.q):
            raise ValueError(f"q must be positive and finite, got {self.q}")

    @classmethod
    def from_scaling(cls, n: int, c: float) -> "QParam":
        if n < 1:
            raise ValueError("n must be a positive integer")
        return cls(math.exp(-c / n), n=int(n), c=float(c))

    @property
    def log_q(self) -> float:
        # keep -c/n exact instead of log(exp(-c/n))
        if self.c is not None and self.n is not None:
            return -self.c / self.n
        return math.log(self.q)


def _as_qparam(q) -> QParam:
    return q if isinstance(q, QParam) else QParam(float(q))


def _log_one_minus_exp(x: float) -> float:
    """log(1 - e^x) for x < 0."""
    # Maechler's split between the two accurate forms
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def log_q_integer(j: int, q) -> float:
    """log of ``(j)_q = (1 - q^j) / (1 - q)``, stable as q -> 1."""
    if j < 0:
        raise ValueError("j must be nonnegative")
    if j == 0:
        return -math.inf
    lq = _as_qparam(q).log_q
    if lq == 0.0:
        return math.log(j)
    if lq < 0.0:
        return _log_one_minus_exp(j * lq) - _log_one_minus_exp(lq)
    # q > 1: (q^j - 1) / (q - 1)
    return j * lq + _log_one_minus_exp(-j * lq) - lq - _log_one_minus_exp(-lq)


def q_integer(j: int, q) -> float:
    """``(j)_q``; equals ``j`` at ``q = 1``."""
    if j == 0:
        return 0.0
    return math.exp(log_q_integer(j, q))


def log_q_factorial(ell: int, q) -> float:
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    q = _as_qparam(q)
    return math.fsum(log_q_integer(j, q) for j in range(1, ell + 1))


def log_q_binomial(n: int, m: int, q) -> float:
    """log of the Gaussian polynomial ``binom(n, m)_q`` via its product form.

    Each factor ``(1 - q^{n-j}) / (1 - q^{m-j})`` is a ratio of two q-integers,
    so no factorial quotient (and no cancellation) is involved.
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got n={n}, m={m}")
    q = _as_qparam(q)
    m = min(m, n - m)
    return math.fsum(
        log_q_integer(n - j, q) - log_q_integer(m - j, q) for j in range(m)
    )


@dataclass(frozen=True, eq=False)
class LogZTable:
    """``entries[a', b'] = log Z[a', b'](q)`` for every subbox of an ``a x b`` box."""

    a_max: int
    b_max: int
    q: QParam
    entries: np.ndarray

    def __post_init__(self):
        self.entries.setflags(write=False)

    def logz(self, x: int, y: int) -> float:
        """log Z for an ``x x y`` box; ``-inf`` if either side is negative."""
        if x < 0 or y < 0:
            return -math.inf
        if x <= self.a_max and y <= self.b_max:
            return float(self.entries[x, y])
        if y <= self.a_max and x <= self.b_max:
            return float(self.entries[y, x])
        raise IndexError(f"subbox {x}x{y} not covered by a {self.a_max}x{self.b_max} table")

    def __getitem__(self, idx):
        return self.entries[idx]


def build_logz_table(a: int, b: int, q) -> LogZTable:
    """Run ``Z[a,b] = Z[a,b-1] + q^b Z[a-1,b]`` with log-sum-exp accumulation."""
    if a < 1 or b < 1:
        raise ValueError("box sides must be positive")
    if (a + 1) * (b + 1) > MEMORY_BUDGET_ENTRIES:
        raise MemoryError(
            f"{a}x{b} table exceeds the budget of {MEMORY_BUDGET_ENTRIES} entries"
        )
    q = _as_qparam(q)
    entries = _kernels.logz_table(int(a), int(b), float(q.log_q))
    return LogZTable(int(a), int(b), q, entries)


@dataclass(frozen=True)
class GaussianPolynomial:
    """Exact area counts: ``coefficients[k]`` diagrams of area ``k`` fit in ``a x b``."""

    a: int
    b: int
    coefficients: tuple[int, ...]

    def __call__(self, q: float) -> float:
        # Horner in float; the coefficients themselves stay exact
        acc = 0.0
        for coef in reversed(self.coefficients):
            acc = acc * q + coef
        return acc

    def log_eval(self, q: float) -> float:
        return math.log(self(q))


def enumerate_gaussian_polynomial(a: int, b: int) -> GaussianPolynomial:
    """Integer dynamic program over the box recursion (oracle scale only)."""
    if a < 0 or b < 0:
        raise ValueError("box sides must be nonnegative")
    if a * b > ORACLE_MAX_AREA:
        raise ValueError(f"a*b = {a * b} exceeds the oracle cap {ORACLE_MAX_AREA}")
    # row[j] holds the coefficient list of Z[i, j]
    row = [[1] for _ in range(b + 1)]
    for _ in range(1, a + 1):
        new = [[1]]
        for j in range(1, b + 1):
            left = new[j - 1]
            up = row[j]
            poly = [0] * max(len(left), len(up) + j)
            for k, v in enumerate(left):
                poly[k] += v
            for k, v in enumerate(up):
                poly[k + j] += v
            new.append(poly)
        row = new
    return GaussianPolynomial(a, b, tuple(row[b]))
