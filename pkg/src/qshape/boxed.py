"""The boxed ensemble ``P(pi) = q^|pi| / Z[a, b](q)`` on diagrams inside ``a x b``.

Coordinates
-----------
A diagram's boundary is a path ``X_0 = 0, ..., X_{a+b} = b - a`` with ``a``
down-steps (one per part, possibly zero) and ``b`` up-steps.  A down-step
preceded by ``u`` up-steps is a part of size ``u``, so the area is the number
of (up, later down) pairs.  The empty diagram is ``a`` downs then ``b`` ups.

Marginals use the integer ``i`` with ``X_{2k} = 2i`` at even times and
``X_{2k+1} = 2i + 1`` at odd times.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .qcore import LogZTable, QParam, _as_qparam, build_logz_table, log_q_integer

__all__ = [
    "BoxGeometry",
    "LatticePath",
    "YoungDiagram",
    "path_from_diagram",
    "diagram_from_path",
    "log_prob_marginal_even",
    "log_prob_marginal_odd",
    "log_prob_joint_even",
    "even_support",
    "mode_L_sharp",
    "sample_diagram",
    "sample_paths",
    "path_log_probability",
    "transition_kernel",
    "get_table",
]


@dataclass(frozen=True)
class BoxGeometry:
    a: int
    b: int

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError(f"box sides must be >= 1, got {self.a}x{self.b}")

    @classmethod
    def from_scaling(cls, n: int, rho: float) -> "BoxGeometry":
        """``a = round(2 n rho)``, ``b = 2n - a``."""
        a = int(round(2 * n * rho))
        return cls(a, 2 * n - a)

    @property
    def length(self) -> int:
        return self.a + self.b

    @property
    def n(self) -> int | None:
        return self.length // 2 if self.length % 2 == 0 else None

    @property
    def rho(self) -> float:
        return self.a / self.length


@dataclass(frozen=True)
class YoungDiagram:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts if p != 0)
        if any(p < 0 for p in parts):
            raise ValueError("parts must be nonnegative")
        if any(x < y for x, y in zip(parts, parts[1:])):
            raise ValueError("parts must be non-increasing")
        object.__setattr__(self, "parts", parts)

    @property
    def area(self) -> int:
        return sum(self.parts)

    def fits(self, box: BoxGeometry) -> bool:
        return len(self.parts) <= box.a and (not self.parts or self.parts[0] <= box.b)

    def conjugate(self) -> "YoungDiagram":
        if not self.parts:
            return self
        return YoungDiagram(
            tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0]))
        )


@dataclass(frozen=True, eq=False)
class LatticePath:
    steps: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=np.int8)
        if steps.ndim != 1 or not np.all(np.abs(steps) == 1):
            raise ValueError("steps must be a 1-d array of +1/-1")
        steps.setflags(write=False)
        object.__setattr__(self, "steps", steps)

    @property
    def heights(self) -> np.ndarray:
        out = np.zeros(len(self.steps) + 1, dtype=np.int64)
        np.cumsum(self.steps, out=out[1:])
        return out

    @property
    def box(self) -> BoxGeometry:
        b = int(np.count_nonzero(self.steps == 1))
        return BoxGeometry(len(self.steps) - b, b)

    @property
    def area(self) -> int:
        ups = np.cumsum(self.steps == 1)
        return int(ups[self.steps == -1].sum())

    def __eq__(self, other):
        return isinstance(other, LatticePath) and np.array_equal(self.steps, other.steps)

    def __hash__(self):
        return hash(self.steps.tobytes())


def path_from_diagram(d: YoungDiagram, box: BoxGeometry) -> LatticePath:
    if not d.fits(box):
        raise ValueError(f"diagram {d.parts} does not fit in a {box.a}x{box.b} box")
    ascending = [0] * (box.a - len(d.parts)) + sorted(d.parts)
    steps = []
    ups = 0
    for part in ascending:
        steps.extend([1] * (part - ups))
        steps.append(-1)
        ups = part
    steps.extend([1] * (box.b - ups))
    return LatticePath(np.array(steps, dtype=np.int8))


def diagram_from_path(path: LatticePath) -> YoungDiagram:
    ups = 0
    parts = []
    for s in path.steps:
        if s == 1:
            ups += 1
        else:
            parts.append(ups)
    return YoungDiagram(tuple(sorted(parts, reverse=True)))


@functools.lru_cache(maxsize=16)
def _cached_table(a: int, b: int, q: QParam) -> LogZTable:
    return build_logz_table(a, b, q)


def get_table(box: BoxGeometry, q, table: LogZTable | None = None) -> LogZTable:
    q = _as_qparam(q)
    if table is not None:
        if (table.a_max, table.b_max) != (box.a, box.b):
            raise ValueError("table does not match the box")
        return table
    return _cached_table(box.a, box.b, q)


def _log_weight(table: LogZTable, q: QParam, cross: int, *boxes) -> float:
    """``q^cross * prod Z[box] / Z[a, b]`` in log domain; -inf if a box is empty."""
    if any(x < 0 or y < 0 for x, y in boxes):
        return -math.inf
    total = cross * q.log_q if cross else 0.0
    for x, y in boxes:
        total += table.logz(x, y)
    return total - table.logz(table.a_max, table.b_max)


def even_support(box: BoxGeometry, k: int) -> range:
    """Values of ``i`` with positive probability for ``X_{2k} = 2i``."""
    return range(max(-k, k - box.a), min(k, box.b - k) + 1)


def log_prob_marginal_even(box: BoxGeometry, q, k: int, i: int, table=None) -> float:
    """``log P(X_{2k} = 2i)``."""
    if not 0 <= 2 * k <= box.length:
        raise ValueError(f"time 2k={2 * k} outside [0, {box.length}]")
    q = _as_qparam(q)
    table = get_table(box, q, table)
    ups, downs = k + i, k - i
    return _log_weight(
        table, q, ups * (box.a - downs), (downs, ups), (box.a - downs, box.b - ups)
    )


def log_prob_marginal_odd(box: BoxGeometry, q, k: int, i: int, table=None) -> float:
    """``log P(X_{2k+1} = 2i + 1)``."""
    if not 0 <= 2 * k + 1 <= box.length:
        raise ValueError(f"time 2k+1={2 * k + 1} outside [0, {box.length}]")
    q = _as_qparam(q)
    table = get_table(box, q, table)
    ups, downs = k + i + 1, k - i
    return _log_weight(
        table, q, ups * (box.a - downs), (downs, ups), (box.a - downs, box.b - ups)
    )


def log_prob_joint_even(box: BoxGeometry, q, k: int, i: int, l: int, j: int, table=None) -> float:
    """``log P(X_{2k} = 2i, X_{2l} = 2j)`` for ``k < l``."""
    if k >= l:
        raise ValueError(f"need k < l, got k={k}, l={l}")
    if k < 0 or 2 * l > box.length:
        raise ValueError("times outside the path")
    q = _as_qparam(q)
    table = get_table(box, q, table)
    u1, d1 = k + i, k - i
    u2, d2 = l + j, l - j
    cross = u1 * (box.a - d1) + (u2 - u1) * (box.a - d2)
    return _log_weight(
        table, q, cross, (d1, u1), (d2 - d1, u2 - u1), (box.a - d2, box.b - u2)
    )


def _mode_ratio_at_most_one(box: BoxGeometry, q: QParam, k: int, ell: int) -> bool:
    """Is ``P(X_{2k} = 2(ell+1)) / P(X_{2k} = 2 ell) <= 1``?"""
    a, b = box.a, box.b
    up = (k - ell, b - k - ell)
    down = (k + ell + 1, a - k + ell + 1)
    if min(up) <= 0:
        return True
    if q.log_q == 0.0:
        return up[0] * up[1] <= down[0] * down[1]
    log_ratio = (
        log_q_integer(up[0], q) + log_q_integer(up[1], q)
        - log_q_integer(down[0], q) - log_q_integer(down[1], q)
        + (a + 2 * ell + 1) * q.log_q
    )
    return log_ratio <= 0.0


def mode_L_sharp(box: BoxGeometry, q, k: int) -> int:
    """Most probable ``i`` for ``X_{2k} = 2i`` (smallest one on ties).

    The successive-probability ratio is decreasing in ``i``, so the first
    ``i`` where it drops to <= 1 is found by bisection.
    """
    if not 0 <= 2 * k <= box.length:
        raise ValueError(f"time 2k={2 * k} outside [0, {box.length}]")
    q = _as_qparam(q)
    support = even_support(box, k)
    lo, hi = support.start, support.stop - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _mode_ratio_at_most_one(box, q, k, mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def sample_paths(table: LogZTable, uniforms: np.ndarray) -> np.ndarray:
    """Decode each row of ``uniforms`` (shape ``(N, a+b)``) into path steps."""
    uniforms = np.ascontiguousarray(np.atleast_2d(uniforms), dtype=np.float64)
    return _kernels.sample_paths(table.entries, float(table.q.log_q), uniforms)


def sample_diagram(box: BoxGeometry, q, table: LogZTable | None = None,
                   rng: np.random.Generator | None = None) -> LatticePath:
    """One exact draw from ``P[a, b]^q``.

    Uses ``a + b`` uniforms from ``rng``; decisions are taken from the last
    step backwards ("is there a part of the current maximal size?").
    """
    table = get_table(box, q, table)
    rng = np.random.default_rng() if rng is None else rng
    return LatticePath(sample_paths(table, rng.random(box.length))[0])


def path_log_probability(path: LatticePath, table: LogZTable) -> float:
    """Sum of log decision probabilities the sampler assigns to ``path``."""
    lq = table.q.log_q
    ar, br = table.a_max, table.b_max
    if len(path.steps) != ar + br:
        raise ValueError("path length does not match the table")
    total = 0.0
    for s in path.steps[::-1]:
        if s == -1:
            if ar == 0:
                return -math.inf
            total += br * lq + table.logz(ar - 1, br) - table.logz(ar, br)
            ar -= 1
        else:
            if br == 0:
                return -math.inf
            total += table.logz(ar, br - 1) - table.logz(ar, br)
            br -= 1
    return total


def transition_kernel(box: BoxGeometry, q, table: LogZTable | None, k: int, x_now: int) -> float:
    """``P(X_{k+1} = x_now + 1 | X_k = x_now)``.

    Given the past, the remaining ``A`` downs and ``B`` ups are distributed as
    a fresh ``A x B`` box; an up-step first pairs with all ``A`` later downs.
    """
    q = _as_qparam(q)
    table = get_table(box, q, table)
    if (k + x_now) % 2 or not 0 <= k < box.length:
        raise ValueError(f"state (k={k}, x={x_now}) is not reachable")
    ups, downs = (k + x_now) // 2, (k - x_now) // 2
    A, B = box.a - downs, box.b - ups
    if ups < 0 or downs < 0 or A < 0 or B < 0:
        raise ValueError(f"state (k={k}, x={x_now}) is not reachable")
    if B == 0:
        return 0.0
    if A == 0:
        return 1.0
    p = math.exp(A * q.log_q + table.logz(A, B - 1) - table.logz(A, B))
    return min(1.0, max(0.0, p))
