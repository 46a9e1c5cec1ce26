"""Closed-form asymptotics of the boxed ensemble.

Rates and prefactors of the 1- and 2-point marginals (``F1, H1, F2, H2``),
the limit shape ``L_{rho,c}``, the second derivatives of ``F2`` at its
critical point and the resulting covariance, the fluctuation scale ``f``,
and the embedding of boxed shapes into the universal curve
``L_inf(s) = log(2 cosh s)``.

Every expression that is ``0/0`` at ``c = 0`` is written through
``sinh(c u)/c`` and ``expm1(c u)/c``, which are evaluated to full relative
precision for any ``c`` (including ``c = 0`` and negative ``c``).  Negative
``c`` is the complement ensemble; the formulas are analytic in ``c`` and are
used as-is, with ``f`` taken positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .qcore import QParam, log_q_factorial

__all__ = [
    "DomainError",
    "EnsembleParams",
    "ShapeFunction",
    "CriticalData",
    "Embedding",
    "S_c",
    "f_c",
    "h_c",
    "F1",
    "H1",
    "F2",
    "H2",
    "limit_shape",
    "universal_shape",
    "L_inf",
    "ratio_R",
    "restriction_params_left",
    "restriction_params_right",
    "d2F1_dx2_at_shape",
    "d2F2_dxdy",
    "hessian_F2_at_critical",
    "sigma_matrix",
    "fluctuation_scale_f",
    "fluctuation_scale_f_alt",
    "bridge_kernel",
    "universal_embedding",
    "q_stirling_check",
]


class DomainError(ValueError):
    """Point outside the open domain of a rate function."""


@dataclass(frozen=True)
class EnsembleParams:
    rho: float
    c: float
    n: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


# -- stable building blocks ---------------------------------------------------

def _sinh_over(c, u):
    """sinh(c u) / c, continuous at c = 0."""
    if c == 0:
        return u * 1.0
    return np.sinh(c * u) / c


def _expm1_over(c, u):
    """expm1(c u) / c, continuous at c = 0."""
    if c == 0:
        return u * 1.0
    return np.expm1(c * u) / c


def _g(u):
    # log((1 - e^-u) / u), smooth and g(0) = 0
    if abs(u) < 1e-8:
        return -0.5 * u
    return math.log(-math.expm1(-u) / u)


def S_c(alpha: float, c: float) -> float:
    """``int_0^alpha log((1 - e^{-cx}) / c) dx``.

    Split off the log singularity exactly: the integrand is ``log x + g(cx)``
    with ``g`` smooth, so ``S_c(a) = a log a - a + a int_0^1 g(c a v) dv``.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return 0.0
    base = alpha * math.log(alpha) - alpha
    if c == 0:
        return base
    w = c * alpha
    val, _ = integrate.quad(lambda v: _g(w * v), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return base + alpha * val


def f_c(x: float, y: float, c: float) -> float:
    """Exponential rate of ``binom(nx + ny, nx)_q``."""
    if x <= 0 or y <= 0:
        raise DomainError(f"f_c needs x, y > 0, got ({x}, {y})")
    return S_c(x + y, c) - S_c(x, c) - S_c(y, c)


def h_c(x: float, y: float, c: float) -> float:
    """Prefactor of ``binom(nx + ny, nx)_q`` (up to ``1/sqrt(2 pi n)``)."""
    if x <= 0 or y <= 0:
        raise DomainError(f"h_c needs x, y > 0, got ({x}, {y})")
    return math.sqrt(_expm1_over(c, x + y) / (_expm1_over(c, x) * _expm1_over(c, y)))


# -- rate functions of the marginals -----------------------------------------

def _check_positive(name, *args):
    if min(args) <= 0:
        raise DomainError(f"{name}: point outside the open box ({args})")


def F1(rho: float, c: float, s: float, x: float) -> float:
    """Rate of ``P(X_{2k} = 2i)`` with ``s = k/n``, ``x = i/n``."""
    args = (s - x, s + x, 2 * rho - s + x, 2 - 2 * rho - s - x)
    _check_positive("F1", *args)
    return (
        -c * (2 * rho - s + x) * (s + x)
        + f_c(args[0], args[1], c)
        + f_c(args[2], args[3], c)
        - f_c(2 * rho, 2 - 2 * rho, c)
    )


def H1(rho: float, c: float, s: float, x: float) -> float:
    args = (s + x, s - x, 2 * rho - s + x, 2 - 2 * rho - s - x)
    _check_positive("H1", *args)
    return h_c(args[0], args[1], c) * h_c(args[2], args[3], c) / h_c(2 * rho, 2 - 2 * rho, c)


def F2(rho: float, c: float, s: float, t: float, x: float, y: float) -> float:
    """Rate of ``P(X_{2k} = 2i, X_{2l} = 2j)`` with ``t = l/n``, ``y = j/n``."""
    if s >= t:
        raise ValueError(f"F2 needs s < t, got s={s}, t={t}")
    args = (s - x, s + x, t - s + y - x, t - s - y + x, 2 * rho - t + y, 2 - 2 * rho - t - y)
    _check_positive("F2", *args)
    return (
        -c * ((2 * rho - s + x) * (s + x) + (t - s + y - x) * (2 * rho - t + y))
        + f_c(args[0], args[1], c)
        + f_c(args[2], args[3], c)
        + f_c(args[4], args[5], c)
        - f_c(2 * rho, 2 - 2 * rho, c)
    )


def H2(rho: float, c: float, s: float, t: float, x: float, y: float) -> float:
    if s >= t:
        raise ValueError(f"H2 needs s < t, got s={s}, t={t}")
    args = (s + x, s - x, t - s + y - x, t - s - y + x, 2 * rho - t + y, 2 - 2 * rho - t - y)
    _check_positive("H2", *args)
    return (
        h_c(args[0], args[1], c) * h_c(args[2], args[3], c) * h_c(args[4], args[5], c)
        / h_c(2 * rho, 2 - 2 * rho, c)
    )


# -- limit shapes -------------------------------------------------------------

def L_inf(s):
    """``log(2 cosh s)`` without overflow."""
    s = np.abs(np.asarray(s, dtype=float))
    out = s + np.log1p(np.exp(-2 * s))
    return float(out) if out.ndim == 0 else out


def _log_sinh(x):
    """log sinh(x) for x >= 0 (-inf at 0), overflow-free."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return x + np.log(-np.expm1(-2 * x)) - math.log(2)


def _boxed_shape(rho, c, t):
    t = np.asarray(t, dtype=float)
    if c == 0:
        return (1 - 2 * rho) * t
    if c <= -1:
        return -_boxed_shape(1 - rho, -c, t)
    if c >= 1:
        # every term positive: log(sinh(ct) + e^{c(2rho-1)} sinh(c(1-t))) - log sinh(c)
        log_num = np.logaddexp(_log_sinh(c * t), c * (2 * rho - 1) + _log_sinh(c * (1 - t)))
        return 1 - 2 * rho + (log_num - _log_sinh(c)) / c
    # small |c|: N(t)/sinh(c) - 1 via sinh A + sinh B - sinh(A+B) = -4 sinh(A/2) sinh(B/2) sinh((A+B)/2)
    sc = math.sinh(c)
    d = (
        -4 * math.sinh(c / 2) * np.sinh(c * t / 2) * (np.sinh(c * (1 - t) / 2) / sc)
        + math.expm1(c * (2 * rho - 1)) * (np.sinh(c * (1 - t)) / sc)
    )
    return 1 - 2 * rho + np.log1p(d) / c


def _boxed_shape_slope(rho, c, t):
    t = np.asarray(t, dtype=float)
    # cosh(ct) - e^{c(2rho-1)} cosh(c(1-t)), divided by c
    num = (
        2 * _sinh_over(c, 0.5) * np.sinh(c * (2 * t - 1) / 2)
        - _expm1_over(c, 2 * rho - 1) * np.cosh(c * (1 - t))
    )
    den = _sinh_over(c, t) + math.exp(c * (2 * rho - 1)) * _sinh_over(c, 1 - t)
    return num / den


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class ShapeFunction:
    """A limit shape with derivative access.

    ``kind`` is ``"boxed"`` (``L_{rho,c}`` on [0, 1]) or ``"universal"``
    (``L_inf`` on the real line).  ``c == 0`` gives the straight line
    ``(1 - 2 rho) t`` of the uniform measure.
    """

    kind: str
    rho: float | None = None
    c: float | None = None

    def __call__(self, t):
        if self.kind == "universal":
            return L_inf(t)
        return _scalar(_boxed_shape(self.rho, self.c, t))

    def derivative(self, t):
        if self.kind == "universal":
            return _scalar(np.tanh(np.asarray(t, dtype=float)))
        return _scalar(_boxed_shape_slope(self.rho, self.c, t))


def limit_shape(params: EnsembleParams) -> ShapeFunction:
    return ShapeFunction("boxed", float(params.rho), float(params.c))


def universal_shape() -> ShapeFunction:
    return ShapeFunction("universal")


def _L(rho, c, t):
    return _scalar(_boxed_shape(rho, c, t))


def square_shape(c: float, t):
    """The ``rho = 1/2`` shape ``(1/c) log(cosh(c(t - 1/2)) / cosh(c/2))``."""
    t = np.asarray(t, dtype=float)
    if c == 0:
        return _scalar(np.zeros_like(t))
    return _scalar((np.log(np.cosh(c * (t - 0.5))) - math.log(math.cosh(c / 2))) / c)


def ratio_R(rho: float, c: float, t: float, x: float) -> float:
    """Limit of the successive-probability ratio of ``X_{2tn}`` at height ``2xn``."""
    args = (t - x, 2 - 2 * rho - t - x, t + x, 2 * rho - t + x)
    _check_positive("ratio_R", *args)
    num = _sinh_over(c, args[0] / 2) * _sinh_over(c, args[1] / 2)
    den = _sinh_over(c, args[2] / 2) * _sinh_over(c, args[3] / 2)
    return math.exp(-c) * num / den


# -- subbox restriction -------------------------------------------------------

def _right_params(rho, c, s, x):
    return (2 * rho - s + x) / (2 * (1 - s)), c * (1 - s)


def _left_params(rho, c, t, y):
    return (t - y) / (2 * t), t * c


def restriction_params_right(rho: float, c: float, s: float) -> tuple[float, float]:
    """``(rho', c')`` of the subbox between ``(s, L(s))`` and the right corner."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    if s == 1:
        return (1 - _boxed_shape_slope(rho, c, 1.0)) / 2, 0.0
    return _right_params(rho, c, s, _L(rho, c, s))


def restriction_params_left(rho: float, c: float, t: float) -> tuple[float, float]:
    """``(rho'', c'')`` of the subbox between the origin and ``(t, L(t))``."""
    if not 0 <= t < 1:
        raise ValueError("t must lie in [0, 1)")
    if t == 0:
        return (1 - _boxed_shape_slope(rho, c, 0.0)) / 2, 0.0
    return _left_params(rho, c, t, _L(rho, c, t))


# -- fluctuations -------------------------------------------------------------

def fluctuation_scale_f(rho: float, c: float, s):
    """``sqrt(2 sinh(c rho) sinh(c(1-rho))) / (e^{c(1/2-rho)} sinh(cs) + e^{c(rho-1/2)} sinh(c(1-s)))``."""
    s = np.asarray(s, dtype=float)
    num = math.sqrt(2 * _sinh_over(c, rho) * _sinh_over(c, 1 - rho))
    den = math.exp(c * (0.5 - rho)) * _sinh_over(c, s) + math.exp(c * (rho - 0.5)) * _sinh_over(c, 1 - s)
    return _scalar(num / den)


def fluctuation_scale_f_alt(rho: float, c: float, s):
    """The same scale in its exponential form."""
    s = np.asarray(s, dtype=float)
    num = math.sqrt(_expm1_over(c, 2 * rho) * _expm1_over(-c, 2 * (1 - rho)))
    den = _sinh_over(c, s) + math.exp(c * (2 * rho - 1)) * _sinh_over(c, 1 - s)
    return _scalar(num / (math.sqrt(2) * den))


def bridge_kernel(c: float, s, t):
    """``sinh(c min) sinh(c(1 - max)) / (c sinh c)``; ``min(s,t)(1 - max(s,t))`` at c = 0."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    return _scalar(_sinh_over(c, lo) * _sinh_over(c, 1 - hi) / _sinh_over(c, 1.0))


def sigma_matrix(rho: float, c: float, times) -> np.ndarray:
    """Limit covariance of ``(X~_{t_1}, ..., X~_{t_m})``: ``f(t_i) f(t_j) K_bridge(t_i, t_j)``."""
    times = np.asarray(times, dtype=float)
    f = np.atleast_1d(fluctuation_scale_f(rho, c, times))
    return f[:, None] * f[None, :] * bridge_kernel(c, times[:, None], times[None, :])


def d2F1_dx2_at_shape(rho: float, c: float, s: float) -> float:
    """``d^2 F1 / dx^2`` at ``x = L(s)``; ``c != 0``."""
    e = math.exp
    num = c * (1 - e(-2 * c)) * e(2 * c * s) * (
        1 - e(-c * (2 - 2 * rho)) - e(-2 * c * s) + e(-c * (2 * s - 2 * rho))
    ) ** 2
    den = (
        (1 - e(2 * c * rho)) * (1 - e(-2 * c * s))
        * (1 - e(-c * (2 - 2 * rho))) * (1 - e(-c * (2 - 2 * s)))
    )
    return num / den


def d2F2_dxdy(c: float, s: float, t: float, x: float, y: float) -> float:
    """Mixed derivative of ``F2`` at any interior point (independent of rho)."""
    e = math.exp
    return c * (e(2 * c * t) - e(2 * c * s)) / (
        (e(c * (t + y)) - e(c * (s + x))) * (e(c * (t - y)) - e(c * (s - x)))
    )


@dataclass
class CriticalData:
    """``F2`` around its critical point ``(L(s), L(t))``."""

    s: float
    t: float
    F1: float
    F2: float
    H1: float
    H2: float
    hessian: np.ndarray
    sigma: np.ndarray
    sigma_closed: np.ndarray = field(repr=False)


def hessian_F2_at_critical(rho: float, c: float, s: float, t: float) -> CriticalData:
    if not 0 < s < t < 1:
        raise ValueError(f"need 0 < s < t < 1, got s={s}, t={t}")
    fs, ft = fluctuation_scale_f(rho, c, s), fluctuation_scale_f(rho, c, t)
    sh = lambda u: _sinh_over(c, u)  # noqa: E731
    dxx = -sh(t) / (sh(s) * sh(t - s) * fs**2)
    dyy = -sh(1 - s) / (sh(1 - t) * sh(t - s) * ft**2)
    dxy = 1.0 / (sh(t - s) * fs * ft)
    hess = np.array([[dxx, dxy], [dxy, dyy]])
    Ls, Lt = _L(rho, c, s), _L(rho, c, t)
    return CriticalData(
        s=s,
        t=t,
        F1=F1(rho, c, s, Ls),
        F2=F2(rho, c, s, t, Ls, Lt),
        H1=H1(rho, c, s, Ls),
        H2=H2(rho, c, s, t, Ls, Lt),
        hessian=hess,
        sigma=-np.linalg.inv(hess),
        sigma_closed=sigma_matrix(rho, c, [s, t]),
    )


# -- universal curve ----------------------------------------------------------

@dataclass(frozen=True)
class Embedding:
    """``L_{rho,c}(t) = (L_inf(s0 + t (s1 - s0)) - L_inf(s0)) / (s1 - s0)``."""

    s0: float
    s1: float
    params: EnsembleParams

    def to_universal(self, t):
        return self.s0 + np.asarray(t, dtype=float) * (self.s1 - self.s0)

    def restricted(self, t):
        width = self.s1 - self.s0
        return _scalar((L_inf(self.to_universal(t)) - L_inf(self.s0)) / width)


def universal_embedding(s0: float, s1: float, xtol: float = 1e-13) -> Embedding:
    """Find the boxed ensemble whose shape is ``L_inf`` restricted to ``[s0, s1]``.

    ``rho`` comes from the chord slope; ``c`` matches the corner slope
    ``L_{rho,c}'(0) = tanh(s0)``, which is decreasing in ``c`` from ``1 - 2 rho``.
    """
    if s0 >= s1:
        raise ValueError(f"need s0 < s1, got {s0}, {s1}")
    width = s1 - s0
    rho = 0.5 - (L_inf(s1) - L_inf(s0)) / (2 * width)
    target = math.tanh(s0)

    def gap(c):
        return float(_boxed_shape_slope(rho, c, 0.0)) - target

    if gap(0.0) <= 0:
        return Embedding(s0, s1, EnsembleParams(rho, 0.0))
    hi = max(1.0, 2 * width)
    while gap(hi) > 0:
        hi *= 2
    c = optimize.bisect(gap, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400)
    return Embedding(s0, s1, EnsembleParams(rho, c))


# -- q-Stirling ---------------------------------------------------------------

def q_stirling_log_asymptotic(ell: int, n: int, c: float) -> float:
    """log of ``sqrt(2 pi n) sqrt((e^{c ell/n} - 1)/c) n^ell exp(n S_c(ell/n))``."""
    alpha = ell / n
    return (
        0.5 * math.log(2 * math.pi * n)
        + 0.5 * math.log(_expm1_over(c, alpha))
        + ell * math.log(n)
        + n * S_c(alpha, c)
    )


def q_stirling_check(ell: int, n: int, c: float) -> float:
    """``|log ell!_q - log(asymptotic)|`` at ``q = exp(-c/n)``."""
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= ell <= n")
    exact = log_q_factorial(ell, QParam.from_scaling(n, c))
    return abs(exact - q_stirling_log_asymptotic(ell, n, c))
