import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import spence

from oracles import F_REF, L_REF, S_REF
from qshape import boxed, shape
from qshape.qcore import QParam, log_q_binomial
from qshape.shape import (
    DomainError,
    EnsembleParams,
    F1,
    F2,
    H1,
    S_c,
    f_c,
    fluctuation_scale_f,
    fluctuation_scale_f_alt,
    h_c,
    hessian_F2_at_critical,
    limit_shape,
    q_stirling_check,
    ratio_R,
    restriction_params_left,
    restriction_params_right,
    square_shape,
    universal_embedding,
    universal_shape,
)

L = shape._L


def dilog_S(alpha, c):
    # S_c(a) = (Li2(e^{-ca}) - pi^2/6)/c - a log c for c > 0, with Li2(z) = spence(1 - z)
    return (spence(1 - math.exp(-c * alpha)) - math.pi**2 / 6) / c - alpha * math.log(c)


@pytest.mark.parametrize("key", sorted(S_REF))
def test_S_c_reference_values(key):
    assert S_c(*key) == pytest.approx(S_REF[key], abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.05, 8))
def test_S_c_matches_dilogarithm(alpha, c):
    assert S_c(alpha, c) == pytest.approx(dilog_S(alpha, c), abs=1e-11)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 3), st.floats(-6, 6))
def test_S_c_scaling_identity(alpha, c):
    assert S_c(alpha, c) == pytest.approx(alpha * S_c(1.0, alpha * c) + alpha * math.log(alpha), abs=1e-10)


def test_S_c_small_cases():
    assert S_c(0.0, 2.0) == 0.0
    assert S_c(1.0, 0.0) == -1.0
    assert S_c(1.0, 1e-6) == pytest.approx(-1.0, abs=1e-5)
    assert S_c(2.0, 0.0) == pytest.approx(2 * math.log(2) - 2)
    with pytest.raises(ValueError):
        S_c(-0.1, 1.0)


def test_S_c_spec_scaling_instance():
    # S_1(2) = 2 S_2(1) + 2 log 2: the log 2 term comes from the 1/c inside the log
    assert S_c(2.0, 1.0) == pytest.approx(2 * S_c(1.0, 2.0) + 2 * math.log(2), abs=1e-12)


def test_f_and_h():
    rng = np.random.default_rng(1)
    for _ in range(10):
        x, y, c = rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(-3, 3)
        assert f_c(x, y, c) == pytest.approx(f_c(y, x, c), abs=1e-13)
        assert h_c(x, y, c) == pytest.approx(h_c(y, x, c), rel=1e-14)
    assert h_c(1, 1, 1e-8) == pytest.approx(math.sqrt(2), abs=1e-6)
    x, y = 0.3, 0.9
    f0 = (x + y) * math.log(x + y) - x * math.log(x) - y * math.log(y)
    assert f_c(x, y, 0.0) == pytest.approx(f0, abs=1e-14)
    assert h_c(x, y, 0.0) == pytest.approx(math.sqrt((x + y) / (x * y)))
    with pytest.raises(DomainError):
        f_c(0.0, 1.0, 1.0)


def test_q_binomial_asymptotic():
    n = 200
    exact = log_q_binomial(200, 100, QParam.from_scaling(n, 1.0))
    approx = n * f_c(0.5, 0.5, 1.0) + math.log(h_c(0.5, 0.5, 1.0)) - 0.5 * math.log(2 * math.pi * n)
    assert abs(approx / exact - 1) <= 5 / n


def test_F1_vanishes_on_shape_and_is_negative_off_it():
    assert F1(0.5, 1.0, 0.3, L(0.5, 1.0, 0.3)) == pytest.approx(0.0, abs=1e-10)
    for rho, c, s in [(0.5, 1.0, 0.3), (0.3, 2.0, 0.6), (0.8, -1.0, 0.5)]:
        x = L(rho, c, s)
        assert F1(rho, c, s, x + 0.05) < 0
        assert F1(rho, c, s, x - 0.05) < 0
    with pytest.raises(DomainError):
        F1(0.5, 1.0, 0.3, 0.3)


def test_F1_asymptotic_matches_exact_marginal():
    n = 300
    box = boxed.BoxGeometry.from_scaling(n, 0.5)
    k, i = n // 2, round(n * L(0.5, 1.0, 0.5))
    s, x = k / n, i / n
    exact = boxed.log_prob_marginal_even(box, QParam.from_scaling(n, 1.0), k, i)
    approx = n * F1(0.5, 1.0, s, x) + math.log(H1(0.5, 1.0, s, x)) - 0.5 * math.log(2 * math.pi * n)
    assert abs(approx / exact - 1) <= 10 / n


def test_F2_critical_value_and_decompositions():
    rho, c, s, t = 0.4, 1.5, 0.3, 0.65
    assert F2(rho, c, s, t, L(rho, c, s), L(rho, c, t)) == pytest.approx(0.0, abs=1e-10)
    x, y = L(rho, c, s) + 0.04, L(rho, c, t) - 0.03
    rp, cp = shape._right_params(rho, c, s, x)
    right = F1(rho, c, s, x) + (1 - s) * F1(rp, cp, (t - s) / (1 - s), (y - x) / (1 - s))
    rpp, cpp = shape._left_params(rho, c, t, y)
    left = F1(rho, c, t, y) + t * F1(rpp, cpp, s / t, x / t)
    assert F2(rho, c, s, t, x, y) == pytest.approx(right, abs=1e-10)
    assert F2(rho, c, s, t, x, y) == pytest.approx(left, abs=1e-10)
    with pytest.raises(ValueError):
        F2(rho, c, t, s, x, y)


@pytest.mark.parametrize("key", sorted(L_REF))
def test_limit_shape_reference_values(key):
    assert L(*key) == pytest.approx(L_REF[key], abs=1e-14)


def test_limit_shape_examples():
    for c in (0.5, 1.0, 4.0, -2.0):
        Lsq = limit_shape(EnsembleParams(0.5, c))
        t = np.linspace(0, 1, 11)
        assert Lsq(0.0) == pytest.approx(0.0, abs=1e-15)
        assert Lsq(1.0) == pytest.approx(0.0, abs=1e-15)
        np.testing.assert_allclose(Lsq(t), Lsq(1 - t), atol=1e-14)
        np.testing.assert_allclose(Lsq(t), square_shape(c, t), atol=1e-14)
    assert L(0.5, 1.0, 0.5) == pytest.approx(-math.log(math.cosh(0.5)), abs=1e-15)
    assert L(0.3, 1e-6, 0.4) == pytest.approx(0.16, abs=1e-5)
    assert L(0.3, 0.0, 0.4) == pytest.approx(0.16, abs=1e-15)


@pytest.mark.parametrize("rho", [0.1, 0.35, 0.5, 0.8])
@pytest.mark.parametrize("c", [-5.0, -0.3, 1e-9, 0.7, 3.0, 12.0])
def test_limit_shape_boundary_and_slope(rho, c):
    Lf = limit_shape(EnsembleParams(rho, c))
    assert Lf(0.0) == pytest.approx(0.0, abs=1e-14)
    assert Lf(1.0) == pytest.approx(1 - 2 * rho, abs=1e-14)
    t = np.linspace(0, 1, 201)
    assert np.all(np.abs(Lf.derivative(t)) <= 1 + 1e-12)
    h = 1e-6
    fd = (Lf(t[1:-1] + h) - Lf(t[1:-1] - h)) / (2 * h)
    np.testing.assert_allclose(Lf.derivative(t[1:-1]), fd, atol=1e-7)
    # d/drho L(1) = -2, so the sharp bound on the rho-derivative is 2
    dr = (L(rho + 1e-6, c, t) - L(rho - 1e-6, c, t)) / 2e-6
    assert np.all(np.abs(dr) <= 2 + 1e-6)
    assert dr[-1] == pytest.approx(-2.0, abs=1e-6)


def test_complement_symmetries():
    t = np.linspace(0, 1, 21)
    for rho, c in [(0.3, 1.2), (0.7, -2.0), (0.5, 4.0)]:
        np.testing.assert_allclose(L(rho, -c, t), (1 - 2 * rho) - L(rho, c, 1 - t), atol=1e-14)
        np.testing.assert_allclose(L(rho, -c, t), -L(1 - rho, c, t), atol=1e-14)


def test_small_c_is_continuous():
    t = np.linspace(0, 1, 11)
    for rho in (0.2, 0.5, 0.9):
        np.testing.assert_allclose(L(rho, 1e-5, t), (1 - 2 * rho) * t, atol=1e-5)
        assert abs(L(rho, 1e-4 * (1 + 1e-12), 0.3) - L(rho, 1e-4, 0.3)) < 1e-15


def test_ratio_R():
    rho, c, t = 0.4, 2.0, 0.6
    x = L(rho, c, t)
    assert ratio_R(rho, c, t, x) == pytest.approx(1.0, abs=1e-12)
    assert ratio_R(rho, c, t, x + 0.01) < 1 < ratio_R(rho, c, t, x - 0.01)
    for dx in (-0.1, 0.0, 0.07):
        h = 1e-6
        fd = (F1(rho, c, t, x + dx + h) - F1(rho, c, t, x + dx - h)) / (2 * h)
        assert math.log(ratio_R(rho, c, t, x + dx)) == pytest.approx(fd, rel=1e-4, abs=1e-8)
    with pytest.raises(DomainError):
        ratio_R(rho, c, t, t)


def test_restriction_relations():
    rho, c, s, t = 0.5, 1.0, 0.2, 0.5
    r2, c2 = restriction_params_left(rho, c, t)
    assert c2 == pytest.approx(t * c)
    assert L(rho, c, s) / t == pytest.approx(L(r2, c2, s / t), abs=1e-10)
    rho, c, s, t = 0.3, 2.0, 0.25, 0.7
    r1, c1 = restriction_params_right(rho, c, s)
    assert c1 == pytest.approx(c * (1 - s))
    assert (L(rho, c, t) - L(rho, c, s)) / (1 - s) == pytest.approx(L(r1, c1, (t - s) / (1 - s)), abs=1e-10)


def test_restriction_degenerate_ends():
    rho, c = 0.3, 2.0
    r1, c1 = restriction_params_right(rho, c, 1.0)
    assert c1 == 0.0
    near = restriction_params_right(rho, c, 1 - 1e-7)
    assert r1 == pytest.approx(near[0], abs=1e-6)
    r0, c0 = restriction_params_left(rho, c, 0.0)
    near = restriction_params_left(rho, c, 1e-7)
    assert c0 == 0.0 and r0 == pytest.approx(near[0], abs=1e-6)


@pytest.mark.parametrize("n", [50, 200])
@pytest.mark.parametrize("rho,c", [(0.5, 1.0), (0.3, 2.0), (0.317, -1.5)])
def test_mode_proximity(n, rho, c):
    box = boxed.BoxGeometry.from_scaling(n, rho)
    q = QParam.from_scaling(n, c)
    slack = 1 / n + 2 * abs(box.a / (2 * n) - rho)
    for k in range(n + 1):
        i = boxed.mode_L_sharp(box, q, k)
        assert abs(i / n - L(rho, c, k / n)) <= slack + 1e-12
        # against the shape of the realised box the bound is 1/n
        assert abs(i / n - L(box.rho, c, k / n)) <= 1 / n + 1e-12


def test_fluctuation_scale():
    assert fluctuation_scale_f(0.5, 1.0, 0.5) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    s = np.linspace(0, 1, 11)
    for c in (0.3, 2.0):
        np.testing.assert_allclose(fluctuation_scale_f(0.5, c, s), fluctuation_scale_f(0.5, c, 1 - s), rtol=1e-14)
        np.testing.assert_allclose(
            fluctuation_scale_f(0.5, c, s), 1 / (math.sqrt(2) * np.cosh(c * (s - 0.5))), rtol=1e-14
        )
    for key, value in F_REF.items():
        assert fluctuation_scale_f(*key) == pytest.approx(value, rel=1e-14)
    rng = np.random.default_rng(2)
    for _ in range(50):
        r, c, s = rng.uniform(0.05, 0.95), rng.uniform(-5, 5), rng.uniform(0, 1)
        assert fluctuation_scale_f_alt(r, c, s) == pytest.approx(fluctuation_scale_f(r, c, s), rel=1e-12)
    assert fluctuation_scale_f(0.3, 0.0, 0.4) == pytest.approx(math.sqrt(2 * 0.3 * 0.7), rel=1e-15)


def test_hessian_and_sigma():
    cd = hessian_F2_at_critical(0.5, 1.0, 0.25, 0.75)
    kernel = math.sinh(0.25) ** 2 / math.sinh(1.0)
    assert kernel == pytest.approx(0.0543, abs=1e-4)
    f = fluctuation_scale_f
    assert cd.sigma[0, 1] == pytest.approx(f(0.5, 1.0, 0.25) * f(0.5, 1.0, 0.75) * kernel, rel=1e-12)
    np.testing.assert_allclose(cd.sigma, cd.sigma_closed, rtol=1e-12)
    assert 1 / math.sqrt(np.linalg.det(cd.sigma)) == pytest.approx(cd.H2, rel=1e-9)
    assert cd.F2 == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        hessian_F2_at_critical(0.5, 1.0, 0.6, 0.4)


def test_hessian_negative_definite():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s, t = np.sort(rng.uniform(0.02, 0.98, 2))
        rho, c = rng.uniform(0.1, 0.9), rng.uniform(-4, 4)
        cd = hessian_F2_at_critical(rho, c, s, t)
        assert np.all(np.linalg.eigvalsh(cd.hessian) < 0)
        assert np.all(np.linalg.eigvalsh(cd.sigma) > 0)


def test_small_c_gives_brownian_bridge():
    s, t = 0.3, 0.8
    cd = hessian_F2_at_critical(0.4, 1e-6, s, t)
    f = fluctuation_scale_f(0.4, 1e-6, np.array([s, t]))
    middle = cd.sigma / np.outer(f, f)
    np.testing.assert_allclose(middle, [[s * (1 - s), s * (1 - t)], [s * (1 - t), t * (1 - t)]], rtol=1e-6)


def test_embedding_examples():
    e = universal_embedding(-0.7, 0.7)
    assert e.params.rho == pytest.approx(0.5, abs=1e-15)
    e = universal_embedding(-1.0, 1.0)
    assert e.params.c == pytest.approx(2.0, abs=1e-11)
    t = np.linspace(0, 1, 101)
    Lf = limit_shape(e.params)
    assert np.max(np.abs(Lf(t) - e.restricted(t))) < 1e-9
    e = universal_embedding(0.0, 1e-4)
    assert e.params.c == pytest.approx(1e-4, rel=1e-6)
    assert e.params.rho == pytest.approx(0.5, abs=1e-4)
    with pytest.raises(ValueError):
        universal_embedding(1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 4))
def test_embedding_identity_everywhere(s0, width):
    e = universal_embedding(s0, s0 + width)
    assert e.params.c == pytest.approx(width, rel=1e-9)
    t = np.linspace(0, 1, 101)
    assert np.max(np.abs(limit_shape(e.params)(t) - e.restricted(t))) < 1e-9


def test_universal_shape():
    U = universal_shape()
    s = np.linspace(-30, 30, 601)
    assert np.all(U(s) >= np.abs(s))
    assert U(0.0) == pytest.approx(math.log(2))
    assert U(50.0) - 50.0 < 1e-40
    np.testing.assert_allclose(U.derivative(s), np.tanh(s))


def test_q_stirling():
    e100, e200, e400 = (q_stirling_check(n, n, 1.0) for n in (100, 200, 400))
    assert e100 <= 0.05
    assert e200 <= 0.5 * e100 * 1.25
    assert e100 / e200 >= 1.6 and e200 / e400 >= 1.6
    assert q_stirling_check(50, 50, 0.0) == pytest.approx(1 / 600, rel=0.01)  # classical Stirling, 1/(12 n)
    with pytest.raises(ValueError):
        q_stirling_check(0, 10, 1.0)
