import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.stats import gamma as gamma_dist

from maserlab import DomainError, MaserParams, Mode, NoiseKind, NoiseSpec, PumpKernel
from maserlab.pump_kernel import (
    _q_avg_pump_derivative,
    gamma_moment,
    i_one,
    i_two,
    j_one,
    q_avg_detuning,
    q_avg_pump,
    q_sharp,
    q_sharp_derivative,
    q_sharp_ratio,
)


def _mp_q(x, theta, delta):
    mpmath.mp.dps = 40
    x, theta, delta = mpmath.mpf(x), mpmath.mpf(theta), mpmath.mpf(delta)
    u = x + delta ** 2
    return float(x / u * mpmath.sin(theta * mpmath.sqrt(u)) ** 2)


@pytest.mark.parametrize("x", [1e-9, 0.01, 0.25, 0.7, 1.0, 3.3])
@pytest.mark.parametrize("theta,delta", [(0.3, 0.0), (np.pi, 0.0), (12.0, 0.4), (200.0, 1.5)])
def test_sharp_kernel_matches_mpmath(x, theta, delta):
    assert q_sharp(x, theta, delta) == pytest.approx(_mp_q(x, theta, delta), rel=1e-12, abs=1e-15)


def test_sharp_kernel_limits():
    assert q_sharp(0.0, 5.0) == 0.0
    assert q_sharp_ratio(0.0, 3.0) == pytest.approx(9.0)
    assert q_sharp_ratio(0.0, 2.0, 0.5) == pytest.approx(math.sin(1.0) ** 2 / 0.25)
    assert q_sharp(0.25, np.pi) == pytest.approx(1.0)


@given(
    x=st.floats(1e-6, 4.0),
    theta=st.floats(0.0, 300.0),
    delta=st.floats(-3.0, 3.0),
)
def test_sharp_kernel_is_probability(x, theta, delta):
    q = float(q_sharp(x, theta, delta))
    assert -1e-15 <= q <= 1.0 + 1e-15
    assert q == pytest.approx(x * float(q_sharp_ratio(x, theta, delta)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("theta,delta", [(1.0, 0.0), (7.0, 0.3), (30.0, 0.0)])
def test_sharp_derivative_finite_difference(theta, delta):
    x, h = 0.37, 1e-6
    fd = (q_sharp(x + h, theta, delta) - q_sharp(x - h, theta, delta)) / (2 * h)
    assert q_sharp_derivative(x, theta, delta) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def _gamma_quad(x, theta, sigma_sq, delta, kernel=q_sharp):
    k, rate = theta ** 2 / sigma_sq, theta / sigma_sq
    dist = gamma_dist(k, scale=1.0 / rate)
    lo, hi = dist.ppf(1e-16), dist.isf(1e-16)
    f = lambda t: float(kernel(x, t, delta)) * dist.pdf(t)
    pts = np.linspace(lo, hi, 200)
    return sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))


@pytest.mark.parametrize("x", [0.0, 0.05, 0.5, 1.0])
@pytest.mark.parametrize("theta,sigma_sq,delta", [(1.0, 0.1, 0.0), (5.0, 1.0, 0.0), (20.0, 25.0, 0.0), (3.0, 0.5, 0.7)])
def test_gamma_average_matches_quadrature(x, theta, sigma_sq, delta):
    got = float(q_avg_pump(x, theta, sigma_sq, delta))
    if x == 0.0:
        assert got == 0.0
        ref = _gamma_quad(0.0, theta, sigma_sq, delta, kernel=q_sharp_ratio)
        assert i_one(theta, sigma_sq, delta) == pytest.approx(ref, rel=1e-8)
    else:
        assert got == pytest.approx(_gamma_quad(x, theta, sigma_sq, delta), abs=1e-10)


def test_gamma_slope_at_zero_detuning_is_second_moment():
    for theta, s2 in [(0.5, 0.1), (2.0, 10.0), (40.0, 25.0)]:
        assert i_one(theta, s2) == pytest.approx(theta ** 2 + s2, rel=1e-12)
    assert i_one(0.0, 10.0) == 10.0


def test_gamma_derivative_finite_difference():
    for theta, s2, d in [(4.0, 2.0, 0.0), (10.0, 25.0, 0.5)]:
        x, h = 0.4, 1e-6
        fd = (q_avg_pump(x + h, theta, s2, d) - q_avg_pump(x - h, theta, s2, d)) / (2 * h)
        assert _q_avg_pump_derivative(x, theta, s2, d) == pytest.approx(fd, rel=1e-6)


def test_gamma_moments_monte_carlo():
    rng = np.random.default_rng(12345)
    theta, s2 = 3.0, 2.0
    draws = rng.gamma(theta ** 2 / s2, s2 / theta, size=10_000_000)
    for order in (1, 2, 3, 4, 6):
        mc = np.mean(draws ** order)
        assert gamma_moment(order, theta, s2) == pytest.approx(mc, rel=5e-3)


def test_i_two_matches_quadrature():
    theta, s2, d = 4.0, 1.5, 0.6
    k, rate = theta ** 2 / s2, theta / s2
    dist = gamma_dist(k, scale=1.0 / rate)
    f = lambda t: t * math.sin(2 * t * d) / (2 * d) * dist.pdf(t)
    ref = quad(f, 0, dist.isf(1e-16), limit=400, epsabs=1e-13)[0]
    assert i_two(theta, s2, d) == pytest.approx(ref, rel=1e-9)


def _det_quad(x, theta, delta, s2):
    s = math.sqrt(s2)
    f = lambda xi: float(q_sharp(x, theta, xi)) * math.exp(-((xi - delta) ** 2) / (2 * s2)) / (s * math.sqrt(2 * math.pi))
    pts = np.linspace(delta - 12 * s, delta + 12 * s, 401)
    return sum(quad(f, a, b, epsabs=1e-14, limit=200)[0] for a, b in zip(pts[:-1], pts[1:]))


@pytest.mark.parametrize("theta,delta,s2", [(1.0, 0.0, 0.1), (10.0, 0.0, 25.0), (50.0, 0.5, 0.1), (200.0, 0.0, 25.0)])
def test_detuning_average_matches_quadrature(theta, delta, s2):
    xs = np.array([1e-4, 0.02, 0.3, 0.9])
    got, q0, qosc = q_avg_detuning(xs, theta, delta, s2)
    np.testing.assert_allclose(got, q0 + qosc, atol=1e-14)
    ref = [_det_quad(x, theta, delta, s2) for x in xs]
    np.testing.assert_allclose(got, ref, atol=5e-10)


def test_j_one_matches_quadrature():
    for theta, d, s2 in [(1.0, 0.0, 0.1), (2.0, 0.5, 0.01), (6.0, 0.2, 1.0)]:
        s = math.sqrt(s2)
        f = lambda xi: (theta ** 2 * np.sinc(theta * xi / np.pi) ** 2) * math.exp(-((xi - d) ** 2) / (2 * s2)) / (s * math.sqrt(2 * math.pi))
        ref = quad(f, d - 14 * s, d + 14 * s, limit=500, epsabs=1e-13)[0]
        assert j_one(theta, d, s2) == pytest.approx(ref, rel=1e-9)


def test_kernel_object_modes():
    p = MaserParams(a=1, n_b=0.15, N=35, theta=10.0)
    noisy = PumpKernel(p, NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0))
    assert not noisy.is_sharp
    assert noisy.sharp().is_sharp
    assert noisy.sharp().mode is Mode.SHARP
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(noisy.sharp()(x), q_sharp(x, 10.0))
    np.testing.assert_allclose(noisy(x), q_avg_pump(x, 10.0, 25.0))
    assert noisy.theta_eff_sq() == pytest.approx(125.0)


def test_kernel_rejects_gamma_at_zero_theta():
    with pytest.raises(DomainError):
        PumpKernel(MaserParams(a=1, n_b=0.1, N=10, theta=0.0), NoiseSpec(NoiseKind.PUMP_GAMMA, 1.0))


@given(
    x=st.floats(0.0, 3.0),
    theta=st.floats(0.05, 100.0),
    s2=st.floats(0.01, 30.0),
    delta=st.floats(0.0, 2.0),
)
def test_gamma_average_is_probability(x, theta, s2, delta):
    q = float(q_avg_pump(x, theta, s2, delta))
    assert -1e-12 <= q <= 1.0 + 1e-12


@pytest.mark.parametrize("s2", [2.2250738585e-313, 1e-200, 1e-12])
def test_gamma_average_vanishing_variance_is_sharp(s2):
    x = np.linspace(0.0, 3.0, 31)
    assert np.allclose(q_avg_pump(x, 2.0, s2, 0.3), q_sharp(x, 2.0, 0.3), rtol=0, atol=1e-10)
