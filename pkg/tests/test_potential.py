import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, simpson

from maserlab import MaserParams, NoiseKind, NoiseSpec, PumpKernel
from maserlab.potential import (
    asymptotic_min,
    asymptotic_v0_prime,
    find_saddles,
    potential_profile,
    r_function,
    r_series,
    v0,
    v0_prime,
    v0_second,
    v0_second_saddle_form,
    w_ratio,
)
from maserlab.steady_state import stationary_distribution

FIG1 = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=10.0)


def test_v0_matches_simpson():
    kernel = PumpKernel(FIG1)
    xs = np.linspace(0.0, 0.8, 40001)
    ref = simpson(v0_prime(xs, kernel), x=xs)
    assert float(v0(0.8, kernel)) == pytest.approx(ref, abs=1e-9)
    assert float(v0(0.0, kernel)) == 0.0


def test_v0_tracks_log_distribution():
    # -ln p_n / N approaches V0(x) up to O(ln N / N)
    params = MaserParams(a=1.0, n_b=0.15, N=400.0, theta=3.0)
    kernel = PumpKernel(params)
    dist = stationary_distribution(params, kernel)
    n = np.array([40, 120, 200, 280])
    lhs = -(np.log(dist.probs[n]) - np.log(dist.probs[n[0]])) / params.N
    pot = v0(n / params.N, kernel)
    np.testing.assert_allclose(lhs, pot - pot[0], atol=1e-2)


@pytest.mark.parametrize("z", [0.0, 0.1, 0.5, 0.9])
def test_r_closed_form_vs_long_series(z):
    assert float(r_function(z)) == pytest.approx(r_series(z, 5000), abs=1e-14)


def test_r_endpoint():
    assert float(r_function(1.0)) == pytest.approx(2 * math.log(2))


@pytest.mark.parametrize("x", [0.05, 0.3, 0.71])
@pytest.mark.parametrize("noise", [NoiseSpec(), NoiseSpec(NoiseKind.PUMP_GAMMA, 2.0)])
def test_curvature_finite_difference(x, noise):
    kernel = PumpKernel(FIG1, noise)
    h = 1e-5
    fd = (v0_prime(x + h, kernel) - v0_prime(x - h, kernel)) / (2 * h)
    assert float(v0_second(x, kernel)) == pytest.approx(float(fd), rel=1e-6)


def test_saddle_form_agrees_at_roots():
    kernel = PumpKernel(FIG1)
    report = find_saddles(FIG1, kernel)
    assert report.saddles
    for s in report.saddles:
        assert float(v0_second_saddle_form(s.x, kernel)) == pytest.approx(s.v0pp, rel=1e-6)
        assert float(w_ratio(s.x, kernel)) == pytest.approx(1.0, abs=1e-9)


def test_reference_point_saddles():
    report = find_saddles(FIG1, PumpKernel(FIG1))
    mins = [s.x for s in report.minima]
    assert mins == pytest.approx([0.0814, 0.3225, 0.7095], abs=5e-4)
    assert report.saddles[report.global_min].x == pytest.approx(0.3225, abs=5e-4)
    assert report.barrier == pytest.approx(0.0632, abs=5e-4)
    assert sum(s.T for s in report.minima) == pytest.approx(1.0)
    kinds = [s.kind for s in report.saddles]
    assert all(k1 != k2 for k1, k2 in zip(kinds, kinds[1:]))


def test_thermal_phase_has_no_saddle():
    params = MaserParams(a=0.5, n_b=0.15, N=35.0, theta=10.0)
    report = find_saddles(params, PumpKernel(params))
    assert report.is_thermal and report.global_min is None and report.barrier is None


def test_broad_pump_noise_single_minimum():
    params = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=200.0)
    report = find_saddles(params, PumpKernel(params, NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0)))
    assert len(report.minima) == 1
    m = report.minima[0]
    assert m.x == pytest.approx(0.5, abs=1e-3)
    assert m.sigma_x == pytest.approx(0.128, abs=2e-3)


def test_asymptotic_minimum():
    x_inf, p_inf = asymptotic_min(MaserParams(a=1.0, n_b=0.15, N=35.0, theta=1.0))
    assert x_inf == pytest.approx(0.3403, abs=1e-4)
    assert p_inf == pytest.approx(1.0 + 0.15 / 35 - x_inf)


@given(x=st.floats(0.01, 1.5), a=st.floats(0.55, 1.0), nb=st.floats(0.0, 2.0))
def test_asymptotic_potential_matches_phase_average(x, a, nb):
    # average w over uniformly distributed phase: ln-mean of the rate ratio
    params = MaserParams(a=a, n_b=nb, N=35.0, theta=1.0)
    def f(phi):
        s2 = math.sin(phi) ** 2
        return math.log((1 + nb) * x + (1 - a) * s2) - math.log(nb * x + a * s2)

    ref = quad(f, 0.0, math.pi / 2, limit=200, epsabs=1e-12)[0] / (math.pi / 2)
    assert float(asymptotic_v0_prime(x, params)) == pytest.approx(ref, abs=1e-9)


def test_profile_shape():
    prof = potential_profile(PumpKernel(FIG1), 1.0, 11)
    assert prof.grid.shape == prof.v0.shape == (11,)


def test_asymptotic_derivative_matches_phase_averaged_potential():
    # average V0' over one full oscillation (uniform in θ√x) around each x
    theta = 1600.0
    params = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=theta)
    kernel = PumpKernel(params)
    for x in np.linspace(0.05, 0.6, 8):
        s = math.sqrt(x)
        lo, hi = s - math.pi / theta, s + math.pi / theta
        avg = quad(lambda t: float(v0_prime(t * t, kernel)), lo, hi, limit=400, epsabs=1e-12)[0] / (hi - lo)
        assert avg == pytest.approx(float(asymptotic_v0_prime(x, params)), abs=1e-3)
