import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maserlab import MaserParams, NoiseKind, NoiseSpec, NumericControls, PumpKernel, validate
from maserlab.observables import (
    AtomMatrices,
    asymptotic_joint,
    joint_probabilities,
    p_joint,
    p_minus,
    p_plus,
    p_plus_resummed,
    revival_bound_detuning_regime,
    revival_bound_pump_regime,
    revival_structure,
)
from maserlab.steady_state import distribution_for, stationary_distribution

FIG1 = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=1.0)


def _direct_p_plus(dist, params):
    n = dist.n
    q = np.sin(params.theta * np.sqrt((n + 1) / params.N + params.delta ** 2)) ** 2
    q *= ((n + 1) / params.N) / ((n + 1) / params.N + params.delta ** 2)
    return params.a - params.a * np.dot(dist.probs, q) + params.b * np.dot(dist.probs[1:], q[:-1])


def test_p_plus_direct_sum():
    params = MaserParams(a=0.9, n_b=0.3, N=20, theta=4.0, delta=0.2)
    kernel = PumpKernel(params)
    dist = stationary_distribution(params, kernel)
    assert p_plus(dist, kernel) == pytest.approx(_direct_p_plus(dist, params), abs=1e-14)
    assert p_plus(dist, kernel) + p_minus(dist, kernel) == pytest.approx(1.0, abs=1e-14)


def test_trivial_limits():
    params = MaserParams(a=1.0, n_b=0.0, N=10, theta=0.0)
    dist = stationary_distribution(params)
    kernel = PumpKernel(params)
    assert p_plus(dist, kernel) == pytest.approx(1.0)
    assert p_joint(dist, kernel, "+", "+") == pytest.approx(1.0)


def test_relaxation_is_inverse():
    params = MaserParams(a=1, n_b=0.15, N=35, theta=7.0)
    mats = AtomMatrices.build(params, PumpKernel(params), 120)
    rng = np.random.default_rng(1)
    v = rng.random(121)
    y = mats.relax(v)
    lower, diag, upper = (band / params.N for band in mats.lc_bands())
    diag = diag + 1.0
    back = diag * y
    back[:-1] += upper * y[1:]
    back[1:] += lower * y[:-1]
    np.testing.assert_allclose(back, v, rtol=1e-12)
    # columns of (1 + L_C/N) sum to one: relaxation conserves probability
    assert y.sum() == pytest.approx(v.sum(), rel=1e-12)


configs = st.builds(
    lambda a, nb, N, th, s2, kind: validate(
        MaserParams(a, nb, N, th), NoiseSpec(kind, s2 if kind is not NoiseKind.NONE else 0.0)
    ),
    st.floats(0.0, 1.0),
    st.floats(0.0, 3.0),
    st.floats(1.0, 200.0),
    st.floats(0.05, 60.0),
    st.floats(0.0, 30.0),
    st.sampled_from(list(NoiseKind)),
)


@given(cfg=configs, sharp=st.booleans())
def test_joint_marginals(cfg, sharp):
    dist = distribution_for(cfg)
    kernel = PumpKernel(cfg.params, cfg.noise)
    if sharp:
        kernel = kernel.sharp()
    j = joint_probabilities(dist, kernel)
    assert sum(j.values()) == pytest.approx(1.0, abs=1e-10)
    assert j[("+", "+")] + j[("+", "-")] == pytest.approx(p_plus(dist, kernel), abs=1e-10)
    assert j[("-", "+")] + j[("-", "-")] == pytest.approx(p_minus(dist, kernel), abs=1e-10)


def test_asymptotic_joint():
    assert asymptotic_joint(0.5) == pytest.approx(0.375)
    with pytest.raises(ValueError):
        asymptotic_joint(1.5)


@pytest.mark.parametrize("theta", [5.0, 20.0, 100.0])
def test_exact_resummation_equals_direct_sum(theta):
    params = FIG1.__class__(a=1.0, n_b=0.15, N=35.0, theta=theta)
    dist = stationary_distribution(params)
    res = p_plus_resummed(dist, params, mode="exact")
    assert res.p_plus == pytest.approx(_direct_p_plus(dist, params), abs=1e-6)


def test_exact_resummation_detuned_and_general_a():
    params = MaserParams(a=0.8, n_b=0.15, N=35.0, theta=40.0, delta=0.3)
    dist = stationary_distribution(params)
    res = p_plus_resummed(dist, params, mode="exact")
    assert res.p_plus == pytest.approx(_direct_p_plus(dist, params), abs=1e-6)


def test_peaked_resummation_tracks_exact():
    params = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=150.0)
    noise = NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0)
    dist = stationary_distribution(params, PumpKernel(params, noise))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        peaked = p_plus_resummed(dist, params, mode="peaked")
    assert peaked.p_plus == pytest.approx(_direct_p_plus(dist, params), abs=0.05)
    with pytest.raises(ValueError):
        p_plus_resummed(dist, params, mode="nope")


def test_peaked_warns_when_broad():
    params = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=100.0)
    dist = stationary_distribution(params, PumpKernel(params, NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0)))
    with pytest.warns(RuntimeWarning, match="not peaked"):
        p_plus_resummed(dist, params, mode="peaked")


def test_peaked_limit_relation():
    # single-phase, narrow distribution: P(+) ≈ a - x̄
    params = MaserParams(a=1.0, n_b=0.15, N=1000.0, theta=300.0)
    noise = NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0)
    kernel = PumpKernel(params, noise)
    dist = stationary_distribution(params, kernel)
    assert dist.x_bar > 5 * dist.sigma_x
    measured = p_plus(dist, kernel.sharp())
    assert measured == pytest.approx(params.a - dist.x_bar, abs=0.02)
    # same limit written through the averaged flip probability at the peak
    q_peak = float(kernel(dist.x_bar))
    assert measured == pytest.approx(params.a - (2 * params.a - 1) * q_peak, abs=0.02)


def test_revival_structure():
    rev = revival_structure(0.5, 0.1287, 0.0, 35.0)
    assert rev.thetas[0] == pytest.approx(2 * math.pi * 35 * math.sqrt(0.5))
    assert rev.widths[1] == pytest.approx(2 * rev.widths[0])
    assert rev.nu_max == 3
    assert revival_bound_pump_regime(35.0, 1.0, 0.15) == 7
    assert revival_bound_detuning_regime(800.0, 1.0, 0.15, 25.0) >= 0
    with pytest.raises(ValueError):
        revival_structure(0.0, 0.1, 0.0, 35.0)


def _simulate_atoms(N, theta, n_b, atoms, rng, sigma_sq=0.0, burn=1000):
    """Atom-by-atom simulation: Poisson arrivals, damped cavity in between."""
    n = int(0.3 * N)
    waits = rng.exponential(1.0 / N, atoms)
    draws = rng.random(atoms)
    thetas = rng.gamma(theta ** 2 / sigma_sq, sigma_sq / theta, atoms) if sigma_sq else np.full(atoms, theta)
    excited = np.zeros(atoms, dtype=bool)
    for i in range(atoms):
        t = waits[i]
        while True:
            up, down = n_b * (n + 1), (1 + n_b) * n
            dt = rng.exponential(1.0 / (up + down))
            if dt > t:
                break
            t -= dt
            n += 1 if rng.random() * (up + down) < up else -1
        flip = draws[i] < math.sin(thetas[i] * math.sqrt((n + 1) / N)) ** 2
        excited[i] = not flip
        n += flip
    e = excited[burn:]
    return e.mean(), np.mean(e[:-1] & e[1:])


@pytest.mark.parametrize("theta,sigma_sq", [(200.0, 0.0), (100.0, 25.0)])
def test_joint_probability_monte_carlo(theta, sigma_sq):
    params = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=theta)
    noise = NoiseSpec(NoiseKind.PUMP_GAMMA, sigma_sq) if sigma_sq else NoiseSpec()
    kernel = PumpKernel(params, noise)
    dist = stationary_distribution(params, kernel)
    j = joint_probabilities(dist, kernel)
    mc_p, mc_pp = _simulate_atoms(35.0, theta, 0.15, 200_000, np.random.default_rng(5), sigma_sq)
    assert mc_p == pytest.approx(j[("+", "+")] + j[("+", "-")], abs=0.01)
    assert mc_pp == pytest.approx(j[("+", "+")], abs=0.01)
