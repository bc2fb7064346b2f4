"""Thermal-maser critical lines and the order of the transition.

The thermal phase is the geometric distribution with ratio
``(n_b + aθ_eff²)/(1 + n_b + bθ_eff²)``; it stops being normalizable at
``a = 1/2 + 1/(2θ_eff²)``.  For gamma pump noise ``θ_eff²`` is the
averaged slope ``I₁`` and for Gaussian detuning noise it is ``J₁``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import write_csv
from .errors import DegenerateError, DomainError
from .model import MaserParams, NoiseKind, NoiseSpec, NumericControls
from .pump_kernel import PumpKernel, gamma_moment, i_one, i_two, j_one, q_sharp_ratio

__all__ = [
    "CriticalLine",
    "TransitionOrder",
    "critical_line_pump",
    "critical_line_detuning",
    "critical_line",
    "transition_order",
    "saddle_onset",
]

_REGIMES = ("general", "delta0", "peaked", "broad")


@dataclass(frozen=True, eq=False)
class CriticalLine:
    """``a_crit`` sampled on a θ grid; values above 1 mean no transition."""

    theta: np.ndarray
    a_crit: np.ndarray
    regime: str
    noise: NoiseSpec

    def to_csv(self, path) -> None:
        rows = zip(self.theta.tolist(), self.a_crit.tolist(), [self.regime] * len(self.theta))
        write_csv(path, ["theta", "a_crit", "regime"], rows)


@dataclass(frozen=True)
class TransitionOrder:
    theta: float
    order: str
    x_bar_prime: float
    x_bar_second: float


def critical_line_pump(theta: float, sigma_sq: float, delta: float = 0.0, regime: str = "general") -> float:
    """Critical ``a`` for gamma pump noise.

    Parameters
    ----------
    regime : {'general', 'delta0', 'peaked', 'broad'}
        ``'general'`` uses the gamma closed form of ``I₁`` (continued to
        ``θ = 0`` by moments); ``'delta0'`` the undetuned formula
        ``1/2 + 1/(2(σ²+θ²))``; ``'peaked'`` and ``'broad'`` the
        narrow and wide noise limits.
    """
    if regime == "general":
        i1 = i_one(theta, sigma_sq, delta)
    elif regime == "delta0":
        i1 = sigma_sq + theta * theta
    elif regime == "peaked":
        if delta == 0:
            i1 = sigma_sq + theta * theta
        else:
            i1 = math.sin(theta * delta) ** 2 / delta ** 2 + sigma_sq * math.cos(2 * theta * delta)
    elif regime == "broad":
        if delta == 0:
            raise DomainError("broad-noise limit requires delta != 0")
        i1 = 1.0 / (2.0 * delta * delta)
    else:
        raise ValueError(f"regime must be one of {_REGIMES}")
    return 0.5 + 0.5 / i1 if i1 > 0 else math.inf


def _g_peaked(theta: float, delta: float) -> float:
    s = math.sin(theta * delta)
    return 3 * s * s / delta ** 2 + theta ** 2 * math.cos(2 * theta * delta) - 2 * theta * math.sin(2 * theta * delta) / delta


def critical_line_detuning(
    theta: float, delta: float, sigma_sq: float, regime: str = "general", quad_tol: float = 1e-10
) -> float:
    """Critical ``a`` for Gaussian detuning noise.

    ``'peaked'`` uses the second-order expansion in ``σ_Δ²``, ``'broad'``
    the wide-noise value ``1/2 + Δ²``.
    """
    if regime == "general":
        j1 = j_one(theta, delta, sigma_sq, quad_tol)
    elif regime == "peaked":
        if delta == 0:
            # sin²(θξ)/ξ² ≈ θ² - θ⁴ξ²/3
            j1 = theta ** 2 - theta ** 4 * sigma_sq / 3.0
        else:
            return 0.5 + 0.5 * delta ** 2 / (math.sin(theta * delta) ** 2 + sigma_sq * _g_peaked(theta, delta))
    elif regime == "broad":
        return 0.5 + delta * delta
    elif regime == "delta0":
        j1 = float(q_sharp_ratio(0.0, theta, delta)) if sigma_sq == 0 else j_one(theta, 0.0, sigma_sq, quad_tol)
    else:
        raise ValueError(f"regime must be one of {_REGIMES}")
    return 0.5 + 0.5 / j1 if j1 > 0 else math.inf


def critical_line(thetas, noise: NoiseSpec, delta: float = 0.0, regime: str = "general") -> CriticalLine:
    thetas = np.asarray(thetas, dtype=float)
    if noise.kind is NoiseKind.DETUNING_GAUSSIAN:
        vals = [critical_line_detuning(t, delta, noise.sigma_sq, regime) for t in thetas]
    else:
        vals = [critical_line_pump(t, noise.sigma_sq, delta, regime) for t in thetas]
    return CriticalLine(thetas, np.array(vals), regime, noise)


# --------------------------------------------------------------------------
# order of the transition
# --------------------------------------------------------------------------

def _xi4(theta: float, sigma_sq: float) -> float:
    if theta == 0:
        return 3.0 * sigma_sq ** 2  # zero-mean Gaussian continuation
    return gamma_moment(4, theta, sigma_sq)


def _xi6(theta: float, sigma_sq: float) -> float:
    if theta == 0:
        return 15.0 * sigma_sq ** 3
    return gamma_moment(6, theta, sigma_sq)


def _dxi4(theta: float, sigma_sq: float) -> float:
    if theta == 0:
        return 0.0
    # d/dθ of (θ²+σ²)(θ²+2σ²)(θ²+3σ²)/θ²
    s = sigma_sq
    f = [theta ** 2 + j * s for j in (1, 2, 3)]
    prod = f[0] * f[1] * f[2]
    dprod = 2 * theta * (f[1] * f[2] + f[0] * f[2] + f[0] * f[1])
    return dprod / theta ** 2 - 2 * prod / theta ** 3


def _richardson(f, x: float, order: int) -> float:
    h = 1e-4 * max(abs(x), 1.0)

    def central(step):
        if order == 1:
            return (f(x + step) - f(x - step)) / (2 * step)
        return (f(x + step) - 2 * f(x) + f(x - step)) / step ** 2

    return (4 * central(h / 2) - central(h)) / 3


def transition_order(theta: float, sigma_sq: float, delta: float = 0.0, zero_tol: float = 1e-10) -> TransitionOrder:
    """Classify the thermal-maser transition at pump parameter ``theta``.

    Raises
    ------
    DegenerateError
        When both ``x̄'`` and ``x̄''`` vanish within ``zero_tol``.
    """
    if delta == 0:
        m4 = _xi4(theta, sigma_sq)
        if m4 == 0.0:
            raise DegenerateError("no pump and no noise: the flip probability vanishes identically")
        xp = 6.0 * theta / m4
        xpp = 6.0 / m4 * (1 - 2 * theta / m4 * _dxi4(theta, sigma_sq) + 7.0 / 12.0 * (theta / m4) ** 2 * _xi6(theta, sigma_sq))
    else:
        if theta <= 0:
            raise DomainError("detuned transition order requires theta > 0")
        f1 = lambda t: i_one(t, sigma_sq, delta)
        f2 = lambda t: i_two(t, sigma_sq, delta)
        den = f1(theta) - f2(theta)
        xp = delta ** 2 * _richardson(f1, theta, 1) / den
        xpp = (delta ** 2 * _richardson(f1, theta, 2) + xp * _richardson(f2, theta, 1)) / den
    if abs(xp) >= zero_tol:
        order = "second"
    elif abs(xpp) >= zero_tol:
        order = "third"
    else:
        raise DegenerateError(f"x' = {xp:.3g} and x'' = {xpp:.3g} both vanish at theta={theta}")
    return TransitionOrder(theta, order, xp, xpp)


def saddle_onset(
    theta: float,
    noise: NoiseSpec,
    n_b: float = 0.15,
    N: float = 35.0,
    delta: float = 0.0,
    tol: float = 1e-6,
) -> float:
    """Smallest ``a`` at which a nonzero saddle exists, by bisection.

    Returns ``inf`` when no saddle exists even at ``a = 1``.
    """
    from .potential import find_saddles

    def has_saddle(a):
        params = MaserParams(a=a, n_b=n_b, N=N, theta=theta, delta=delta)
        kernel = PumpKernel(params, noise)
        return bool(find_saddles(params, kernel, NumericControls()).saddles)

    lo, hi = 0.5, 1.0
    if not has_saddle(hi):
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_saddle(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
