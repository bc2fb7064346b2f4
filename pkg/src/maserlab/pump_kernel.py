"""Atomic transition probability q(x) and its noise averages.

The sharp kernel is the Rabi flip probability at scaled photon number
``x = n/N``.  Two noise families are supported: a gamma-distributed
pump parameter (closed form through the gamma characteristic function)
and a Gaussian-distributed detuning (error-function part in closed form,
oscillating part by a steepest-descent contour).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.special import wofz

from .errors import DomainError, QuadratureError
from .model import MaserParams, NoiseKind, NoiseSpec

__all__ = [
    "Mode",
    "PumpKernel",
    "q_sharp",
    "q_sharp_ratio",
    "q_avg_pump",
    "q_avg_detuning",
    "i_one",
    "i_two",
    "j_one",
    "gamma_moment",
]

_SQRT2PI = np.sqrt(2.0 * np.pi)


@lru_cache(maxsize=16)
def _gauss_legendre(n: int):
    return leggauss(n)


def _sinc(z):
    # unnormalized sin(z)/z
    return np.sinc(np.asarray(z) / np.pi)


def q_sharp(x, theta: float, delta: float = 0.0):
    """Sharp flip probability ``x/(x+Δ²) sin²(θ√(x+Δ²))``.

    Written as ``x θ² sinc²(θ√(x+Δ²))`` so the ``x → 0`` limit is exact.
    """
    x = np.asarray(x, dtype=float)
    u = x + delta * delta
    return x * theta * theta * _sinc(theta * np.sqrt(u)) ** 2


def q_sharp_ratio(x, theta: float, delta: float = 0.0):
    """``q(x)/x``, finite at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    u = x + delta * delta
    return theta * theta * _sinc(theta * np.sqrt(u)) ** 2


def q_sharp_derivative(x, theta: float, delta: float = 0.0):
    x = np.asarray(x, dtype=float)
    d2 = delta * delta
    u = x + d2
    s = theta * np.sqrt(u)
    # (x/u)·θ² sinc(2θ√u); x/u -> 1 when Δ = 0
    out = np.where(u > 0, x / np.where(u > 0, u, 1.0), 1.0) * theta * theta * _sinc(2.0 * s)
    if d2 > 0:
        out = out + d2 * theta * theta * _sinc(s) ** 2 / u
    return out


# --------------------------------------------------------------------------
# gamma-distributed pump parameter
# --------------------------------------------------------------------------

def _gamma_shape_rate(theta: float, sigma_sq: float):
    if theta <= 0:
        raise DomainError("gamma pump noise requires theta > 0")
    return theta * theta / sigma_sq, theta / sigma_sq


def _gamma_one_minus_re(u, theta: float, sigma_sq: float):
    """``1 - Re E[exp(2i ξ √u)]`` for gamma ξ, without cancellation."""
    _gamma_shape_rate(theta, sigma_sq)
    su = np.sqrt(u)
    c = 2.0 * su * sigma_sq / theta
    # k·c = 2θ√u exactly; factoring it out keeps tiny σ² finite
    small = c < 1e-6
    cs = np.where(small, 1.0, c)
    atan_c = np.where(small, 1.0 - c * c / 3.0, np.arctan(cs) / cs)
    log_c = np.where(small, 1.0 - 0.5 * c * c, np.log1p(cs * cs) / (cs * cs))
    li = 2.0 * theta * su * atan_c
    lr = -theta * su * c * log_c
    # Re(e^L - 1) = expm1(Lr) cos(Li) - 2 sin²(Li/2)
    return -(np.expm1(lr) * np.cos(li) - 2.0 * np.sin(0.5 * li) ** 2)


def _gamma_ratio(x, theta, sigma_sq, delta):
    x = np.asarray(x, dtype=float)
    u = x + delta * delta
    safe = np.where(u > 0, u, 1.0)
    r = 0.5 * _gamma_one_minus_re(safe, theta, sigma_sq) / safe
    return np.where(u > 0, r, theta * theta + sigma_sq)


def q_avg_pump(x, theta: float, sigma_sq: float, delta: float = 0.0):
    """Flip probability averaged over a gamma-distributed pump parameter.

    The gamma density has mean ``theta`` and variance ``sigma_sq``.  The
    closed form is ``x/(2u) [1 - Re (1 - 2i√u σ²/θ)^(-θ²/σ²)]`` with
    ``u = x + Δ²``.

    Raises
    ------
    DomainError
        If ``theta = 0`` while ``sigma_sq > 0``.
    """
    if sigma_sq == 0:
        return q_sharp(x, theta, delta)
    x = np.asarray(x, dtype=float)
    return x * _gamma_ratio(x, theta, sigma_sq, delta)


def _q_avg_pump_derivative(x, theta, sigma_sq, delta):
    x = np.asarray(x, dtype=float)
    k, beta = _gamma_shape_rate(theta, sigma_sq)
    d2 = delta * delta
    u = x + d2
    safe = np.where(u > 0, u, 1.0)
    c = 2.0 * np.sqrt(safe) / beta
    # Im (1 - ic)^(-k-1)
    im = np.exp(-0.5 * (k + 1) * np.log1p(c * c)) * np.sin((k + 1) * np.arctan(c))
    ds_du = np.where(u > 0, 0.5 * k * im / (beta * np.sqrt(safe)), theta * theta + sigma_sq)
    s_over_u = _gamma_ratio(x, theta, sigma_sq, delta)
    out = x / safe * ds_du
    out = np.where(u > 0, out, theta * theta + sigma_sq)
    if d2 > 0:
        out = out + d2 * s_over_u / u
    return out


def gamma_moment(order: int, theta: float, sigma_sq: float) -> float:
    """Raw moment ``E[ξ^order]`` of the gamma density (mean θ, variance σ²)."""
    if sigma_sq == 0:
        return theta ** order
    if theta <= 0:
        raise DomainError("gamma moments require theta > 0")
    out = 1.0
    for j in range(order):
        out *= theta + j * sigma_sq / theta
    return out


def i_one(theta: float, sigma_sq: float, delta: float = 0.0, x: float = 0.0) -> float:
    """Gamma-averaged ``⟨q(x)⟩/x``.

    At ``x = 0`` this is the slope that controls the thermal phase.  For
    ``theta = 0`` the gamma family degenerates and the value is continued
    by a zero-mean Gaussian with the same variance, which reproduces the
    moment value ``σ²`` at ``Δ = 0``.
    """
    if sigma_sq == 0:
        return float(q_sharp_ratio(x, theta, delta))
    if theta == 0:
        u = x + delta * delta
        if u == 0:
            return float(sigma_sq)
        return float(-np.expm1(-2.0 * u * sigma_sq) / (2.0 * u))
    return float(_gamma_ratio(x, theta, sigma_sq, delta))


def i_two(theta: float, sigma_sq: float, delta: float) -> float:
    """Gamma average of ``ξ² sin(2ξΔ)/(2ξΔ)``.

    Uses ``E[ξ sin(tξ)] = θ Im (1 - it σ²/θ)^(-θ²/σ² - 1)``.
    """
    if delta == 0:
        return theta * theta + sigma_sq
    if sigma_sq == 0:
        return float(theta * theta * _sinc(2.0 * theta * delta))
    if theta <= 0:
        raise DomainError("I2 requires theta > 0 for gamma noise")
    k, beta = _gamma_shape_rate(theta, sigma_sq)
    c = 2.0 * delta / beta
    im = np.exp(-0.5 * (k + 1) * np.log1p(c * c)) * np.sin((k + 1) * np.arctan(c))
    return float(theta * im / (2.0 * delta))


# --------------------------------------------------------------------------
# Gaussian-distributed detuning
# --------------------------------------------------------------------------

def _det_q0(x, sigma_sq, delta):
    """Non-oscillating half ``½⟨x/(x+ξ²)⟩`` via the Faddeeva function."""
    s = np.sqrt(sigma_sq)
    r = np.sqrt(x)
    z = (delta + 1j * r) / (s * np.sqrt(2.0))
    return 0.5 * np.pi * r * wofz(z).real / (s * _SQRT2PI)


def _det_qosc_contour(x, theta, sigma_sq, delta, n):
    """Oscillating half on the ray ``u = √x + i t²`` (steepest descent)."""
    tg, wg = _gauss_legendre(n)
    tmax = np.sqrt(20.0 / theta)
    t = 0.5 * tmax * (tg + 1.0)
    wt = 0.5 * tmax * wg
    r = np.sqrt(x)[..., None]
    u = r + 1j * t * t
    xi2 = u * u - r * r
    xi = np.sqrt(xi2)
    even = np.exp(-(xi2 + delta * delta) / (2.0 * sigma_sq)) * np.cosh(xi * delta / sigma_sq)
    even = even * 2.0 / (np.sqrt(sigma_sq) * _SQRT2PI)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = even * (r * r) / (u * xi) * np.exp(2j * theta * u) * 2j * t
    f = np.where(r > 0, f, 0.0)
    return -0.5 * (f * wt).sum(axis=-1).real


def _det_direct(x, theta, sigma_sq, delta, panels):
    """Full average by composite Gauss-Legendre after ``ξ = √x sinh t``."""
    tg, wg = _gauss_legendre(16)
    s = np.sqrt(sigma_sq)
    span = abs(delta) + 14.0 * s
    r = np.sqrt(x)[..., None]
    total = np.zeros(np.shape(x))
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = (0.5 * (edges[:-1, None] + edges[1:, None]) + 0.5 * np.diff(edges)[:, None] * tg).ravel()
    weights = (0.5 * np.diff(edges)[:, None] * wg).ravel()
    with np.errstate(invalid="ignore", divide="ignore"):
        tmax = np.arcsinh(span / np.where(r > 0, r, 1.0))
        t = nodes * tmax
        ch = np.cosh(t)
        xi = r * np.sinh(t)
        flip = np.sin(theta * r * ch) ** 2 * r / ch * tmax
        for sign in (1.0, -1.0):
            dens = np.exp(-((sign * xi - delta) ** 2) / (2.0 * sigma_sq)) / (s * _SQRT2PI)
            total = total + (dens * flip * weights).sum(axis=-1)
    return np.where(np.asarray(x) > 0, total, 0.0)


def q_avg_detuning(x, theta: float, delta: float, sigma_sq: float, quad_tol: float = 1e-10):
    """Flip probability averaged over a Gaussian detuning.

    Returns
    -------
    total, q0, q_osc : ndarray
        The average and its non-oscillating and oscillating parts.

    Raises
    ------
    QuadratureError
        If the estimate cannot be converged to ``quad_tol``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if sigma_sq <= 0:
        q = q_sharp(x, theta, delta)
        u = x + delta * delta
        q0 = 0.5 * x / np.where(u > 0, u, 1.0)
        return q, q0, q - q0
    q0 = _det_q0(x, sigma_sq, delta)
    if theta == 0:
        return np.zeros_like(x), q0, -q0
    if theta * np.sqrt(sigma_sq) > 5.0:
        a = _det_qosc_contour(x, theta, sigma_sq, delta, 64)
        b = _det_qosc_contour(x, theta, sigma_sq, delta, 96)
        err = np.max(np.abs(a - b), initial=0.0)
        if err <= quad_tol:
            return q0 + b, q0, b
    panels = 64
    prev = _det_direct(x, theta, sigma_sq, delta, panels)
    err = np.inf
    while panels < 1 << 16:
        panels *= 2
        cur = _det_direct(x, theta, sigma_sq, delta, panels)
        err = np.max(np.abs(cur - prev), initial=0.0)
        prev = cur
        if err <= quad_tol:
            return cur, q0, cur - q0
    raise QuadratureError("detuning average did not converge", err)


def j_one(theta: float, delta: float, sigma_sq: float, quad_tol: float = 1e-10) -> float:
    """Gaussian average of ``sin²(θξ)/ξ²`` (slope of ``⟨q⟩`` at ``x = 0``).

    Uses ``sin²(θξ)/ξ² = ½∫₀^{2θ}(2θ-s)cos(sξ) ds`` and the Gaussian
    characteristic function, leaving a smooth one-dimensional integral.
    """
    if sigma_sq == 0:
        return float(q_sharp_ratio(0.0, theta, delta))
    if theta == 0:
        return 0.0
    f = lambda s: (2 * theta - s) * np.exp(-0.5 * s * s * sigma_sq) * np.cos(s * delta)
    upper = min(2.0 * theta, 40.0 / np.sqrt(sigma_sq))
    val, err = quad(f, 0.0, upper, limit=1000, epsabs=0.1 * quad_tol, epsrel=1e-13)
    if err > quad_tol:
        raise QuadratureError("J1 quadrature", err)
    return 0.5 * val


# --------------------------------------------------------------------------
# kernel object
# --------------------------------------------------------------------------

class Mode(str, Enum):
    SHARP = "sharp"
    AVERAGED = "averaged"


@dataclass(frozen=True)
class PumpKernel:
    """Evaluatable flip probability for one configuration.

    ``Mode.SHARP`` evaluates the sharp kernel at the mean parameters
    regardless of the noise (selective measurement); ``Mode.AVERAGED``
    applies the noise average.

    Examples
    --------
    >>> from maserlab.model import MaserParams
    >>> k = PumpKernel(MaserParams(a=1, n_b=0.15, N=35, theta=3.141592653589793))
    >>> round(float(k(0.25)), 12)
    1.0
    """

    params: MaserParams
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    mode: Mode = Mode.AVERAGED
    quad_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.effective_kind is NoiseKind.PUMP_GAMMA and self.params.theta <= 0:
            raise DomainError("gamma pump noise requires theta > 0")

    @property
    def effective_kind(self) -> NoiseKind:
        if self.mode is Mode.SHARP or self.noise.sigma_sq == 0:
            return NoiseKind.NONE
        return self.noise.kind

    @property
    def is_sharp(self) -> bool:
        return self.effective_kind is NoiseKind.NONE

    def sharp(self) -> "PumpKernel":
        return replace(self, mode=Mode.SHARP)

    def averaged(self) -> "PumpKernel":
        return replace(self, mode=Mode.AVERAGED)

    def __call__(self, x):
        p, kind = self.params, self.effective_kind
        if kind is NoiseKind.NONE:
            return q_sharp(x, p.theta, p.delta)
        if kind is NoiseKind.PUMP_GAMMA:
            return q_avg_pump(x, p.theta, self.noise.sigma_sq, p.delta)
        x = np.asarray(x, dtype=float)
        out = q_avg_detuning(x.ravel(), p.theta, p.delta, self.noise.sigma_sq, self.quad_tol)[0]
        return np.clip(out.reshape(x.shape), 0.0, 1.0)

    def ratio(self, x):
        """``⟨q(x)⟩/x`` with the analytic value at ``x = 0``."""
        p, kind = self.params, self.effective_kind
        if kind is NoiseKind.NONE:
            return q_sharp_ratio(x, p.theta, p.delta)
        if kind is NoiseKind.PUMP_GAMMA:
            return _gamma_ratio(x, p.theta, self.noise.sigma_sq, p.delta)
        x = np.asarray(x, dtype=float)
        small = x < 1e-12
        safe = np.where(small, 1.0, x)
        out = self(safe) / safe
        if np.any(small):
            out = np.where(small, self.theta_eff_sq(), out)
        return out

    def derivative(self, x):
        """``d⟨q⟩/dx``; analytic for sharp and gamma kernels."""
        p, kind = self.params, self.effective_kind
        if kind is NoiseKind.NONE:
            return q_sharp_derivative(x, p.theta, p.delta)
        if kind is NoiseKind.PUMP_GAMMA:
            return _q_avg_pump_derivative(x, p.theta, self.noise.sigma_sq, p.delta)
        x = np.asarray(x, dtype=float)
        h = 1e-6 * np.maximum(x, 1.0)
        lo = np.maximum(x - h, 0.0)
        return (self(x + h) - self(lo)) / (x + h - lo)

    def theta_eff_sq(self) -> float:
        """Slope ``lim_{x→0} ⟨q(x)⟩/x``."""
        p, kind = self.params, self.effective_kind
        if kind is NoiseKind.NONE:
            return float(q_sharp_ratio(0.0, p.theta, p.delta))
        if kind is NoiseKind.PUMP_GAMMA:
            return i_one(p.theta, self.noise.sigma_sq, p.delta)
        return j_one(p.theta, p.delta, self.noise.sigma_sq, self.quad_tol)
