"""Effective potential of the large-N stationary distribution.

``p̄(x) ∝ exp(-N V₀(x))`` with ``V₀(x) = -∫₀ˣ ln w(ν) dν`` and
``w(x) = (n_b x + a⟨q⟩)/((1+n_b) x + b⟨q⟩)``.  Local minima of ``V₀``
locate the peaks of the distribution (maser phases).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq
from scipy.special import logsumexp

from ._io import write_csv
from .errors import DomainError, QuadratureError
from .model import MaserParams, NoiseKind, NumericControls
from .pump_kernel import PumpKernel

__all__ = [
    "PotentialProfile",
    "Saddle",
    "SaddleReport",
    "w_ratio",
    "v0",
    "v0_prime",
    "v0_second",
    "v0_second_saddle_form",
    "potential_profile",
    "find_saddles",
    "r_function",
    "r_series",
    "asymptotic_v0_prime",
    "asymptotic_min",
]


def w_ratio(x, kernel: PumpKernel):
    """``w(x)``, using ``⟨q⟩/x`` so that ``x = 0`` is regular."""
    p = kernel.params
    r = np.asarray(kernel.ratio(x), dtype=float)
    return (p.n_b + p.a * r) / (1.0 + p.n_b + p.b * r)


def v0_prime(x, kernel: PumpKernel):
    with np.errstate(divide="ignore"):
        return -np.log(w_ratio(x, kernel))


def _integrate(f, lo, hi, quad_tol, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(f, lo, hi, limit=2000, epsabs=quad_tol, epsrel=1e-12, points=points)
        except IntegrationWarning:
            val, err = quad(f, lo, hi, limit=2000, epsabs=quad_tol, epsrel=1e-12, points=points, full_output=1)[:2]
            if not np.isfinite(val) or err > 10 * quad_tol * max(1.0, abs(val)):
                raise QuadratureError(f"V0 integral on [{lo:.6g}, {hi:.6g}]", err) from None
    return val


def _panels(kernel: PumpKernel, lo: float, hi: float):
    # split so each panel spans a few oscillations of sin²(θ√x)
    theta = kernel.params.theta
    if theta <= 0 or hi <= lo:
        return [lo, hi]
    step = math.pi / theta
    s = np.arange(math.sqrt(lo), math.sqrt(hi), step)
    pts = np.unique(np.concatenate(([lo], s[1:] ** 2, [hi])))
    return pts.tolist()


def v0(x, kernel: PumpKernel, quad_tol: float = 1e-10):
    """``V₀(x) = -∫₀ˣ ln w``; accepts a scalar or an array of points."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs < 0):
        raise DomainError("V0 requires x >= 0")
    order = np.argsort(xs)
    out = np.empty_like(xs)
    f = lambda t: float(v0_prime(t, kernel))
    acc, prev = 0.0, 0.0
    for i in order:
        edges = _panels(kernel, prev, xs[i])
        for lo, hi in zip(edges[:-1], edges[1:]):
            acc += _integrate(f, lo, hi, quad_tol)
        out[i] = acc
        prev = xs[i]
    return out if np.ndim(x) else float(out[0])


def v0_second(x, kernel: PumpKernel):
    """Exact curvature ``V₀''(x) = -w'(x)/w(x)`` for ``x > 0``."""
    p = kernel.params
    x = np.asarray(x, dtype=float)
    q = np.asarray(kernel(x), dtype=float)
    dq = np.asarray(kernel.derivative(x), dtype=float)
    up = (p.n_b + p.a * dq) / (p.n_b * x + p.a * q)
    dn = (1.0 + p.n_b + p.b * dq) / ((1.0 + p.n_b) * x + p.b * q)
    return -(up - dn)


def v0_second_saddle_form(x, kernel: PumpKernel):
    """Curvature formula ``(2a-1)²(⟨q⟩ - x⟨q⟩')/(x²[a + n_b(2a-1)])``.

    It equals :func:`v0_second` only where ``x = (2a-1)⟨q(x)⟩``.
    """
    p = kernel.params
    x = np.asarray(x, dtype=float)
    q = np.asarray(kernel(x), dtype=float)
    dq = np.asarray(kernel.derivative(x), dtype=float)
    k = 2.0 * p.a - 1.0
    return k * k * (q - x * dq) / (x * x * (p.a + p.n_b * k))


@dataclass(frozen=True, eq=False)
class PotentialProfile:
    grid: np.ndarray
    v0: np.ndarray
    w: np.ndarray
    kernel: PumpKernel

    def to_csv(self, path) -> None:
        write_csv(path, ["x", "v0", "w"], zip(self.grid.tolist(), self.v0.tolist(), self.w.tolist()))


def potential_profile(kernel: PumpKernel, x_hi: float = 1.0, points: int = 201, quad_tol: float = 1e-10):
    grid = np.linspace(0.0, x_hi, points)
    return PotentialProfile(grid, v0(grid, kernel, quad_tol), w_ratio(grid, kernel), kernel)


# --------------------------------------------------------------------------
# saddle points
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Saddle:
    """One root of ``x = (2a-1)⟨q(x)⟩``.

    ``T`` and ``sigma_x`` are only meaningful for minima; ``T`` is the
    Gaussian weight ``e^{-NV₀}/√V₀''`` normalized over the nontrivial
    minima.
    """

    x: float
    kind: str
    v0: float
    v0pp: float
    sigma_x: float = math.nan
    T: float = math.nan


@dataclass(frozen=True)
class SaddleReport:
    """Nontrivial saddles of ``V₀`` plus barrier information.

    Attributes
    ----------
    saddles : list of Saddle
        Sorted by ``x``.  Empty in the thermal phase.
    global_min : int or None
        Index of the lowest nontrivial minimum, or None when the origin
        is lower (or no minimum exists).
    barrier : float or None
        Height of the lowest barrier between the two deepest competing
        minima, measured from the shallower one.  The origin competes
        when it is itself a local minimum (``w(0) < 1``).
    origin_is_min : bool
        True when ``V₀`` increases away from ``x = 0``.
    """

    saddles: list = field(default_factory=list)
    global_min: int | None = None
    barrier: float | None = None
    origin_is_min: bool = False

    @property
    def minima(self):
        return [s for s in self.saddles if s.kind == "min"]

    @property
    def is_thermal(self) -> bool:
        return not self.saddles


def _scan_grid(kernel: PumpKernel, x_hi: float) -> np.ndarray:
    theta = kernel.params.theta
    geo = np.geomspace(1e-12, x_hi, 240)
    lin = np.linspace(0.0, x_hi, 2049)[1:]
    parts = [geo, lin]
    if theta > 0:
        # resolve the sin²(θ√x) period: eight points per half-period in √x
        count = int(math.ceil(8.0 * theta * math.sqrt(x_hi) / math.pi)) + 1
        if count > 2048:
            parts.append(np.linspace(0.0, math.sqrt(x_hi), count)[1:] ** 2)
    return np.unique(np.concatenate(parts))


def find_saddles(params: MaserParams, kernel: PumpKernel, numerics: NumericControls | None = None) -> SaddleReport:
    """Locate and classify the saddle points of ``V₀``.

    Roots of ``1 - (2a-1)⟨q(x)⟩/x`` are bracketed on a grid over
    ``(0, 2a-1]`` and refined with Brent's method.
    """
    numerics = NumericControls() if numerics is None else numerics
    k = 2.0 * params.a - 1.0
    w0 = float(w_ratio(0.0, kernel))
    origin_is_min = w0 < 1.0
    if k <= 0:
        return SaddleReport(origin_is_min=origin_is_min)
    h = lambda x: 1.0 - k * np.asarray(kernel.ratio(x), dtype=float)
    grid = _scan_grid(kernel, k)
    hv = h(grid)
    roots = []
    for i in range(len(grid) - 1):
        a_, b_ = hv[i], hv[i + 1]
        if a_ == 0.0:
            roots.append(grid[i])
        elif a_ * b_ < 0:
            roots.append(brentq(lambda t: float(h(t)), grid[i], grid[i + 1], xtol=numerics.root_tol, rtol=1e-15))
    if hv[-1] == 0.0:
        roots.append(grid[-1])

    saddles = []
    values = v0(np.array(roots), kernel, numerics.quad_tol) if roots else []
    for x, v in zip(roots, values):
        curv = float(v0_second(x, kernel))
        saddles.append(Saddle(float(x), "min" if curv > 0 else "max", float(v), curv))

    N = params.N
    mins = [i for i, s in enumerate(saddles) if s.kind == "min"]
    if mins:
        logs = [-N * saddles[i].v0 - 0.5 * math.log(saddles[i].v0pp) for i in mins]
        norm = logsumexp(logs)
        for i, lg in zip(mins, logs):
            s = saddles[i]
            T = math.exp(lg - norm)
            saddles[i] = Saddle(s.x, s.kind, s.v0, s.v0pp, 1.0 / math.sqrt(N * s.v0pp), T)

    # competing minima, including the origin when it is a local minimum
    cands = [(saddles[i].v0, saddles[i].x) for i in mins]
    if origin_is_min:
        cands.append((0.0, 0.0))
    global_min = None
    if mins:
        best = min(mins, key=lambda i: saddles[i].v0)
        if not (origin_is_min and saddles[best].v0 > 0.0):
            global_min = best
    barrier = None
    if len(cands) >= 2:
        (va, xa), (vb, xb) = sorted(cands)[:2]
        lo, hi = sorted((xa, xb))
        tops = [s.v0 for s in saddles if s.kind == "max" and lo < s.x < hi]
        if tops:
            barrier = max(tops) - max(va, vb)
    return SaddleReport(saddles, global_min, barrier, origin_is_min)


# --------------------------------------------------------------------------
# large-θ asymptotic potential
# --------------------------------------------------------------------------

def r_function(z):
    """``R(z) = Σ_{n≥1} C(2n,n) zⁿ/(n 4ⁿ) = 2 ln(2/(1+√(1-z)))`` on ``[0, 1]``."""
    z = np.asarray(z, dtype=float)
    return 2.0 * (math.log(2.0) - np.log1p(np.sqrt(1.0 - z)))


def r_series(z: float, terms: int = 200) -> float:
    """Partial sum of the defining power series of ``R``."""
    total, c = 0.0, 1.0
    for n in range(1, terms + 1):
        c *= (2 * n - 1) / (2 * n)  # C(2n,n)/4^n
        total += c * z ** n / n
    return total


def asymptotic_v0_prime(x, params: MaserParams, sigma_sq: float = 0.0):
    """Phase-averaged ``∂V₀/∂x`` in the large-θ limit.

    Written as ``ln D_w - ln D_y + R(ỹ) - R(w̃)``, which avoids the
    ``ln((1-a)/a)`` singularity at ``a = 1``.  ``sigma_sq`` is the gamma
    pump-noise variance (zero for the sharp kernel).
    """
    x = np.asarray(x, dtype=float)
    a, b, nb = params.a, params.b, params.n_b
    u = x + params.delta ** 2
    e = np.exp(-2.0 * u * sigma_sq)
    dy = 0.5 * a * (1.0 + e) + nb * u
    dw = 0.5 * b * (1.0 + e) + (1.0 + nb) * u
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(dw) - np.log(dy) + r_function(a * e / dy) - r_function(b * e / dw)


def asymptotic_min(params: MaserParams, noise=None, root_tol: float = 1e-12):
    """Large-θ minimum ``x̄_∞`` and ``P_∞(+) = a + n_b/N - x̄_∞``.

    Raises
    ------
    DomainError
        For ``a <= 1/2`` or a noise family without a closed form.
    """
    if params.a <= 0.5:
        raise DomainError("asymptotic maser minimum requires a > 1/2")
    sigma_sq = 0.0
    if noise is not None and noise.kind is not NoiseKind.NONE:
        if noise.kind is not NoiseKind.PUMP_GAMMA:
            raise DomainError("asymptotic potential is available for the sharp and gamma pump kernels")
        sigma_sq = noise.sigma_sq
    f = lambda x: float(asymptotic_v0_prime(x, params, sigma_sq))
    grid = np.geomspace(1e-12, max(2.0 * params.a - 1.0, 1e-6) + 4.0, 4000)
    vals = asymptotic_v0_prime(grid, params, sigma_sq)
    roots = [
        brentq(f, grid[i], grid[i + 1], xtol=root_tol, rtol=1e-15)
        for i in range(len(grid) - 1)
        if vals[i] < 0 < vals[i + 1]
    ]
    if not roots:
        raise DomainError("no asymptotic minimum found")
    if len(roots) > 1:
        pot = [quad(f, 0.0, r, limit=500)[0] for r in roots]
        x_inf = roots[int(np.argmin(pot))]
    else:
        x_inf = roots[0]
    return x_inf, params.a + params.n_b / params.N - x_inf
