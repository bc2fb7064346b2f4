"""Atom-level observables: excitation and joint probabilities, their
Poisson-resummed forms, and revival analytics.

A measured atom leaves the cavity in state ``+`` or ``-``.  The maps
``M(+)`` and ``M(-)`` act on photon distributions; between two atoms
the cavity relaxes through ``(1 + L_C/N)^{-1}``, which is never formed
explicitly but applied by a tridiagonal solve.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.interpolate import make_interp_spline
from scipy.special import zeta

from .errors import SolveError
from .kernels import tridiag_solve
from .model import MaserParams
from .pump_kernel import PumpKernel
from .steady_state import PhotonDistribution

__all__ = [
    "AtomMatrices",
    "RevivalStructure",
    "ResummedResult",
    "p_plus",
    "p_minus",
    "p_joint",
    "joint_probabilities",
    "asymptotic_joint",
    "p_plus_resummed",
    "revival_structure",
    "revival_bound_pump_regime",
    "revival_bound_detuning_regime",
]


@dataclass(frozen=True, eq=False)
class AtomMatrices:
    """Banded representation of ``M(+)``, ``M(-)`` and ``1 + L_C/N``.

    ``q`` holds the measurement kernel at ``n = 0 … n_max`` and ``q_next``
    at ``n+1``, with ``q_next[n_max] = 0`` (reflecting truncation).
    """

    q: np.ndarray
    q_next: np.ndarray
    a: float
    n_b: float
    N: float

    @classmethod
    def build(cls, params: MaserParams, kernel: PumpKernel, n_max: int) -> "AtomMatrices":
        n = np.arange(n_max + 2, dtype=float)
        qq = np.clip(np.asarray(kernel(n / params.N), dtype=float), 0.0, 1.0)
        q_next = qq[1:].copy()
        q_next[-1] = 0.0
        return cls(qq[:-1], q_next, params.a, params.n_b, params.N)

    @property
    def b(self) -> float:
        return 1.0 - self.a

    @property
    def n_max(self) -> int:
        return len(self.q) - 1

    def m_plus(self, p: np.ndarray) -> np.ndarray:
        out = self.a * (1.0 - self.q_next) * p
        out[:-1] += self.b * self.q_next[:-1] * p[1:]
        return out

    def m_minus(self, p: np.ndarray) -> np.ndarray:
        out = self.b * (1.0 - self.q) * p
        out[1:] += self.a * self.q_next[:-1] * p[:-1]
        return out

    def m(self, sign: str, p: np.ndarray) -> np.ndarray:
        if sign == "+":
            return self.m_plus(p)
        if sign == "-":
            return self.m_minus(p)
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")

    def lc_bands(self):
        """Sub, main and super diagonals of the truncated ``L_C``."""
        n = np.arange(self.n_max + 1, dtype=float)
        diag = (self.n_b + 1.0) * n + self.n_b * (n + 1.0)
        diag[-1] = (self.n_b + 1.0) * n[-1]
        upper = -(self.n_b + 1.0) * n[1:]
        lower = -self.n_b * n[1:]
        return lower, diag, upper

    def relax(self, v: np.ndarray) -> np.ndarray:
        """Apply ``(1 + L_C/N)^{-1}`` by a tridiagonal solve."""
        lower, diag, upper = self.lc_bands()
        lower, upper = lower / self.N, upper / self.N
        diag = 1.0 + diag / self.N
        try:
            y = tridiag_solve(lower, diag, upper, np.ascontiguousarray(v, dtype=float))
        except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
            raise SolveError(f"relaxation system is singular: {exc}") from None
        resid = diag * y
        resid[:-1] += upper * y[1:]
        resid[1:] += lower * y[:-1]
        scale = max(np.abs(v).sum(), 1e-300)
        if np.abs(resid - v).sum() > 1e-12 * scale:
            raise SolveError("relaxation solve residual above 1e-12")
        return y


def _matrices(dist: PhotonDistribution, kernel: PumpKernel) -> AtomMatrices:
    return AtomMatrices.build(kernel.params, kernel, dist.n_max)


def p_plus(dist: PhotonDistribution, kernel: PumpKernel) -> float:
    """Probability that the next atom leaves excited.

    ``kernel`` selects the measurement: a sharp kernel models a
    velocity-selected measurement, an averaged one gives ``⟨P(+)⟩``.
    """
    return float(_matrices(dist, kernel).m_plus(dist.probs).sum())


def p_minus(dist: PhotonDistribution, kernel: PumpKernel) -> float:
    return float(_matrices(dist, kernel).m_minus(dist.probs).sum())


def joint_probabilities(dist: PhotonDistribution, kernel: PumpKernel) -> dict[tuple[str, str], float]:
    """All four joint probabilities of two consecutive atoms.

    Keys are ``(s1, s2)`` with ``s1`` the first atom.
    """
    mats = _matrices(dist, kernel)
    out = {}
    for s1 in "+-":
        y = mats.relax(mats.m(s1, dist.probs))
        for s2 in "+-":
            out[(s1, s2)] = float(mats.m(s2, y).sum())
    return out


def p_joint(dist: PhotonDistribution, kernel: PumpKernel, s1: str, s2: str) -> float:
    mats = _matrices(dist, kernel)
    return float(mats.m(s2, mats.relax(mats.m(s1, dist.probs))).sum())


def asymptotic_joint(p_inf_plus: float) -> float:
    """Large-θ joint probability ``(5P - 1)/4`` expected for random phases."""
    if not 0.0 <= p_inf_plus <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    return (5.0 * p_inf_plus - 1.0) / 4.0


# --------------------------------------------------------------------------
# revivals
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RevivalStructure:
    """Revival positions ``θ_ν`` and widths ``Δθ_ν`` for ``ν = 1, 2, …``."""

    thetas: tuple[float, ...]
    widths: tuple[float, ...]
    nu_max: int
    x_bar: float
    sigma_x: float
    delta: float
    N: float


def revival_structure(x_bar: float, sigma_x: float, delta: float, N: float, count: int | None = None):
    """Revival centres, widths and the number that stay separated.

    Revival ``ν`` sits at ``2πνN√(x̄+Δ²)`` with width ``πνNσ_x/√(x̄+Δ²)``;
    consecutive revivals separate while ``ν < (x̄+Δ²)/σ_x - 1/2``.
    """
    u = x_bar + delta * delta
    if u <= 0 or sigma_x <= 0:
        raise ValueError("need x_bar + delta^2 > 0 and sigma_x > 0")
    nu_max = max(0, math.floor(u / sigma_x - 0.5))
    count = max(nu_max, 1) if count is None else count
    nus = range(1, count + 1)
    thetas = tuple(2 * math.pi * nu * N * math.sqrt(u) for nu in nus)
    widths = tuple(math.pi * nu * N * sigma_x / math.sqrt(u) for nu in nus)
    return RevivalStructure(thetas, widths, nu_max, x_bar, sigma_x, delta, N)


def revival_bound_pump_regime(N: float, a: float, n_b: float) -> int:
    """Closed-form revival count for broad gamma pump noise.

    Evaluates ``√(2N)(2a-1)/√(a+n_b(2a-1)) - 1/2``, the bound obtained by
    inserting the saddle ``x̄ = a - 1/2`` and the Gaussian width into the
    separation criterion as stated for this regime.
    """
    return max(0, math.floor(math.sqrt(2 * N) * (2 * a - 1) / math.sqrt(a + n_b * (2 * a - 1)) - 0.5))


def revival_bound_detuning_regime(N: float, a: float, n_b: float, sigma_sq: float) -> int:
    """Closed-form revival count for broad Gaussian detuning noise."""
    val = math.sqrt(N / sigma_sq * (2 * a - 1) ** 3 * math.pi / (16 * (a + n_b * (2 * a - 1)))) - 0.5
    return max(0, math.floor(val))


# --------------------------------------------------------------------------
# Poisson resummation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResummedResult:
    """Resummed excitation probability.

    Attributes
    ----------
    p_plus : float
    w : dict
        Revival amplitudes ``w_ν`` keyed by ``ν`` (for ``a = 1`` these
        are the terms of the sum multiplying 1/2).
    warning : str or None
        Set when the peaked approximation is used outside ``x̄ > 5σ_x``.
    """

    p_plus: float
    w: dict
    warning: str | None = None


def _poisson_oscillating(spl, shift: float, length: int, N: float, theta: float, delta: float, n_nu=None):
    """``Σ_{n=0}^{length} P(n+shift) g(n) e^{-iφ(n)}`` by Poisson summation.

    ``g(t) = (t+1)/(t+1+NΔ²)`` and ``φ(t) = 2θ√((t+1)/N + Δ²)``.
    Returns the complex sum and the per-ν Fourier integrals.
    """
    d2 = delta * delta
    kappa = theta / (N * math.sqrt(1.0 / N + d2))  # largest phase rate
    if n_nu is None:
        n_nu = int(math.ceil(2.0 * kappa / (2 * math.pi))) + 40

    def H(t):
        t = np.asarray(t, dtype=float)
        g = (t + 1.0) / (t + 1.0 + N * d2)
        ph = 2.0 * theta * np.sqrt((t + 1.0) / N + d2)
        return spl(t + shift) * g * np.exp(-1j * ph)

    m = int(math.ceil(0.5 * (kappa + 2 * math.pi * n_nu))) + 16
    tg, wg = np.polynomial.legendre.leggauss(m)
    tau = 0.5 * (tg + 1.0)
    t = np.arange(length)[:, None] + tau
    # e^{2πiνt} only depends on the fractional part, so fold unit cells
    folded = (H(t) * (0.5 * wg)).sum(axis=0)
    nus = np.arange(-n_nu, n_nu + 1)
    integrals = np.exp(2j * np.pi * np.outer(nus, tau)) @ folded
    h0, hl = H(0.0), H(float(length))
    total = 0.5 * (h0 + hl) + integrals.sum()

    # Euler-Maclaurin tail for |ν| > n_nu from endpoint derivatives
    deg = int(1.5 * kappa * 0.25) + 40
    xs = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    tt = 0.25 * (xs + 1.0)
    coef = C.chebfit(xs, H(tt), deg)
    d1 = C.chebval(-1.0, C.chebder(coef, 1)) * 4.0
    d3 = C.chebval(-1.0, C.chebder(coef, 3)) * 4.0 ** 3
    # values at the far end are negligible: distribution tail < tail_tol
    jump1, jump3 = -d1, -d3
    total += jump1 * zeta(2, n_nu + 1) / (2 * math.pi ** 2) - jump3 * zeta(4, n_nu + 1) / (8 * math.pi ** 4)
    return total, dict(zip(nus.tolist(), integrals))


def _p_plus_exact(dist: PhotonDistribution, params: MaserParams, n_nu=None) -> ResummedResult:
    N, d2 = params.N, params.delta ** 2
    p = dist.probs
    K = dist.n_max
    n = np.arange(K + 1, dtype=float)
    spl = make_interp_spline(n, p, k=5)
    g = (n + 1.0) / (n + 1.0 + N * d2)
    c1, w1 = _poisson_oscillating(spl, 0.0, K, N, params.theta, params.delta, n_nu)
    # S1 = Σ p_n q_{n+1}
    s1 = 0.5 * np.dot(p, g) - 0.5 * c1.real
    if params.a == 1.0:
        value = 1.0 - s1
        return ResummedResult(float(value), {k: float(v.real) for k, v in w1.items()})
    c2, _ = _poisson_oscillating(spl, 1.0, K - 1, N, params.theta, params.delta, n_nu)
    # S2 = Σ p_{n+1} q_{n+1}
    s2 = 0.5 * np.dot(p[1:], g[:-1]) - 0.5 * c2.real
    value = params.a - params.a * s1 + params.b * s2
    return ResummedResult(float(value), {k: float(v.real) for k, v in w1.items()})


def _p_plus_peaked(dist: PhotonDistribution, params: MaserParams, nu_max=None) -> ResummedResult:
    N, theta, d2 = params.N, params.theta, params.delta ** 2
    xb, sx = dist.x_bar, dist.sigma_x
    warning = None
    if not xb > 5.0 * sx:
        warning = f"distribution not peaked: x_bar={xb:.4g}, sigma_x={sx:.4g}"
    u = xb + d2
    frac = xb / u
    # ν = 0: Gaussian average of the exact integrand, which sees x + 1/N
    u0 = u + 1.0 / N
    w = {0: math.exp(-(theta * sx) ** 2 / (2.0 * u0)) * (xb + 1.0 / N) / u0 * math.cos(2.0 * theta * math.sqrt(u0))}
    if nu_max is None:
        lowest = max(xb - 12.0 * sx, 0.0) + d2
        nu_max = int(theta / (2 * math.pi * N * math.sqrt(lowest))) + 1 if lowest > 0 else 10_000
        nu_max = min(nu_max, 10_000)
    for nu in range(1, nu_max + 1):
        v0 = theta / (2 * math.pi * nu * N)
        x_nu = v0 * v0 - d2
        if x_nu < 0:
            w[nu] = 0.0
            continue
        dens = math.exp(-((x_nu - xb) ** 2) / (2 * sx * sx)) / (N * sx * math.sqrt(2 * math.pi))
        amp = dens * frac * theta / (math.pi * math.sqrt(2 * nu ** 3 * N))
        w[nu] = amp * math.cos(2 * math.pi * nu * N * (v0 * v0 + d2) - math.pi / 4)
    value = 1.0 - 0.5 * frac + 0.5 * sum(w.values())
    if params.a != 1.0:
        value = 1.0 - params.a + (2.0 * params.a - 1.0) * value
    return ResummedResult(float(value), w, warning)


def p_plus_resummed(
    dist: PhotonDistribution, params: MaserParams, nu_max: int | None = None, mode: str = "exact"
) -> ResummedResult:
    """Excitation probability of a sharp measurement, written as a sum
    over revival terms.

    Parameters
    ----------
    dist : PhotonDistribution
        Stationary distribution (noise-averaged if noise is present).
    params : MaserParams
        Mean parameters entering the measured flip probability.
    nu_max : int, optional
        Number of revival terms; chosen automatically when omitted.
    mode : {'exact', 'peaked'}
        ``'exact'`` resums the interpolated distribution without
        approximation; ``'peaked'`` replaces it by a Gaussian with the
        distribution's mean and width and evaluates each revival by
        stationary phase.
    """
    if mode == "exact":
        return _p_plus_exact(dist, params, nu_max)
    if mode == "peaked":
        res = _p_plus_peaked(dist, params, nu_max)
        if res.warning:
            warnings.warn(res.warning, RuntimeWarning, stacklevel=2)
        return res
    raise ValueError(f"mode must be 'exact' or 'peaked', got {mode!r}")
