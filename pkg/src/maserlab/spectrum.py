"""Generator of the photon master equation, its spectral gap and the
correlation length.

With ``dp/dt = -γ L p`` the generator is tridiagonal: the diagonal holds
the total exit rate of each state, the sub-diagonal minus the birth rates
and the super-diagonal minus the death rates.  Detailed balance makes
``D^{-1/2} L D^{1/2}`` symmetric (``D = diag(p̄)``), so its eigenvalues
are real and a Sturm count over the shifted pivots locates the gap.  The
pivots only involve the products ``birth_n · death_{n+1}``, which keeps the
count usable even when ``p̄`` itself underflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from ._io import write_csv
from .errors import SpectrumError
from .model import MaserParams, NumericControls
from .pump_kernel import PumpKernel
from .steady_state import chain_rates, stationary_distribution

__all__ = [
    "Generator",
    "CorrelationResult",
    "build_generator",
    "spectral_gap",
    "correlation_length",
    "correlation_sweep_csv",
]

_NULL_TOL = 1e-10
_SYM_TOL = 1e-10
_DENSE_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class Generator:
    """Tridiagonal generator truncated at ``n_max``.

    Attributes
    ----------
    sub, diag, sup : ndarray
        ``L[n+1, n]``, ``L[n, n]`` and ``L[n, n+1]``.
    p_bar : ndarray
        Stationary distribution, the null vector of ``L``.
    birth, death : ndarray
        Rates of the underlying chain.
    kernel : PumpKernel
        Flip probability the generator was built from.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    p_bar: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    params: MaserParams
    kernel: PumpKernel

    @property
    def n_max(self) -> int:
        return len(self.diag) - 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``L @ v`` without forming the matrix."""
        out = self.diag * v
        out[:-1] += self.sup * v[1:]
        out[1:] += self.sub * v[:-1]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)


@dataclass(frozen=True)
class CorrelationResult:
    """Spectral gap and derived correlation length, both in units of γ.

    The atom and photon correlation lengths share this single gap.
    When the gap is below double precision ``underflowed`` is set,
    ``lambda_`` is NaN and ``barrier_estimate`` carries the scale.
    """

    lambda_: float
    xi: float
    barrier_estimate: float | None
    underflowed: bool = False

    @property
    def log_gamma_xi(self) -> float:
        return math.log(self.xi) if self.xi > 0 and math.isfinite(self.xi) else math.inf


def build_generator(params: MaserParams, kernel: PumpKernel | None = None, n_max: int | None = None) -> Generator:
    """Assemble ``L = L_C - N(M - 1)`` and verify its null vector.

    Parameters
    ----------
    n_max : int, optional
        Truncation; by default the automatic rule of the stationary
        solver is used.

    Raises
    ------
    SpectrumError
        When ``L p̄`` fails the null-vector check.
    """
    kernel = PumpKernel(params) if kernel is None else kernel
    dist = stationary_distribution(params, kernel, NumericControls(n_max=n_max))
    _, birth, death = chain_rates(params, kernel, dist.n_max)
    gen = Generator(
        sub=-birth[:-1].copy(),
        diag=birth + death,
        sup=-death[1:].copy(),
        p_bar=dist.probs,
        birth=birth,
        death=death,
        params=params,
        kernel=kernel,
    )
    scale = max(float(np.max(np.abs(gen.diag))), 1.0)
    resid = float(np.max(np.abs(gen.apply(gen.p_bar)))) / scale
    if resid > _NULL_TOL:
        raise SpectrumError(f"null-vector residual {resid:.3g} exceeds {_NULL_TOL:g}")
    return gen


def _check_symmetry(gen: Generator) -> None:
    # the transformed off-diagonals agree iff birth_n p_n = death_{n+1} p_{n+1}
    p = gen.p_bar
    keep = (p[:-1] > 1e-300) & (p[1:] > 1e-300)
    lhs = gen.birth[:-1][keep] * p[:-1][keep]
    rhs = gen.death[1:][keep] * p[1:][keep]
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    ok = scale > 0
    if np.any(np.abs(lhs - rhs)[ok] > _SYM_TOL * scale[ok]):
        raise SpectrumError("detailed-balance symmetrization check failed")


def _dense_gap(gen: Generator) -> float:
    if gen.n_max + 1 > _DENSE_LIMIT:
        raise SpectrumError(f"dense fallback refused at n_max={gen.n_max}")
    vals = scipy.linalg.eigvals(gen.dense())
    vals = np.sort(vals.real)
    # deflate the stationary eigenvalue
    return float(vals[1])


def spectral_gap(gen: Generator) -> float:
    """Smallest nonzero eigenvalue of ``L``.

    Returns 0.0 when the gap lies below the smallest positive double;
    callers should treat that as underflow, not as a degenerate chain.

    Raises
    ------
    SpectrumError
        If the symmetrization check fails or no method succeeds.
    """
    _check_symmetry(gen)
    hi = 2.0 * float(np.max(gen.birth + gen.death)) + 1.0
    try:
        lam = kernels.second_eigenvalue(
            np.ascontiguousarray(gen.birth, dtype=float), np.ascontiguousarray(gen.death, dtype=float), hi
        )
    except (ArithmeticError, ValueError) as exc:  # pragma: no cover - defensive
        lam = math.nan
        err = exc
    else:
        err = None
    if math.isnan(lam) or lam >= hi:
        try:
            return _dense_gap(gen)
        except SpectrumError as exc:
            raise SpectrumError(f"gap bisection failed ({err}) and {exc}") from exc
    return float(lam)


def correlation_length(gen: Generator, barrier: float | None = None) -> CorrelationResult:
    """Correlation length ``γξ = 1/λ`` with the barrier-law estimate.

    Parameters
    ----------
    barrier : float, optional
        Potential barrier ``ΔV₀``; located with the saddle finder when
        omitted.
    """
    if barrier is None:
        from .potential import find_saddles

        barrier = find_saddles(gen.params, gen.kernel).barrier
    estimate = None
    if barrier is not None:
        with np.errstate(over="ignore"):
            estimate = float(np.exp(gen.params.N * barrier))
    lam = spectral_gap(gen)
    if lam <= 0.0:
        return CorrelationResult(math.nan, math.inf, estimate, underflowed=True)
    return CorrelationResult(lam, 1.0 / lam, estimate)


def correlation_sweep_csv(path, thetas, results) -> None:
    """Write ``theta, lambda, log_gamma_xi, barrier_estimate`` rows."""
    rows = []
    for t, r in zip(thetas, results):
        est = "" if r.barrier_estimate is None else r.barrier_estimate
        rows.append((t, r.lambda_, r.log_gamma_xi, est))
    write_csv(path, ["theta", "lambda", "log_gamma_xi", "barrier_estimate"], rows)
