"""Exact stationary photon distribution of the pumped cavity.

The photon number performs a birth-death walk with birth rate
``n_b (n+1) + N a q_{n+1}`` and death rate ``(1+n_b) n + N b q_n``.  Its
stationary law follows from detailed balance as a product of rate
ratios.  The chain is truncated at ``n_max`` with a reflecting boundary,
which makes the truncated vector the exact null vector of the truncated
generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import write_csv
from .errors import NonNormalizable, TruncationError
from .model import MaserParams, NumericControls, ValidatedConfig
from .pump_kernel import Mode, PumpKernel

__all__ = [
    "PhotonDistribution",
    "chain_rates",
    "stationary_distribution",
    "distribution_for",
    "order_parameter",
    "thermal_distribution",
    "sum_rule_residual",
]

_MAX_STATES = 1 << 24


@dataclass(frozen=True, eq=False)
class PhotonDistribution:
    """Truncated stationary distribution ``p_0 … p_{n_max}``.

    Attributes
    ----------
    probs : ndarray
        Normalized probabilities.
    n_max : int
        Truncation index.
    tail_mass_bound : float
        Rigorous upper bound on the probability beyond ``n_max``.
    N : float
        Atom flux, used to convert ``n`` to ``x = n/N``.
    """

    probs: np.ndarray
    n_max: int
    tail_mass_bound: float
    N: float

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_max + 1)

    @property
    def x(self) -> np.ndarray:
        return self.n / self.N

    @property
    def x_bar(self) -> float:
        return order_parameter(self)

    @property
    def sigma_x(self) -> float:
        """Standard deviation of ``x = n/N``."""
        m = self.x_bar
        return float(np.sqrt(max(np.dot(self.probs, (self.x - m) ** 2), 0.0)))

    def to_csv(self, path) -> None:
        write_csv(path, ["n", "p_n"], zip(self.n.tolist(), self.probs.tolist()))


def chain_rates(params: MaserParams, kernel: PumpKernel, n_max: int):
    """Birth and death rates of the truncated chain.

    Returns
    -------
    q : ndarray
        ``q_0 … q_{n_max}``.
    birth, death : ndarray
        ``birth[n]`` is the rate ``n → n+1`` (zero at ``n_max``),
        ``death[n]`` the rate ``n → n-1`` (zero at 0).
    """
    n = np.arange(n_max + 2, dtype=float)
    qq = np.clip(np.asarray(kernel(n / params.N), dtype=float), 0.0, 1.0)
    q, q_next = qq[:-1], qq[1:].copy()
    q_next[-1] = 0.0  # reflecting boundary
    birth = params.n_b * (n[:-1] + 1.0) + params.N * params.a * q_next
    birth[-1] = 0.0
    death = (1.0 + params.n_b) * n[:-1] + params.N * params.b * q
    return q, birth, death


def _tail_ratio(params: MaserParams, n_max: int) -> float:
    # every ratio beyond n_max is below this because q <= 1
    return params.n_b / (1.0 + params.n_b) + params.N * params.a / ((1.0 + params.n_b) * (n_max + 1))


def _build(params: MaserParams, kernel: PumpKernel, n_max: int):
    n = np.arange(1, n_max + 1, dtype=float)
    q = np.clip(np.asarray(kernel(n / params.N), dtype=float), 0.0, 1.0)
    num = params.n_b * n + params.N * params.a * q
    den = (1.0 + params.n_b) * n + params.N * params.b * q
    with np.errstate(divide="ignore"):
        log_ratio = np.log(num) - np.log(den)
    logp = np.concatenate(([0.0], np.cumsum(log_ratio)))
    p = np.exp(logp - logp.max())
    p /= p.sum()
    rho = _tail_ratio(params, n_max)
    tail = p[-1] * rho / (1.0 - rho) if rho < 1.0 else math.inf
    return p, tail


def stationary_distribution(
    params: MaserParams,
    kernel: PumpKernel | None = None,
    numerics: NumericControls | None = None,
) -> PhotonDistribution:
    """Stationary distribution from the detailed-balance product.

    Parameters
    ----------
    params : MaserParams
    kernel : PumpKernel, optional
        Flip probability seen by the field; defaults to the sharp kernel.
    numerics : NumericControls, optional
        ``n_max=None`` starts at ``max(64, 4N)`` and doubles until the
        tail bound drops below ``tail_tol``.

    Raises
    ------
    TruncationError
        If the automatic rule exceeds the state budget.
    """
    kernel = PumpKernel(params) if kernel is None else kernel
    numerics = NumericControls() if numerics is None else numerics
    if numerics.n_max is not None:
        p, tail = _build(params, kernel, numerics.n_max)
        return PhotonDistribution(p, numerics.n_max, tail, params.N)
    n_max = max(64, math.ceil(4 * params.N))
    while True:
        p, tail = _build(params, kernel, n_max)
        if tail < numerics.tail_tol:
            return PhotonDistribution(p, n_max, tail, params.N)
        if not math.isfinite(tail) and not np.all(np.isfinite(p)):
            raise TruncationError(f"non-finite distribution at n_max={n_max}")
        if 2 * n_max > _MAX_STATES:
            raise TruncationError(f"tail mass {tail:.3g} still above {numerics.tail_tol:g} at n_max={n_max}")
        n_max *= 2


def distribution_for(cfg: ValidatedConfig) -> PhotonDistribution:
    """Stationary distribution with the noise-averaged kernel of ``cfg``."""
    kernel = PumpKernel(cfg.params, cfg.noise, Mode.AVERAGED, cfg.numerics.quad_tol)
    return stationary_distribution(cfg.params, kernel, cfg.numerics)


def order_parameter(dist: PhotonDistribution) -> float:
    """Mean of ``x = n/N``."""
    return float(np.dot(dist.n, dist.probs) / dist.N)


def thermal_distribution(
    params: MaserParams, theta_eff_sq: float, numerics: NumericControls | None = None
) -> PhotonDistribution:
    """Geometric distribution valid when only small ``x`` matters.

    Raises
    ------
    NonNormalizable
        If ``θ_eff² (2a - 1) >= 1``.
    """
    numerics = NumericControls() if numerics is None else numerics
    if theta_eff_sq * (2.0 * params.a - 1.0) >= 1.0:
        raise NonNormalizable(
            f"geometric ratio >= 1: theta_eff^2 (2a-1) = {theta_eff_sq * (2 * params.a - 1):.6g}"
        )
    r = (params.n_b + params.a * theta_eff_sq) / (1.0 + params.n_b + params.b * theta_eff_sq)
    if numerics.n_max is not None:
        n_max = numerics.n_max
    elif r == 0.0:
        n_max = 1
    else:
        n_max = max(1, math.ceil(math.log(numerics.tail_tol) / math.log(r)))
        if n_max > _MAX_STATES:
            raise TruncationError(f"geometric ratio {r} needs more than {_MAX_STATES} states")
    n = np.arange(n_max + 1)
    with np.errstate(under="ignore"):
        p = (1.0 - r) * r ** n if r > 0 else (n == 0).astype(float)
    tail = r ** (n_max + 1)
    return PhotonDistribution(p / p.sum(), n_max, float(tail), params.N)


def sum_rule_residual(dist: PhotonDistribution, params: MaserParams, p_plus_avg: float) -> float:
    """``x̄ - (a + n_b/N - ⟨P(+)⟩)``; vanishes when kernels match."""
    return order_parameter(dist) - (params.a + params.n_b / params.N - p_plus_avg)
