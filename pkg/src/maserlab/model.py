"""Physical and numerical configuration types.

All types are frozen dataclasses, so validated configurations can be
shared freely between threads and used as cache keys.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import DomainError

__all__ = [
    "MaserParams",
    "NoiseKind",
    "NoiseSpec",
    "NumericControls",
    "ValidatedConfig",
    "validate",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "dump_config",
]


@dataclass(frozen=True)
class MaserParams:
    """Physical configuration of the pumped cavity.

    Parameters
    ----------
    a : float
        Probability that an incoming atom is in the excited state.
    n_b : float
        Mean thermal photon number of the reservoir.
    N : float
        Mean number of atoms per cavity decay time.
    theta : float
        Scaled pump parameter.
    delta : float
        Scaled detuning; only its square enters.
    gamma : float
        Cavity damping rate, which sets the time unit.
    """

    a: float
    n_b: float
    N: float
    theta: float
    delta: float = 0.0
    gamma: float = 1.0

    @property
    def b(self) -> float:
        """Ground-state fraction, always derived as ``1 - a``."""
        return 1.0 - self.a


class NoiseKind(str, Enum):
    NONE = "none"
    PUMP_GAMMA = "pump_gamma"
    DETUNING_GAUSSIAN = "detuning_gaussian"


@dataclass(frozen=True)
class NoiseSpec:
    """Which parameter fluctuates and with what variance."""

    kind: NoiseKind = NoiseKind.NONE
    sigma_sq: float = 0.0

    def __post_init__(self):
        # accept plain strings for convenience
        object.__setattr__(self, "kind", NoiseKind(self.kind))


@dataclass(frozen=True)
class NumericControls:
    """Truncation and tolerance settings.

    ``n_max=None`` selects the automatic truncation rule.
    """

    n_max: int | None = None
    quad_tol: float = 1e-10
    root_tol: float = 1e-12
    tail_tol: float = 1e-12


@dataclass(frozen=True)
class ValidatedConfig:
    params: MaserParams
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    numerics: NumericControls = field(default_factory=NumericControls)


def _check_finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")


def validate(
    params: MaserParams | ValidatedConfig,
    noise: NoiseSpec | None = None,
    numerics: NumericControls | None = None,
) -> ValidatedConfig:
    """Check every configuration invariant and normalize the noise spec.

    Parameters
    ----------
    params : MaserParams or ValidatedConfig
        Physical parameters, or an already validated configuration
        (validation is idempotent).
    noise : NoiseSpec, optional
        Noise description; defaults to no noise.
    numerics : NumericControls, optional
        Numeric controls; defaults to the standard tolerances.

    Returns
    -------
    ValidatedConfig

    Raises
    ------
    DomainError
        Naming the first violated bound.
    """
    if isinstance(params, ValidatedConfig):
        noise = params.noise if noise is None else noise
        numerics = params.numerics if numerics is None else numerics
        params = params.params
    noise = NoiseSpec() if noise is None else noise
    numerics = NumericControls() if numerics is None else numerics

    for name in ("a", "n_b", "N", "theta", "delta", "gamma"):
        _check_finite(name, getattr(params, name))
    if not 0.0 <= params.a <= 1.0:
        raise DomainError(f"a must satisfy 0 <= a <= 1, got a={params.a}")
    if params.n_b < 0:
        raise DomainError(f"n_b must be >= 0, got n_b={params.n_b}")
    if params.N <= 0:
        raise DomainError(f"N must be > 0, got N={params.N}")
    if params.theta < 0:
        raise DomainError(f"theta must be >= 0, got theta={params.theta}")
    if params.gamma <= 0:
        raise DomainError(f"gamma must be > 0, got gamma={params.gamma}")

    _check_finite("sigma_sq", noise.sigma_sq)
    if noise.sigma_sq < 0:
        raise DomainError(f"sigma_sq must be >= 0, got {noise.sigma_sq}")
    if noise.sigma_sq == 0.0 or noise.kind is NoiseKind.NONE:
        if noise.kind is NoiseKind.NONE and noise.sigma_sq != 0.0:
            raise DomainError("noise kind 'none' requires sigma_sq = 0")
        noise = NoiseSpec()
    if noise.kind is NoiseKind.PUMP_GAMMA and params.theta == 0.0:
        raise DomainError("gamma pump noise requires theta > 0 (shape parameter would be -1)")

    if numerics.n_max is not None:
        if isinstance(numerics.n_max, bool) or not isinstance(numerics.n_max, int) or numerics.n_max < 1:
            raise DomainError(f"n_max must be an integer >= 1 or None, got {numerics.n_max!r}")
    for name in ("quad_tol", "root_tol", "tail_tol"):
        value = getattr(numerics, name)
        _check_finite(name, value)
        if value <= 0:
            raise DomainError(f"{name} must be > 0, got {value}")
    return ValidatedConfig(params, noise, numerics)


def config_to_dict(cfg: ValidatedConfig) -> dict[str, Any]:
    p, z, m = cfg.params, cfg.noise, cfg.numerics
    return {
        "a": p.a,
        "n_b": p.n_b,
        "N": p.N,
        "theta": p.theta,
        "delta": p.delta,
        "noise": {"kind": z.kind.value, "sigma_sq": z.sigma_sq},
        "numerics": {
            "n_max": "auto" if m.n_max is None else m.n_max,
            "quad_tol": m.quad_tol,
            "root_tol": m.root_tol,
            "tail_tol": m.tail_tol,
        },
    }


def config_from_dict(data: dict[str, Any]) -> ValidatedConfig:
    """Build a validated configuration from the JSON layout.

    Missing ``noise`` or ``numerics`` blocks fall back to defaults.
    """
    try:
        params = MaserParams(
            a=float(data["a"]),
            n_b=float(data["n_b"]),
            N=float(data["N"]),
            theta=float(data["theta"]),
            delta=float(data.get("delta", 0.0)),
        )
    except KeyError as exc:
        raise DomainError(f"missing config key {exc.args[0]!r}") from None
    nz = data.get("noise", {})
    try:
        noise = NoiseSpec(NoiseKind(nz.get("kind", "none")), float(nz.get("sigma_sq", 0.0)))
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    nm = data.get("numerics", {})
    n_max = nm.get("n_max", "auto")
    numerics = NumericControls(
        n_max=None if n_max == "auto" else n_max,
        quad_tol=float(nm.get("quad_tol", 1e-10)),
        root_tol=float(nm.get("root_tol", 1e-12)),
        tail_tol=float(nm.get("tail_tol", 1e-12)),
    )
    return validate(params, noise, numerics)


def load_config(path: str | Path) -> ValidatedConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def dump_config(cfg: ValidatedConfig, path: str | Path | None = None) -> str:
    """Serialize to JSON; floats use shortest round-trip repr."""
    text = json.dumps(config_to_dict(cfg), indent=2, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def with_theta(cfg: ValidatedConfig, theta: float) -> ValidatedConfig:
    """Return ``cfg`` with a different pump parameter."""
    return validate(replace(cfg.params, theta=float(theta)), cfg.noise, cfg.numerics)
