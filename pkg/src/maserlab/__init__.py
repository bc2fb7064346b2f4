"""Steady-state observables of the noisy one-atom micromaser."""
from .errors import (
    DegenerateError,
    DomainError,
    MaserError,
    NonNormalizable,
    QuadratureError,
    SolveError,
    SpectrumError,
    TruncationError,
)
from .model import MaserParams, NoiseKind, NoiseSpec, NumericControls, ValidatedConfig, validate
from .pump_kernel import Mode, PumpKernel

__version__ = "0.1.0"
