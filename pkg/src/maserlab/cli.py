"""Command-line front end: θ-sweeps, phase lines, saddle reports and the
figure presets, all emitted as CSV.

Exit codes: 0 on success, 2 on configuration errors, 3 when some sweep
rows failed (their ``error`` column says why).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._io import write_csv
from .errors import DomainError, MaserError
from .model import (
    MaserParams,
    NoiseKind,
    NoiseSpec,
    NumericControls,
    ValidatedConfig,
    config_to_dict,
    load_config,
    validate,
    with_theta,
)
from .observables import joint_probabilities, p_plus, p_plus_resummed
from .phase_diagram import critical_line_detuning, critical_line_pump
from .potential import asymptotic_min, find_saddles
from .pump_kernel import Mode, PumpKernel
from .spectrum import build_generator, correlation_length
from .steady_state import distribution_for

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3

OUTPUTS = ("p_plus", "p_joint_pp", "x_bar", "corr", "v0", "saddles", "critical_line", "resummed")
_COLUMNS = {
    "p_plus": ("p_plus",),
    "p_joint_pp": ("p_joint_pp",),
    "x_bar": ("x_bar",),
    "corr": ("lambda", "log_gamma_xi", "barrier_estimate"),
    "v0": ("v0_min",),
    "saddles": ("n_saddles", "x_min", "barrier"),
    "critical_line": ("a_crit",),
    "resummed": ("p_plus_resummed",),
}
_ASYMPTOTIC_THETA = 50.0


@dataclass(frozen=True)
class SweepRequest:
    """One θ-sweep: configuration, grid, requested outputs and target."""

    config: ValidatedConfig
    theta_min: float
    theta_max: float
    steps: int
    outputs: tuple[str, ...] = ("p_plus", "p_joint_pp")
    out_path: str | None = None
    measure: str = "sharp"
    resum_mode: str = "exact"

    def __post_init__(self):
        if not self.theta_min <= self.theta_max:
            raise DomainError("theta_min must not exceed theta_max")
        if self.steps < 1:
            raise DomainError("steps must be >= 1")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise DomainError(f"unknown outputs {bad}; choose from {', '.join(OUTPUTS)}")
        if self.measure not in ("sharp", "averaged"):
            raise DomainError("measure must be 'sharp' or 'averaged'")

    @property
    def thetas(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.theta_min])
        return np.linspace(self.theta_min, self.theta_max, self.steps)

    @property
    def header(self) -> list[str]:
        cols = ["theta"]
        for o in self.outputs:
            cols.extend(_COLUMNS[o])
        return cols + ["error"]


# --------------------------------------------------------------------------
# per-point evaluation
# --------------------------------------------------------------------------

def _critical_value(cfg: ValidatedConfig) -> float:
    p, z = cfg.params, cfg.noise
    if z.kind is NoiseKind.DETUNING_GAUSSIAN:
        return critical_line_detuning(p.theta, p.delta, z.sigma_sq, quad_tol=cfg.numerics.quad_tol)
    return critical_line_pump(p.theta, z.sigma_sq, p.delta)


def evaluate_point(cfg: ValidatedConfig, outputs, measure: str = "sharp", resum_mode: str = "exact") -> dict:
    """Compute the requested columns at one configuration."""
    params = cfg.params
    kernel = PumpKernel(params, cfg.noise, Mode.AVERAGED, cfg.numerics.quad_tol)
    row: dict = {}
    dist = None
    if {"p_plus", "p_joint_pp", "x_bar", "resummed"} & set(outputs):
        dist = distribution_for(cfg)
    meas = kernel.sharp() if measure == "sharp" else kernel
    report = None
    if {"saddles", "v0", "corr"} & set(outputs):
        report = find_saddles(params, kernel, cfg.numerics)
    for o in outputs:
        if o == "p_plus":
            row["p_plus"] = p_plus(dist, meas)
        elif o == "p_joint_pp":
            row["p_joint_pp"] = joint_probabilities(dist, meas)[("+", "+")]
        elif o == "x_bar":
            row["x_bar"] = dist.x_bar
        elif o == "corr":
            gen = build_generator(params, kernel, cfg.numerics.n_max)
            res = correlation_length(gen, report.barrier)
            row["lambda"] = res.lambda_
            row["log_gamma_xi"] = res.log_gamma_xi
            row["barrier_estimate"] = res.barrier_estimate
        elif o == "v0":
            if report.global_min is not None:
                row["v0_min"] = report.saddles[report.global_min].v0
            else:
                row["v0_min"] = 0.0  # origin is the global minimum
        elif o == "saddles":
            row["n_saddles"] = len(report.saddles)
            row["x_min"] = 0.0 if report.global_min is None else report.saddles[report.global_min].x
            row["barrier"] = report.barrier
        elif o == "critical_line":
            row["a_crit"] = _critical_value(cfg)
        elif o == "resummed":
            row["p_plus_resummed"] = p_plus_resummed(dist, params, mode=resum_mode).p_plus
    return row


def _safe_point(args):
    cfg, theta, outputs, measure, resum_mode = args
    try:
        return evaluate_point(with_theta(cfg, theta), outputs, measure, resum_mode), None
    except (MaserError, ArithmeticError, ValueError) as exc:
        return {}, f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")


def _threads() -> int:
    env = os.environ.get("MASERLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"MASERLAB_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def sweep_rows(req: SweepRequest):
    """Evaluate every grid point; rows come back in ascending θ."""
    jobs = [(req.config, float(t), req.outputs, req.measure, req.resum_mode) for t in req.thetas]
    n = _threads()
    if n == 1 or len(jobs) == 1:
        results = list(map(_safe_point, jobs))
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_safe_point, jobs))
    header = req.header
    rows, errors = [], 0
    for (_, theta, *_rest), (vals, err) in zip(jobs, results):
        errors += err is not None
        rows.append([theta] + [vals.get(c) for c in header[1:-1]] + [err])
    return header, rows, errors


def _asymptotic_summary(cfg: ValidatedConfig, theta_max: float) -> str | None:
    p, z = cfg.params, cfg.noise
    if theta_max < _ASYMPTOTIC_THETA or p.a <= 0.5 or z.kind is NoiseKind.DETUNING_GAUSSIAN:
        return None
    try:
        x_inf, p_inf = asymptotic_min(p, z)
    except MaserError:
        return None
    pp = (5.0 * p_inf - 1.0) / 4.0
    return f"asymptotic: x_inf={x_inf:.6g} P_inf(+)={p_inf:.6g} P_inf(+,+)~{pp:.6g}"


def run_sweep(req: SweepRequest) -> int:
    """Write the sweep CSV and a summary line on stderr; return the exit code."""
    header, rows, errors = sweep_rows(req)
    write_csv(req.out_path, header, rows)
    summary = f"rows={len(rows)} errors={errors}"
    extra = _asymptotic_summary(req.config, req.theta_max)
    if extra:
        summary += " " + extra
    print(summary, file=sys.stderr)
    return EXIT_PARTIAL if errors else EXIT_OK


def run_phase(cfg: ValidatedConfig, thetas, out_path, regime: str = "general", sigmas=None) -> int:
    """Critical ``a`` along ``thetas`` for one or several noise strengths."""
    sigmas = [cfg.noise.sigma_sq] if sigmas is None else list(sigmas)
    kind = cfg.noise.kind if cfg.noise.kind is not NoiseKind.NONE else NoiseKind.PUMP_GAMMA
    rows, errors = [], 0
    for s2 in sigmas:
        for t in thetas:
            try:
                if kind is NoiseKind.DETUNING_GAUSSIAN:
                    val = critical_line_detuning(float(t), cfg.params.delta, s2, regime, cfg.numerics.quad_tol)
                else:
                    val = critical_line_pump(float(t), s2, cfg.params.delta, regime)
                err = None
            except (MaserError, ArithmeticError, ValueError) as exc:
                val, err = None, f"{type(exc).__name__}: {exc}".replace(",", ";")
                errors += 1
            rows.append([s2, float(t), val, regime, err])
    write_csv(out_path, ["sigma_sq", "theta", "a_crit", "regime", "error"], rows)
    return EXIT_PARTIAL if errors else EXIT_OK


def run_saddle(cfg: ValidatedConfig, out_path) -> int:
    """Saddle table as CSV, with notes on stderr."""
    kernel = PumpKernel(cfg.params, cfg.noise, Mode.AVERAGED, cfg.numerics.quad_tol)
    report = find_saddles(cfg.params, kernel, cfg.numerics)
    rows = [
        [s.x, s.kind, s.v0, s.v0pp, None if math.isnan(s.sigma_x) else s.sigma_x, None if math.isnan(s.T) else s.T]
        for s in report.saddles
    ]
    write_csv(out_path, ["x", "kind", "v0", "v0pp", "sigma_x", "T"], rows)
    if report.is_thermal:
        print("thermal phase: no nonzero saddle", file=sys.stderr)
    else:
        where = "origin" if report.global_min is None else f"x={report.saddles[report.global_min].x:.6g}"
        print(f"global minimum at {where}; barrier={report.barrier}", file=sys.stderr)
    extra = _asymptotic_summary(cfg, cfg.params.theta)
    if extra:
        print(extra, file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# figure presets
# --------------------------------------------------------------------------

_BASE = MaserParams(a=1.0, n_b=0.15, N=35.0, theta=1.0)


@dataclass(frozen=True)
class Preset:
    name: str
    params: MaserParams
    noise: NoiseSpec
    theta_range: tuple[float, float, int]
    outputs: tuple[str, ...] = ("p_plus", "p_joint_pp")
    kind: str = "sweep"
    sigmas: tuple[float, ...] = field(default=())
    resum_mode: str = "exact"


PRESETS = {
    "fig1": Preset("fig1", _BASE, NoiseSpec(), (0.0, 60.0, 601)),
    "fig2": Preset("fig2", _BASE, NoiseSpec(NoiseKind.PUMP_GAMMA, 1.0), (0.0, 10.0, 201), kind="phase", sigmas=(0.1, 1.0, 10.0)),
    "fig3": Preset("fig3", _BASE, NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0), (0.1, 60.0, 600)),
    "fig4": Preset("fig4", _BASE, NoiseSpec(NoiseKind.PUMP_GAMMA, 25.0), (0.5, 390.0, 780), ("p_plus", "resummed"), resum_mode="peaked"),
    "fig5": Preset("fig5", replace(_BASE, N=800.0), NoiseSpec(NoiseKind.DETUNING_GAUSSIAN, 25.0), (0.0, 600.0, 301)),
    "fig6": Preset("fig6", _BASE, NoiseSpec(NoiseKind.DETUNING_GAUSSIAN, 0.1), (0.0, 60.0, 601)),
    "fig7": Preset("fig7", replace(_BASE, N=100.0), NoiseSpec(), (0.05, 20.0, 400), ("corr",), kind="corr", sigmas=(0.0, 0.1, 0.5, 1.0, 2.5, 5.0)),
}


def _sidecar(path, payload: dict) -> None:
    if path is None or str(path) == "-":
        return
    Path(str(path) + ".json").write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def run_figure(name: str, out_path, numerics: NumericControls, steps: int | None = None) -> int:
    pre = PRESETS[name]
    lo, hi, n = pre.theta_range
    n = steps or n
    base = validate(replace(pre.params, theta=max(lo, 1e-3)), pre.noise, numerics)
    meta = {"preset": name, "version": __version__, "theta_range": [lo, hi, n], "outputs": list(pre.outputs)}
    if pre.kind == "phase":
        meta["config"] = config_to_dict(base)
        meta["sigma_sq"] = list(pre.sigmas)
        _sidecar(out_path, meta)
        return run_phase(base, np.linspace(lo, hi, n), out_path, sigmas=pre.sigmas)
    if pre.kind == "corr":
        meta["config"] = config_to_dict(base)
        meta["sigma_sq"] = list(pre.sigmas)
        _sidecar(out_path, meta)
        header, rows, errors = None, [], 0
        for s2 in pre.sigmas:
            kind = NoiseKind.PUMP_GAMMA if s2 > 0 else NoiseKind.NONE
            cfg = validate(base.params, NoiseSpec(kind, s2), numerics)
            req = SweepRequest(cfg, lo, hi, n, pre.outputs)
            h, r, e = sweep_rows(req)
            header = ["sigma_sq"] + h
            rows.extend([s2] + row for row in r)
            errors += e
        write_csv(out_path, header, rows)
        return EXIT_PARTIAL if errors else EXIT_OK
    meta["config"] = config_to_dict(base)
    _sidecar(out_path, meta)
    req = SweepRequest(base, lo, hi, n, pre.outputs, out_path, resum_mode=pre.resum_mode)
    return run_sweep(req)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def parse_noise(text: str) -> NoiseSpec:
    """``none``, ``pump_gamma:<σ²>`` or ``detuning_gaussian:<σ²>``."""
    if text == "none":
        return NoiseSpec()
    kind, sep, value = text.partition(":")
    if not sep:
        raise DomainError(f"noise must look like kind:sigma_sq, got {text!r}")
    try:
        return NoiseSpec(NoiseKind(kind), float(value))
    except ValueError as exc:
        raise DomainError(f"bad noise spec {text!r}: {exc}") from None


def parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"theta range must be min:max:steps, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise DomainError(f"theta range must be min:max:steps, got {text!r}") from None


def parse_nmax(text: str | None) -> int | None:
    if text is None or text == "auto":
        return None
    try:
        return int(text)
    except ValueError:
        raise DomainError(f"--nmax must be an integer or 'auto', got {text!r}") from None


def _config_from_args(args) -> ValidatedConfig:
    base = load_config(args.config) if args.config else validate(_BASE, NoiseSpec())
    p = base.params
    overrides = {k: getattr(args, k) for k in ("a", "n_b", "N", "theta", "delta") if getattr(args, k) is not None}
    params = replace(p, **{k: float(v) for k, v in overrides.items()})
    noise = parse_noise(args.noise) if args.noise else base.noise
    numerics = base.numerics
    if args.nmax is not None:
        numerics = replace(numerics, n_max=parse_nmax(args.nmax))
    if noise.kind is NoiseKind.PUMP_GAMMA and params.theta == 0.0 and getattr(args, "theta_range", None):
        params = replace(params, theta=1.0)  # placeholder; the sweep sets θ per row
    return validate(params, noise, numerics)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--a", type=float, help="probability that an atom enters excited")
    p.add_argument("--nb", dest="n_b", type=float, help="thermal photon number")
    p.add_argument("--N", type=float, help="atoms per cavity lifetime")
    p.add_argument("--theta", type=float, help="pump parameter")
    p.add_argument("--delta", type=float, help="scaled detuning")
    p.add_argument("--noise", help="none | pump_gamma:<sigma_sq> | detuning_gaussian:<sigma_sq>")
    p.add_argument("--nmax", help="truncation (integer or 'auto')")
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maserlab", description="Noisy micromaser steady-state calculator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="observables along a theta grid")
    _add_common(sw)
    sw.add_argument("--theta-range", required=True, help="min:max:steps")
    sw.add_argument("--outputs", default="p_plus,p_joint_pp", help=f"comma list from {','.join(OUTPUTS)}")
    sw.add_argument("--measure", choices=("sharp", "averaged"), default="sharp",
                    help="flip probability used for the detected atoms")
    sw.add_argument("--resum", choices=("exact", "peaked"), default="exact")

    ph = sub.add_parser("phase", help="thermal-maser critical line a(theta)")
    _add_common(ph)
    ph.add_argument("--theta-range", required=True, help="min:max:steps")
    ph.add_argument("--regime", choices=("general", "delta0", "peaked", "broad"), default="general")

    sd = sub.add_parser("saddle", help="saddle points of the effective potential")
    _add_common(sd)

    co = sub.add_parser("corr", help="spectral gap and correlation length along a theta grid")
    _add_common(co)
    co.add_argument("--theta-range", required=True, help="min:max:steps")

    fg = sub.add_parser("figure", help="reproduce a figure data set")
    fg.add_argument("name", choices=sorted(PRESETS))
    fg.add_argument("--out", help="output CSV path (default <name>.csv)")
    fg.add_argument("--steps", type=int, help="override the number of theta points")
    fg.add_argument("--nmax", help="truncation (integer or 'auto')")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figure":
            numerics = NumericControls(n_max=parse_nmax(args.nmax))
            return run_figure(args.name, args.out or f"{args.name}.csv", numerics, args.steps)
        cfg = _config_from_args(args)
        if args.command == "saddle":
            return run_saddle(cfg, args.out)
        lo, hi, steps = parse_range(args.theta_range)
        if args.command == "phase":
            req = SweepRequest(cfg, lo, hi, steps, ())
            return run_phase(cfg, req.thetas, args.out, args.regime)
        if args.command == "corr":
            return run_sweep(SweepRequest(cfg, lo, hi, steps, ("corr",), args.out))
        outputs = tuple(o.strip() for o in args.outputs.split(",") if o.strip())
        return run_sweep(SweepRequest(cfg, lo, hi, steps, outputs, args.out, args.measure, args.resum))
    except MaserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
