"""Compare the compiled and pure-Python kernels on realistic chains.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from maserlab import _kernels_py
from maserlab.model import MaserParams
from maserlab.pump_kernel import PumpKernel
from maserlab.steady_state import chain_rates

try:
    from maserlab import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _chain(N: float, theta: float, n_max: int):
    params = MaserParams(a=1.0, n_b=0.15, N=N, theta=theta)
    _, birth, death = chain_rates(params, PumpKernel(params), n_max)
    return birth, death


def _cases():
    for N, theta, n_max in ((35, 10.0, 200), (100, 6.5, 400), (1000, 10.0, 4000)):
        birth, death = _chain(N, theta, n_max)
        hi = 2.0 * float(np.max(birth + death)) + 1.0
        n = len(birth)
        rng = np.random.default_rng(0)
        lower = -rng.random(n - 1)
        upper = -rng.random(n - 1)
        diag = 3.0 + rng.random(n)
        rhs = rng.random(n)
        yield f"N={N} n_max={n_max}", {
            "second_eigenvalue": lambda m, b=birth, d=death, h=hi: m.second_eigenvalue(b, d, h),
            "count_below": lambda m, b=birth, d=death, h=hi: m.count_below(b, d, 0.5 * h),
            "tridiag_solve": lambda m, l=lower, dg=diag, u=upper, r=rhs: m.tridiag_solve(l, dg, u, r),
        }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])
    print(f"{'case':<22}{'kernel':<20}" + "".join(f"{b:>12}" for b, _ in backends) + f"{'speedup':>10}")
    for label, funcs in _cases():
        for name, fn in funcs.items():
            times = []
            for _, mod in backends:
                number = 3
                t = min(timeit.repeat(lambda: fn(mod), number=number, repeat=args.repeat)) / number
                times.append(t)
            speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
            print(f"{label:<22}{name:<20}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times) + speed)
        if _compiled:
            fn = funcs["second_eigenvalue"]
            a, b = fn(_kernels_py), fn(_compiled)
            print(f"{'':<22}{'gap agreement':<20}{abs(a - b) / b:>12.2e}")


if __name__ == "__main__":
    main()
