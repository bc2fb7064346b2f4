import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from maserlab import MaserParams, PumpKernel, _kernels_py, kernels
from maserlab.steady_state import chain_rates

compiled = pytest.importorskip("maserlab._kernels")


def _chain(theta, N=50, n_max=200):
    params = MaserParams(a=1, n_b=0.15, N=N, theta=theta)
    return chain_rates(params, PumpKernel(params), n_max)[1:]


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("theta", [0.0, 1.0, 6.5, 18.0])
def test_backends_agree_and_match_lapack(theta):
    birth, death = _chain(theta)
    off = -np.sqrt(birth[:-1] * death[1:])
    ref = eigh_tridiagonal(birth + death, off, eigvals_only=True)
    hi = 2 * float(np.max(birth + death)) + 1
    for mod in (compiled, _kernels_py):
        assert mod.count_below(birth, death, 0.5 * ref[1] + 0.5 * ref[2]) == 2
        gap = mod.second_eigenvalue(birth, death, hi)
        assert gap == pytest.approx(ref[1], rel=1e-8)


def test_tridiag_solve_backends():
    rng = np.random.default_rng(3)
    n = 60
    lower, upper = -rng.random(n - 1), -rng.random(n - 1)
    diag = 3 + rng.random(n)
    rhs = rng.random(n)
    dense = np.diag(diag) + np.diag(upper, 1) + np.diag(lower, -1)
    ref = np.linalg.solve(dense, rhs)
    for mod in (compiled, _kernels_py):
        np.testing.assert_allclose(mod.tridiag_solve(lower, diag, upper, rhs), ref, rtol=1e-12)
