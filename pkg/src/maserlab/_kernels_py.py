"""Pure-Python fallback for the compiled kernels.

The Sturm sweep is vectorized over many trial shifts at once
(multisection), so the Python loop runs over the chain only.
"""
import numpy as np
from scipy.linalg import solve_banded

_PROBES = 32


def _counts(beta, death, sigmas):
    k = beta.shape[0] - 1
    s = -sigmas.copy()
    c = np.zeros(sigmas.shape, dtype=np.int64)
    for j in range(k):
        dp = death[k - j] + s
        dp[dp == 0.0] = -1e-300
        c += dp < 0.0
        s = beta[k - j - 1] * s / dp - sigmas
    c += s < 0.0
    return c


def count_below(beta, death, sigma):
    return int(_counts(np.asarray(beta, float), np.asarray(death, float), np.array([float(sigma)]))[0])


def second_eigenvalue(beta, death, hi, rtol=1e-15):
    beta = np.asarray(beta, float)
    death = np.asarray(death, float)
    lo = 1e-300
    if _counts(beta, death, np.array([lo]))[0] >= 2:
        return 0.0
    log_lo, log_hi = np.log(lo), np.log(hi)
    while log_hi - log_lo > rtol:
        grid = np.linspace(log_lo, log_hi, _PROBES + 2)[1:-1]
        above = _counts(beta, death, np.exp(grid)) >= 2
        i = int(np.argmax(above)) if above.any() else _PROBES
        new_lo = grid[i - 1] if i > 0 else log_lo
        new_hi = grid[i] if i < _PROBES else log_hi
        if new_hi - new_lo >= log_hi - log_lo:
            break
        log_lo, log_hi = new_lo, new_hi
    return float(np.exp(0.5 * (log_lo + log_hi)))


def tridiag_solve(lower, diag, upper, rhs):
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)
