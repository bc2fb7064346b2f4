# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Sturm counts for birth-death generators and a
tridiagonal solver."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef Py_ssize_t _count(const double[::1] beta, const double[::1] death, double sigma) noexcept nogil:
    # stationary qd transform of the reversed LDL^T factorization
    cdef Py_ssize_t k = beta.shape[0] - 1
    cdef Py_ssize_t j, c = 0
    cdef double s = -sigma, dp
    for j in range(k):
        dp = death[k - j] + s
        if dp == 0.0:
            dp = -1e-300
        if dp < 0.0:
            c += 1
        s = beta[k - j - 1] * s / dp - sigma
    if s < 0.0:
        c += 1
    return c


def count_below(double[::1] beta, double[::1] death, double sigma):
    """Number of generator eigenvalues strictly below ``sigma``."""
    return _count(beta, death, sigma)


def second_eigenvalue(double[::1] beta, double[::1] death, double hi, double rtol=1e-15):
    """Smallest nonzero eigenvalue by geometric bisection on Sturm counts.

    Returns 0.0 when the gap is below the smallest positive double.
    """
    cdef double lo = 1e-300, mid
    cdef int it
    if _count(beta, death, lo) >= 2:
        return 0.0
    with nogil:
        for it in range(4000):
            mid = sqrt(lo) * sqrt(hi)
            if _count(beta, death, mid) >= 2:
                hi = mid
            else:
                lo = mid
            if hi <= lo * (1.0 + rtol):
                break
    return sqrt(lo) * sqrt(hi)


def tridiag_solve(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] rhs):
    """Thomas algorithm; ``lower[i]`` couples rows i+1,i and ``upper[i]`` rows i,i+1."""
    cdef Py_ssize_t n = diag.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.empty(n)
    cdef double[::1] cv = c, xv = x
    cdef double m
    with nogil:
        m = diag[0]
        if m == 0.0:
            with gil:
                raise ZeroDivisionError("zero pivot")
        cv[0] = upper[0] / m if n > 1 else 0.0
        xv[0] = rhs[0] / m
        for i in range(1, n):
            m = diag[i] - lower[i - 1] * cv[i - 1]
            if m == 0.0:
                with gil:
                    raise ZeroDivisionError("zero pivot")
            if i < n - 1:
                cv[i] = upper[i] / m
            xv[i] = (rhs[i] - lower[i - 1] * xv[i - 1]) / m
        for i in range(n - 2, -1, -1):
            xv[i] -= cv[i] * xv[i + 1]
    return x
