# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner sums for the rank-criterion variance integral."""
import numpy as np
cimport numpy as cnp
from cython.parallel import prange
from libc.math cimport erfc, atan, M_PI, M_SQRT1_2, sqrt

cnp.import_array()


cdef inline double _cdf(int family, double u) noexcept nogil:
    cdef double v
    if family == 0:
        return 0.5 * erfc(-u * M_SQRT1_2)
    if family == 1:
        v = u / sqrt(3.0)
        return 0.5 + (v / (1.0 + v * v) + atan(v)) / M_PI
    return 0.5 + atan(u) / M_PI


cdef void _row(int family, double shift, double inv, bint reflect, double[::1] U,
               double[::1] a, double[::1] b, double* s0, double* s1) noexcept nogil:
    # one loop per family keeps the dispatch out of the inner loop
    cdef Py_ssize_t i, n = U.shape[0]
    cdef double c, u, v, acc0 = 0.0, acc1 = 0.0, r3 = 1.0 / sqrt(3.0)
    cdef double sign = -1.0 if reflect else 1.0
    if family == 0:
        for i in range(n):
            u = sign * (shift + U[i]) * inv
            c = 0.5 * erfc(-u * M_SQRT1_2)
            if reflect:
                c = 1.0 - c
            acc0 += a[i] * c
            acc1 += b[i] * c
    elif family == 1:
        for i in range(n):
            v = sign * (shift + U[i]) * inv * r3
            c = 0.5 + (v / (1.0 + v * v) + atan(v)) / M_PI
            if reflect:
                c = 1.0 - c
            acc0 += a[i] * c
            acc1 += b[i] * c
    else:
        for i in range(n):
            u = sign * (shift + U[i]) * inv
            c = 0.5 + atan(u) / M_PI
            if reflect:
                c = 1.0 - c
            acc0 += a[i] * c
            acc1 += b[i] * c
    s0[0] = acc0
    s1[0] = acc1


def cdf_sums(double[::1] U, double[::1] a, double[::1] b, double[::1] z,
             int family, double scale, bint reflect=False):
    """S0[j, k] = sum_i a[i] cdf(z[k] + U[i] - U[j]) and S1 likewise with b.

    `cdf` is the noise cdf at `scale`; with `reflect` it is evaluated as
    1 - cdf(-t).
    """
    cdef Py_ssize_t n = U.shape[0], nz = z.shape[0]
    cdef Py_ssize_t j, k
    cdef double s0, s1, inv = 1.0 / scale
    S0 = np.empty((n, nz), dtype=np.float64)
    S1 = np.empty((n, nz), dtype=np.float64)
    cdef double[:, ::1] o0 = S0
    cdef double[:, ::1] o1 = S1
    for j in prange(n, nogil=True, schedule="static"):
        for k in range(nz):
            _row(family, z[k] - U[j], inv, reflect, U, a, b, &s0, &s1)
            o0[j, k] = s0
            o1[j, k] = s1
    return S0, S1
