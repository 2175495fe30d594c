# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Glynn permanent (Gray-code order)."""
import numpy as np

from libc.stdlib cimport malloc, free


cdef double complex _glynn(const double complex[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef unsigned long long g, count
    cdef double complex prod, total
    cdef int sign = 1
    cdef double complex *rowsum
    cdef int *delta
    if n == 0:
        return 1.0
    rowsum = <double complex *> malloc(n * sizeof(double complex))
    delta = <int *> malloc(n * sizeof(int))
    for j in range(n):
        rowsum[j] = 0
        for i in range(n):
            rowsum[j] = rowsum[j] + a[i, j]
    for i in range(n):
        delta[i] = 1
    prod = 1
    for j in range(n):
        prod = prod * rowsum[j]
    total = prod
    count = (<unsigned long long> 1) << (n - 1)
    for g in range(1, count):
        # lowest set bit of g selects the row to flip
        k = 0
        while not ((g >> k) & 1):
            k += 1
        k += 1
        delta[k] = -delta[k]
        sign = -sign
        prod = 1
        for j in range(n):
            rowsum[j] = rowsum[j] + 2 * delta[k] * a[k, j]
            prod = prod * rowsum[j]
        total = total + sign * prod
    free(rowsum)
    free(delta)
    return total / <double> count


def permanent(a):
    """Permanent of a square complex matrix."""
    cdef double complex[:, ::1] view = np.ascontiguousarray(a, dtype=np.complex128)
    if view.shape[0] != view.shape[1]:
        raise ValueError("permanent requires a square matrix")
    if view.shape[0] > 62:
        raise ValueError("matrix too large for the Gray-code permanent")
    cdef double complex out
    with nogil:
        out = _glynn(view)
    return complex(out)
