# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: direct Riesz summation and the 7-point stencil."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def direct_convolve(const double[:, :, ::1] q, const double[:, :, ::1] table):
    """Return ``out[i] = sum_j table[i - j + m - 1] * q[j]`` over an m^3 grid."""
    cdef Py_ssize_t m = q.shape[0]
    cdef Py_ssize_t i0, i1, i2, j0, j1, j2, a0, a1
    cdef double acc, qj
    out_arr = np.zeros((m, m, m), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i0 in range(m):
            for i1 in range(m):
                for i2 in range(m):
                    acc = 0.0
                    for j0 in range(m):
                        a0 = i0 - j0 + m - 1
                        for j1 in range(m):
                            a1 = i1 - j1 + m - 1
                            for j2 in range(m):
                                qj = q[j0, j1, j2]
                                if qj != 0.0:
                                    acc = acc + table[a0, a1, i2 - j2 + m - 1] * qj
                    out[i0, i1, i2] = acc
    return out_arr


def neg_laplacian(const double[:, :, ::1] u, double inv_h2):
    """7-point ``-Delta_h u`` with zero values outside the interior block."""
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double s
    out_arr = np.empty((n0, n1, n2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    with nogil:
        for i in range(n0):
            for j in range(n1):
                for k in range(n2):
                    s = 6.0 * u[i, j, k]
                    if i > 0:
                        s = s - u[i - 1, j, k]
                    if i < n0 - 1:
                        s = s - u[i + 1, j, k]
                    if j > 0:
                        s = s - u[i, j - 1, k]
                    if j < n1 - 1:
                        s = s - u[i, j + 1, k]
                    if k > 0:
                        s = s - u[i, j, k - 1]
                    if k < n2 - 1:
                        s = s - u[i, j, k + 1]
                    out[i, j, k] = s * inv_h2
    return out_arr


def edge_sum_sq(const double[:, :, ::1] u):
    """Sum of squared differences over all axis edges, boundary edges included.

    Kahan-compensated so the result does not depend on traversal order beyond
    rounding of the final sum.
    """
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], n2 = u.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double total = 0.0, comp = 0.0, term, y, t, c, a, b
    with nogil:
        for i in range(n0):
            for j in range(n1):
                for k in range(n2):
                    c = u[i, j, k]
                    # edges towards lower neighbours (zero outside)
                    a = c - (u[i - 1, j, k] if i > 0 else 0.0)
                    b = c - (u[i, j - 1, k] if j > 0 else 0.0)
                    term = a * a + b * b
                    a = c - (u[i, j, k - 1] if k > 0 else 0.0)
                    term = term + a * a
                    # closing edges onto the far boundary
                    if i == n0 - 1:
                        term = term + c * c
                    if j == n1 - 1:
                        term = term + c * c
                    if k == n2 - 1:
                        term = term + c * c
                    y = term - comp
                    t = total + y
                    comp = (t - total) - y
                    total = t
    return total
