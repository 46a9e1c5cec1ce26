# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: log partition-function table and batched path sampling."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, INFINITY

cnp.import_array()


cdef inline double _logaddexp(double x, double y) noexcept nogil:
    if x == -INFINITY:
        return y
    if y == -INFINITY:
        return x
    if x >= y:
        return x + log1p(exp(y - x))
    return y + log1p(exp(x - y))


def logz_table(Py_ssize_t a, Py_ssize_t b, double logq):
    """Fill log Z[a', b'] for 0 <= a' <= a, 0 <= b' <= b by the column recursion."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((a + 1, b + 1), dtype=np.float64)
    cdef double[:, ::1] t = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(1, a + 1):
            for j in range(1, b + 1):
                t[i, j] = _logaddexp(t[i, j - 1], j * logq + t[i - 1, j])
    return out


def sample_paths(const double[:, ::1] table, double logq, const double[:, ::1] uniforms):
    """Decode one lattice path per row of ``uniforms``.

    The path is built from its last step backwards.  With a' downs and b' ups
    still to place, the current (last free) step is a down-step with
    probability q^b' Z[a'-1, b'] / Z[a', b'].
    """
    cdef Py_ssize_t a = table.shape[0] - 1
    cdef Py_ssize_t b = table.shape[1] - 1
    cdef Py_ssize_t n_samples = uniforms.shape[0]
    if uniforms.shape[1] != a + b:
        raise ValueError("uniforms must have a + b columns")
    cdef cnp.ndarray[cnp.int8_t, ndim=2] out = np.empty((n_samples, a + b), dtype=np.int8)
    cdef signed char[:, ::1] steps = out
    cdef Py_ssize_t r, p, ar, br
    cdef double p_down
    with nogil:
        for r in range(n_samples):
            ar = a
            br = b
            for p in range(a + b - 1, -1, -1):
                if ar == 0:
                    p_down = 0.0
                elif br == 0:
                    p_down = 1.0
                else:
                    p_down = exp(br * logq + table[ar - 1, br] - table[ar, br])
                    if p_down > 1.0:
                        p_down = 1.0
                if uniforms[r, p] < p_down:
                    steps[r, p] = -1
                    ar -= 1
                else:
                    steps[r, p] = 1
                    br -= 1
    return out
