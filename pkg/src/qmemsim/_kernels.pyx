# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; semantics identical to ``_kernels_py``.

Compiled with ``-ffp-contract=off`` so the floating-point results match
the numpy fallback bit for bit.
"""

import numpy as np

cimport cython


def bin_sweep(double[::1] kappa_cos, double[::1] kappa_sin,
              double[:, ::1] vectors):
    """See ``_kernels_py.bin_sweep``; modifies ``vectors`` in place."""
    cdef Py_ssize_t n_bins = kappa_cos.shape[0]
    cdef Py_ssize_t n_cols = vectors.shape[1]
    cdef Py_ssize_t base = 2 * n_bins
    cdef Py_ssize_t xa = base, pa = base + 1, xb = base + 2, pb = base + 3
    cdef Py_ssize_t i, j, xi, pi
    cdef double kc, ks
    if vectors.shape[0] != base + 4:
        raise ValueError("vectors must have 2 * n_bins + 4 rows")
    for i in range(n_bins):
        kc = kappa_cos[i]
        ks = kappa_sin[i]
        xi = 2 * i
        pi = xi + 1
        for j in range(n_cols):
            vectors[xi, j] = vectors[xi, j] + (kc * vectors[pa, j] - ks * vectors[xb, j])
        for j in range(n_cols):
            vectors[xa, j] = vectors[xa, j] + kc * vectors[pi, j]
            vectors[pb, j] = vectors[pb, j] + ks * vectors[pi, j]
    return np.asarray(vectors)


def two_stage_outcomes(double[::1] z1, double[::1] z2,
                       double mean1, double sd1,
                       double offset2, double slope2, double sd2,
                       double[::1] out1, double[::1] out2):
    """See ``_kernels_py.two_stage_outcomes``."""
    cdef Py_ssize_t n = z1.shape[0]
    cdef Py_ssize_t i
    if z2.shape[0] != n or out1.shape[0] != n or out2.shape[0] != n:
        raise ValueError("mismatched array lengths")
    for i in range(n):
        out1[i] = (z1[i] * sd1) + mean1
        out2[i] = ((out1[i] * slope2) + offset2) + (sd2 * z2[i])
    return np.asarray(out1), np.asarray(out2)
