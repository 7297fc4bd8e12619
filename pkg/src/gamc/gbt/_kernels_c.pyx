# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled histogram kernels for boosted-tree training.

Same contract and accumulation order as the pure-Python twin; outputs are
bitwise identical between the two backends.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def hist_accumulate(
    cnp.int32_t[:, ::1] codes,
    cnp.float64_t[::1] grad,
    cnp.float64_t[::1] hess,
    cnp.int64_t[::1] rows,
    cnp.int64_t[::1] cols,
    int n_bins,
):
    """Per-(column, bin) sums of gradient, hessian, and row count."""
    cdef Py_ssize_t m = rows.shape[0]
    cdef Py_ssize_t k = cols.shape[0]
    gh_arr = np.zeros((k, n_bins), dtype=np.float64)
    hh_arr = np.zeros((k, n_bins), dtype=np.float64)
    cnt_arr = np.zeros((k, n_bins), dtype=np.int64)
    cdef cnp.float64_t[:, ::1] gh = gh_arr
    cdef cnp.float64_t[:, ::1] hh = hh_arr
    cdef cnp.int64_t[:, ::1] cnt = cnt_arr
    cdef Py_ssize_t i, j, r, b
    cdef double g, h
    for i in range(m):
        r = rows[i]
        g = grad[r]
        h = hess[r]
        for j in range(k):
            b = codes[r, cols[j]]
            gh[j, b] += g
            hh[j, b] += h
            cnt[j, b] += 1
    return gh_arr, hh_arr, cnt_arr


def best_split(
    cnp.float64_t[:, ::1] gh,
    cnp.float64_t[:, ::1] hh,
    cnp.int64_t[:, ::1] cnt,
    double g_tot,
    double h_tot,
    long long n_tot,
    double lam,
    double gamma,
    double mcw,
):
    """Best (column position, bin, gain); ties keep lowest column, lowest bin."""
    cdef Py_ssize_t k = gh.shape[0]
    cdef Py_ssize_t n_bins = gh.shape[1]
    cdef double parent = 0.0
    if h_tot + lam > 0:
        parent = g_tot * g_tot / (h_tot + lam)
    cdef double best = -np.inf
    cdef Py_ssize_t best_k = -1, best_b = -1
    cdef Py_ssize_t j, b
    cdef double gl, hl, gr, hr, dl, dr, gain
    cdef long long cl, cr
    for j in range(k):
        gl = 0.0
        hl = 0.0
        cl = 0
        for b in range(n_bins - 1):
            gl += gh[j, b]
            hl += hh[j, b]
            cl += cnt[j, b]
            gr = g_tot - gl
            hr = h_tot - hl
            cr = n_tot - cl
            dl = hl + lam
            dr = hr + lam
            if cl >= 1 and cr >= 1 and hl >= mcw and hr >= mcw and dl > 0 and dr > 0:
                gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent) - gamma
                if gain > best:
                    best = gain
                    best_k = j
                    best_b = b
    if best_k < 0:
        return -1, -1, float("-inf")
    return int(best_k), int(best_b), float(best)
