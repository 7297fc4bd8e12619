"""Pure-NumPy histogram kernels for boosted-tree training.

Drop-in twin of the compiled extension. Accumulation order is row-major
(rows outer, columns inner), exactly the loop order of the compiled kernels,
so both backends produce bitwise-identical histograms and split choices.
"""

import numpy as np

BACKEND = "python"


def hist_accumulate(codes, grad, hess, rows, cols, n_bins):
    """Per-(column, bin) sums of gradient, hessian, and row count.

    codes: (n, F) int32 bin codes, C-contiguous
    rows:  (m,) int64 row subset (ascending)
    cols:  (K,) int64 column subset (ascending)
    Returns (gh, hh, cnt) of shape (K, n_bins).
    """
    k = cols.size
    sub = codes[np.ix_(rows, cols)].astype(np.int64)
    flat = (sub + np.arange(k, dtype=np.int64)[None, :] * n_bins).ravel()
    size = k * n_bins
    gh = np.bincount(flat, weights=np.repeat(grad[rows], k), minlength=size)
    hh = np.bincount(flat, weights=np.repeat(hess[rows], k), minlength=size)
    cnt = np.bincount(flat, minlength=size)
    return gh.reshape(k, n_bins), hh.reshape(k, n_bins), cnt.reshape(k, n_bins)


def best_split(gh, hh, cnt, g_tot, h_tot, n_tot, lam, gamma, mcw):
    """Best (column position, bin, gain) by the regularized gain formula.

    Scans candidate bins left to right per column; ties keep the lowest
    column position, then the lowest bin. Children must hold at least one
    row and min_child_weight hessian mass. Returns (-1, -1, -inf) when no
    candidate is valid.
    """
    n_bins = gh.shape[1]
    gl = np.cumsum(gh, axis=1)[:, :-1]
    hl = np.cumsum(hh, axis=1)[:, :-1]
    cl = np.cumsum(cnt, axis=1)[:, :-1]
    gr = g_tot - gl
    hr = h_tot - hl
    cr = n_tot - cl
    dl = hl + lam
    dr = hr + lam
    valid = (cl >= 1) & (cr >= 1) & (hl >= mcw) & (hr >= mcw) & (dl > 0) & (dr > 0)
    parent = g_tot * g_tot / (h_tot + lam) if h_tot + lam > 0 else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent) - gamma
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain))
    best = float(gain.ravel()[flat])
    if not np.isfinite(best):
        return -1, -1, float("-inf")
    k, b = divmod(flat, n_bins - 1)
    return int(k), int(b), best
