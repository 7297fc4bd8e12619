"""Benchmark the compiled histogram kernels against the pure-NumPy twin.

Measures the two hot operations of tree training (histogram accumulation and
the split scan) plus an end-to-end fit, and verifies that both backends
produce identical outputs before timing them.

Usage: python benchmarks/bench_kernels.py [--rows N] [--cols N] [--repeat N]
"""

import argparse
import time

import numpy as np

from gamc import gbt
from gamc.gbt import _kernels_py, kernels


def _load_compiled():
    try:
        from gamc.gbt import _kernels_c

        return _kernels_c
    except ImportError:
        return None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=8000)
    ap.add_argument("--cols", type=int, default=371)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    compiled = _load_compiled()
    rng = np.random.default_rng(0)
    n, f, n_bins = args.rows, args.cols, 257
    codes = rng.integers(0, 256, size=(n, f), dtype=np.int32)
    grad = rng.normal(size=n)
    hess = rng.uniform(0.1, 1.0, size=n)
    rows = np.sort(rng.permutation(n)[: int(0.8 * n)]).astype(np.int64)
    cols = np.sort(rng.permutation(f)[: int(0.8 * f)]).astype(np.int64)

    print(f"active backend: {kernels.BACKEND}")
    print(f"available: {kernels.available_backends()}")
    print(f"hist_accumulate on {rows.size} rows x {cols.size} cols, {n_bins} bins")

    ref = _kernels_py.hist_accumulate(codes, grad, hess, rows, cols, n_bins)
    py_t = _time(lambda: _kernels_py.hist_accumulate(codes, grad, hess, rows, cols, n_bins), args.repeat)
    print(f"  python   {py_t * 1e3:8.2f} ms")
    if compiled is not None:
        out = compiled.hist_accumulate(codes, grad, hess, rows, cols, n_bins)
        for a, b in zip(ref, out):
            assert np.array_equal(a, b), "backend outputs differ"
        c_t = _time(lambda: compiled.hist_accumulate(codes, grad, hess, rows, cols, n_bins), args.repeat)
        print(f"  compiled {c_t * 1e3:8.2f} ms   ({py_t / c_t:.2f}x vs python)")

    gh, hh, cnt = ref
    g_tot, h_tot = float(grad[rows].sum()), float(hess[rows].sum())
    sp_args = (gh, hh, cnt, g_tot, h_tot, rows.size, 1.0, 0.1, 1.0)
    ref_split = _kernels_py.best_split(*sp_args)
    py_t = _time(lambda: _kernels_py.best_split(*sp_args), args.repeat)
    print(f"best_split over {cols.size} cols")
    print(f"  python   {py_t * 1e3:8.2f} ms")
    if compiled is not None:
        assert compiled.best_split(*sp_args) == ref_split, "split choice differs"
        c_t = _time(lambda: compiled.best_split(*sp_args), args.repeat)
        print(f"  compiled {c_t * 1e3:8.2f} ms   ({py_t / c_t:.2f}x vs python)")

    x = rng.normal(size=(2000, 64))
    y = rng.integers(0, 4, size=2000)
    params = gbt.TrainParams(n_estimators=20, max_depth=3, subsample=0.8,
                             colsample_bytree=0.8)

    import gamc.gbt.core as core

    def fit_with(impl):
        saved = (core.kernels.hist_accumulate, core.kernels.best_split)
        core.kernels.hist_accumulate = impl.hist_accumulate
        core.kernels.best_split = impl.best_split
        try:
            t0 = time.perf_counter()
            model = gbt.fit(x, y, params)
            dt = time.perf_counter() - t0
        finally:
            core.kernels.hist_accumulate, core.kernels.best_split = saved
        return model, dt

    model_py, t_py = fit_with(_kernels_py)
    print(f"end-to-end fit (2000 x 64, 20 rounds x 4 classes)")
    print(f"  python   {t_py * 1e3:8.2f} ms")
    if compiled is not None:
        model_c, t_c = fit_with(compiled)
        same = all(
            np.array_equal(a.weight, b.weight) and np.array_equal(a.feature, b.feature)
            for ra, rb in zip(model_py.trees, model_c.trees)
            for a, b in zip(ra, rb)
        )
        print(f"  compiled {t_c * 1e3:8.2f} ms   ({t_py / t_c:.2f}x vs python)")
        print(f"  identical models: {same}")


if __name__ == "__main__":
    main()
