import subprocess
import sys

import numpy as np
import pytest

from gamc import gbt
from gamc.errors import ConfigError, DataError
from gamc.gbt import _kernels_py
from gamc.gbt.core import TrainParams, _bin_features, _feature_edges, split_gain

import oracles

try:
    from gamc.gbt import _kernels_c
    HAVE_C = True
except ImportError:
    HAVE_C = False


def toy_problem(n=200, d=6, c=3, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = (x[:, 0] + 0.5 * x[:, 2] > 0).astype(np.int64)
    y[x[:, 1] > 1.2] = 2 if c > 2 else y[x[:, 1] > 1.2]
    return x, y % c


class TestSplitGain:
    def test_contract_example(self):
        # 1/2 [1/2 + 1/2 - 0] with gamma 0
        assert split_gain(1, 1, -1, 1, 1, 0) == pytest.approx(0.5)

    def test_zero_gradient_child_non_negative(self):
        for g, h, h2, lam in [(2.0, 1.0, 3.0, 1.0), (-1.5, 0.5, 0.1, 0.3)]:
            assert split_gain(g, h, 0.0, h2, lam, 0.0) >= 0.0

    def test_huge_gamma_rejects(self):
        assert split_gain(5, 1, -3, 1, 1, 1e6) < 0

    def test_matches_reference(self, rng):
        for _ in range(50):
            gl, gr = rng.normal(size=2) * 3
            hl, hr = rng.uniform(0.1, 5, size=2)
            lam, gamma = rng.uniform(0, 2), rng.uniform(0, 1)
            assert split_gain(gl, hl, gr, hr, lam, gamma) == pytest.approx(
                oracles.split_gain_reference(gl, hl, gr, hr, lam, gamma), rel=1e-12)

    def test_bad_denominator(self):
        with pytest.raises(ConfigError):
            split_gain(1, -2, 1, 1, 1, 0)


class TestFirstSplitOracle:
    def assert_first_split_matches(self, x, y, c, params):
        model = gbt.fit(x, y, params)
        tree = model.trees[0][0]
        grad, hess = oracles.softmax_root_grad_hess(y, c)
        want = oracles.brute_force_root_split(
            x, grad[:, 0], hess[:, 0], params.reg_lambda, params.gamma,
            params.min_child_weight)
        if want is None:
            assert tree.is_leaf[0]
            return
        feat, thr, _ = want
        assert not tree.is_leaf[0]
        assert int(tree.feature[0]) == feat
        assert float(tree.threshold[0]) == pytest.approx(thr, rel=1e-12)

    def test_exact_mode_many_datasets(self):
        rng = np.random.default_rng(42)
        params = TrainParams(n_estimators=1, max_depth=1, tree_method="exact",
                             min_child_weight=0.0)
        for trial in range(50):
            n = int(rng.integers(8, 65))
            d = int(rng.integers(1, 9))
            c = int(rng.integers(2, 4))
            # mix continuous and low-cardinality columns to exercise midpoints
            x = rng.normal(size=(n, d))
            if d > 1:
                x[:, 0] = rng.integers(0, 4, size=n)
            y = rng.integers(0, c, size=n)
            if np.unique(y).size < 2:
                y[0] = (y[0] + 1) % c
            self.assert_first_split_matches(x, y, c, params)

    def test_hist_mode_agrees_on_small_data(self):
        # With fewer distinct values than bins, histogram candidate edges are
        # the values themselves, so the chosen cut matches exact mode's
        # midpoint decision on the same side assignment.
        rng = np.random.default_rng(3)
        x = rng.integers(0, 6, size=(60, 4)).astype(np.float64)
        y = rng.integers(0, 3, size=60)
        exact = gbt.fit(x, y, TrainParams(n_estimators=1, max_depth=1,
                                          tree_method="exact",
                                          min_child_weight=0.0))
        hist = gbt.fit(x, y, TrainParams(n_estimators=1, max_depth=1,
                                         tree_method="hist",
                                         min_child_weight=0.0))
        te, th = exact.trees[0][0], hist.trees[0][0]
        assert int(te.feature[0]) == int(th.feature[0])
        xa = x[:, int(te.feature[0])]
        assert np.array_equal(xa <= te.threshold[0], xa <= th.threshold[0])


class TestFitContracts:
    def test_linear_toy_perfect(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(100, 1))
        y = (x[:, 0] >= 0).astype(np.int64)
        model = gbt.fit(x, y, TrainParams(n_estimators=10, max_depth=1))
        pred = gbt.predict_proba(model, x).argmax(axis=1)
        assert np.array_equal(pred, y)

    def test_monotone_loss_full_sampling(self):
        x, y = toy_problem()
        model = gbt.fit(x, y, TrainParams(n_estimators=30))
        loss = np.array(model.train_loss)
        assert loss.size == 31
        assert np.all(np.diff(loss) <= 1e-12)

    def test_depth_and_tree_count(self):
        x, y = toy_problem(c=3)
        params = TrainParams(n_estimators=12, max_depth=2)
        model = gbt.fit(x, y, params)
        assert len(model.trees) == 12
        assert all(len(r) == 3 for r in model.trees)
        for r in model.trees:
            for t in r:
                assert t.depth() <= 2

    def test_min_child_weight_respected(self):
        x, y = toy_problem(n=300)
        params = TrainParams(n_estimators=5, min_child_weight=3.0)
        model = gbt.fit(x, y, params)
        for r in model.trees:
            for t in r:
                assert np.count_nonzero(t.is_leaf) >= 1
                assert t.depth() <= params.max_depth

    def test_deterministic_for_seed(self):
        x, y = toy_problem()
        p = TrainParams(n_estimators=8, subsample=0.7, colsample_bytree=0.6,
                        rng_seed=5)
        m1 = gbt.fit(x, y, p)
        m2 = gbt.fit(x, y, p)
        for r1, r2 in zip(m1.trees, m2.trees):
            for t1, t2 in zip(r1, r2):
                assert np.array_equal(t1.feature, t2.feature)
                assert np.array_equal(t1.threshold, t2.threshold)
                assert np.array_equal(t1.weight, t2.weight)
        m3 = gbt.fit(x, y, TrainParams(n_estimators=8, subsample=0.7,
                                       colsample_bytree=0.6, rng_seed=6))
        same = all(
            np.array_equal(t1.feature, t3.feature)
            and np.array_equal(t1.threshold, t3.threshold)
            for r1, r3 in zip(m1.trees, m3.trees) for t1, t3 in zip(r1, r3))
        assert not same

    def test_single_class_degenerate(self):
        x = np.random.default_rng(0).normal(size=(20, 3))
        y = np.zeros(20, dtype=np.int64)
        model = gbt.fit(x, y, TrainParams(n_estimators=5))
        assert model.degenerate
        assert model.n_trees == 0

    def test_empty_data_rejected(self):
        with pytest.raises(DataError):
            gbt.fit(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), TrainParams())

    def test_nan_rejected(self):
        x = np.ones((10, 2))
        x[3, 1] = np.nan
        with pytest.raises(DataError):
            gbt.fit(x, np.arange(10) % 2, TrainParams())


class TestPredictProba:
    def test_zero_round_uniform(self):
        x = np.random.default_rng(1).normal(size=(30, 4))
        y = np.arange(30) % 3
        model = gbt.fit(x, y, TrainParams(n_estimators=0))
        p = gbt.predict_proba(model, x)
        assert np.allclose(p, 1.0 / 3.0, atol=1e-12)

    def test_simplex(self):
        x, y = toy_problem()
        model = gbt.fit(x, y, TrainParams(n_estimators=10))
        p = gbt.predict_proba(model, np.random.default_rng(2).normal(size=(500, 6)))
        assert np.all(p > 0) and np.all(p < 1)
        assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)

    def test_single_row(self):
        x, y = toy_problem()
        model = gbt.fit(x, y, TrainParams(n_estimators=3))
        p = gbt.predict_proba(model, x[0])
        assert p.shape == (3,)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)

    def test_width_mismatch(self):
        x, y = toy_problem()
        model = gbt.fit(x, y, TrainParams(n_estimators=3))
        with pytest.raises(DataError):
            gbt.predict_proba(model, np.zeros((4, 9)))


class TestImportance:
    def test_one_split_model(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(80, 3))
        y = (x[:, 1] > 0).astype(np.int64)
        params = TrainParams(n_estimators=1, max_depth=1)
        model = gbt.fit(x, y, params)
        imp = gbt.feature_importance(model)
        # one round x two class trees, both splitting feature 1
        assert set(imp) == {1}
        assert imp[1] > 0

    def test_duplicate_feature_mass_conserved(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(150, 3))
        y = (base[:, 0] + 0.3 * base[:, 1] > 0).astype(np.int64)
        params = TrainParams(n_estimators=6, max_depth=2)
        solo = gbt.feature_importance(gbt.fit(base, y, params))
        dup = np.hstack([base, base[:, :1]])  # feature 3 duplicates feature 0
        dup_imp = gbt.feature_importance(gbt.fit(dup, y, params))
        # deterministic tie-break sends every split to the lower index copy
        assert dup_imp.get(3, 0.0) == 0.0
        total_solo = sum(solo.values())
        total_dup = sum(dup_imp.values())
        assert total_dup == pytest.approx(total_solo, rel=1e-9)

    def test_constant_feature_zero(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(60, 3))
        x[:, 95 % 3] = 4.2
        y = (x[:, 0] > 0).astype(np.int64)
        imp = gbt.feature_importance(gbt.fit(x, y, TrainParams(n_estimators=4)))
        assert imp.get(2, 0.0) == 0.0


class TestBinning:
    def test_codes_definition(self, rng):
        x = rng.normal(size=(300, 5))
        edges, codes, _ = _bin_features(x, 256)
        for j in range(5):
            e = edges[j]
            for b in range(e.size):
                mask_code = codes[:, j] <= b
                mask_val = x[:, j] <= e[b]
                assert np.array_equal(mask_code, mask_val)

    def test_few_uniques_exact_edges(self):
        x = np.array([[0.0], [1.0], [1.0], [3.0], [7.0]])
        edges, codes, _ = _bin_features(x, 256)
        assert np.array_equal(edges[0], [0.0, 1.0, 3.0])
        assert np.array_equal(codes[:, 0], [0, 1, 1, 2, 3])

    def test_caps_at_max_bins(self, rng):
        x = rng.normal(size=(4000, 1))
        edges, codes, _ = _bin_features(x, 256)
        assert edges[0].size <= 255
        assert codes[:, 0].max() <= 255


class TestBackendParity:
    def test_python_backend_available(self):
        assert "python" in gbt.available_backends()

    @pytest.mark.skipif(not HAVE_C, reason="compiled backend not built")
    def test_hist_accumulate_bitwise(self, rng):
        codes = np.ascontiguousarray(
            rng.integers(0, 32, size=(400, 12)).astype(np.int32))
        grad = rng.normal(size=400)
        hess = rng.uniform(0.01, 1, size=400)
        rows = np.sort(rng.permutation(400)[:257]).astype(np.int64)
        cols = np.sort(rng.permutation(12)[:7]).astype(np.int64)
        outs = []
        for mod in (_kernels_py, _kernels_c):
            gh, hh, cnt = mod.hist_accumulate(codes, grad, hess, rows, cols, 32)
            outs.append((np.asarray(gh), np.asarray(hh), np.asarray(cnt)))
        assert np.array_equal(outs[0][0], outs[1][0])
        assert np.array_equal(outs[0][1], outs[1][1])
        assert np.array_equal(outs[0][2], outs[1][2])

    @pytest.mark.skipif(not HAVE_C, reason="compiled backend not built")
    def test_best_split_bitwise(self, rng):
        for trial in range(20):
            k, b = 9, 24
            gh = rng.normal(size=(k, b))
            hh = rng.uniform(0, 0.5, size=(k, b))
            cnt = rng.integers(0, 30, size=(k, b)).astype(np.int64)
            g_tot = float(gh.sum())
            h_tot = float(hh.sum())
            n_tot = int(cnt.sum())
            args = (gh, hh, cnt, g_tot, h_tot, n_tot, 1.0, 0.1, 1.0)
            f1, b1, g1 = _kernels_py.best_split(*args)
            f2, b2, g2 = _kernels_c.best_split(*args)
            assert (f1, b1) == (f2, b2)
            assert g1 == g2 or (np.isneginf(g1) and np.isneginf(g2))

    @pytest.mark.skipif(not HAVE_C, reason="compiled backend not built")
    def test_full_training_identical_across_backends(self):
        code = """
import json, os, sys
import numpy as np
rng = np.random.default_rng(11)
x = rng.normal(size=(300, 20))
y = rng.integers(0, 4, size=300)
from gamc import gbt
from gamc.gbt.core import TrainParams
m = gbt.fit(x, y, TrainParams(n_estimators=15, max_depth=3, subsample=0.8,
                              colsample_bytree=0.7, rng_seed=2))
rows = []
for r in m.trees:
    for t in r:
        rows.append([t.feature.tolist(), t.threshold.tolist(), t.weight.tolist()])
print(json.dumps({"backend": gbt.BACKEND, "trees": rows,
                  "loss": list(m.train_loss)}))
"""
        outs = {}
        for env_val in ("0", "1"):
            env = {"GAMC_PURE_PYTHON": env_val, "PATH": "/usr/bin:/bin"}
            r = subprocess.run([sys.executable, "-c", code], capture_output=True,
                               text=True, env=env, check=True)
            import json
            payload = json.loads(r.stdout)
            outs[payload["backend"]] = payload
        assert set(outs) == {"compiled", "python"}
        assert outs["compiled"]["trees"] == outs["python"]["trees"]
        assert outs["compiled"]["loss"] == outs["python"]["loss"]
