"""Gradient-boosted regression trees with a softmax multiclass objective.

Each boosting round fits one depth-limited regression tree per class on the
softmax gradients/hessians of the current margins. Split candidates come
from per-feature quantile histograms (at most max_bins bins); an exact
enumeration mode over sample midpoints exists for verification on small
data. Split quality is the regularized gain

    1/2 [ GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l) ] - gamma

and ties are broken toward the lowest feature index, then the lowest
threshold, which makes training fully deterministic for a fixed seed.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ConfigError, DataError
from . import kernels

_TREE_METHODS = ("hist", "exact")


@dataclass(frozen=True)
class TrainParams:
    """Boosting hyperparameters."""

    learning_rate: float = 0.1
    max_depth: int = 2
    n_estimators: int = 100
    subsample: float = 1.0
    colsample_bytree: float = 1.0
    min_child_weight: float = 1.0
    gamma: float = 0.0
    reg_alpha: float = 0.0
    reg_lambda: float = 1.0
    tree_method: str = "hist"
    max_bins: int = 256
    rng_seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.n_estimators < 0:
            raise ConfigError("n_estimators must be >= 0")
        for name in ("subsample", "colsample_bytree"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ConfigError(f"{name} must lie in (0, 1]")
        for name in ("min_child_weight", "gamma", "reg_alpha", "reg_lambda"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError(f"{name} must be finite and >= 0")
        if self.tree_method not in _TREE_METHODS:
            raise ConfigError(f"tree_method must be one of {_TREE_METHODS}")
        if self.max_bins < 2:
            raise ConfigError("max_bins must be >= 2")


@dataclass(frozen=True)
class Tree:
    """One fitted regression tree in flat-array form (preorder node layout).

    Internal nodes route x[feature] <= threshold to `left`, else `right`.
    Leaves carry the raw (un-scaled) weight; the ensemble applies the
    learning rate.
    """

    feature: np.ndarray
    threshold: np.ndarray
    cut_bin: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    is_leaf: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        """Longest root-to-leaf edge count."""
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if not self.is_leaf[i]:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0


@dataclass(frozen=True)
class BoostedEnsemble:
    """A fitted softmax boosting model: rounds x classes trees plus metadata."""

    n_classes: int
    n_features: int
    params: TrainParams
    base_score: np.ndarray
    trees: Tuple[Tuple[Tree, ...], ...]
    importance: Dict[int, float]
    train_loss: Tuple[float, ...]
    degenerate: bool = False

    @property
    def n_trees(self) -> int:
        return sum(len(r) for r in self.trees)


def split_gain(gl, hl, gr, hr, lambda_reg, gamma) -> float:
    """Regularized loss reduction of a candidate split."""
    if hl + lambda_reg <= 0 or hr + lambda_reg <= 0:
        raise ConfigError("child hessian plus reg_lambda must be positive")
    parent = (gl + gr) ** 2 / (hl + hr + lambda_reg)
    return 0.5 * (gl * gl / (hl + lambda_reg) + gr * gr / (hr + lambda_reg) - parent) - gamma


def _softmax(margins):
    z = margins - margins.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _leaf_weight(g, h, params):
    a = params.reg_alpha
    if g > a:
        gs = g - a
    elif g < -a:
        gs = g + a
    else:
        gs = 0.0
    denom = h + params.reg_lambda
    return -gs / denom if denom > 0 else 0.0


def _feature_edges(col, max_bins):
    """Candidate cut values; a split at edge e sends x <= e left."""
    u = np.unique(col)
    if u.size <= 1:
        return u[:0]
    if u.size <= max_bins:
        return u[:-1]
    qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
    return np.unique(qs)


def _bin_features(x, max_bins):
    n, f = x.shape
    edges = []
    codes = np.empty((n, f), dtype=np.int32)
    for j in range(f):
        e = _feature_edges(x[:, j], max_bins)
        edges.append(e)
        codes[:, j] = np.searchsorted(e, x[:, j], side="left").astype(np.int32)
    n_bins = max((e.size for e in edges), default=0) + 1
    return edges, codes, n_bins


def _exact_best_split(x, grad, hess, rows, cols, params):
    """Enumerate every (feature, sample-midpoint) candidate; used for oracle
    verification and tiny datasets."""
    lam, gma, mcw = params.reg_lambda, params.gamma, params.min_child_weight
    g_tot = float(grad[rows].sum())
    h_tot = float(hess[rows].sum())
    parent = g_tot * g_tot / (h_tot + lam) if h_tot + lam > 0 else 0.0
    best_gain = -np.inf
    best = None
    for f in cols:
        v = x[rows, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        gs = grad[rows][order]
        hs = hess[rows][order]
        gl = 0.0
        hl = 0.0
        for i in range(rows.size - 1):
            gl += gs[i]
            hl += hs[i]
            if vs[i] == vs[i + 1]:
                continue
            gr = g_tot - gl
            hr = h_tot - hl
            dl = hl + lam
            dr = hr + lam
            if hl < mcw or hr < mcw or dl <= 0 or dr <= 0:
                continue
            gain = 0.5 * (gl * gl / dl + gr * gr / dr - parent) - gma
            if gain > best_gain:
                best_gain = gain
                best = (int(f), 0.5 * (vs[i] + vs[i + 1]))
    if best is None:
        return None
    return best[0], best[1], best_gain


def _grow_tree(x, codes, edges, n_bins, grad, hess, rows, cols, params, importance):
    feature = []
    threshold = []
    cut_bin = []
    left = []
    right = []
    weight = []
    is_leaf = []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        cut_bin.append(-1)
        left.append(-1)
        right.append(-1)
        weight.append(0.0)
        is_leaf.append(True)
        return len(feature) - 1

    def build(node_rows, depth):
        idx = new_node()
        g_tot = float(grad[node_rows].sum())
        h_tot = float(hess[node_rows].sum())
        if depth < params.max_depth and node_rows.size >= 2:
            if params.tree_method == "hist":
                gh, hh, cnt = kernels.hist_accumulate(
                    codes, grad, hess, node_rows, cols, n_bins
                )
                k, b, gain = kernels.best_split(
                    gh, hh, cnt, g_tot, h_tot, node_rows.size,
                    params.reg_lambda, params.gamma, params.min_child_weight,
                )
                if k >= 0 and gain > 0:
                    feat = int(cols[k])
                    thr = float(edges[feat][b])
                    mask = codes[node_rows, feat] <= b
                    return split(idx, node_rows, depth, feat, thr, b, gain, mask)
            else:
                found = _exact_best_split(x, grad, hess, node_rows, cols, params)
                if found is not None and found[2] > 0:
                    feat, thr, gain = found
                    mask = x[node_rows, feat] <= thr
                    if mask.any() and not mask.all():
                        return split(idx, node_rows, depth, feat, thr, -1, gain, mask)
        weight[idx] = _leaf_weight(g_tot, h_tot, params)
        return idx

    def split(idx, node_rows, depth, feat, thr, b, gain, mask):
        importance[feat] = importance.get(feat, 0.0) + gain
        feature[idx] = feat
        threshold[idx] = thr
        cut_bin[idx] = b
        is_leaf[idx] = False
        left[idx] = build(node_rows[mask], depth + 1)
        right[idx] = build(node_rows[~mask], depth + 1)
        return idx

    build(rows, 0)
    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        cut_bin=np.array(cut_bin, dtype=np.int32),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        weight=np.array(weight, dtype=np.float64),
        is_leaf=np.array(is_leaf, dtype=bool),
    )


def _tree_values(tree, x, codes=None):
    """Leaf weight per row; routes by bin codes when given (training fast path)."""
    n = codes.shape[0] if codes is not None else x.shape[0]
    cur = np.zeros(n, dtype=np.int32)
    while True:
        active = np.nonzero(~tree.is_leaf[cur])[0]
        if active.size == 0:
            break
        nodes = cur[active]
        feats = tree.feature[nodes]
        if codes is not None and np.all(tree.cut_bin[nodes] >= 0):
            go_left = codes[active, feats] <= tree.cut_bin[nodes]
        else:
            go_left = x[active, feats] <= tree.threshold[nodes]
        cur[active] = np.where(go_left, tree.left[nodes], tree.right[nodes])
    return tree.weight[cur]


def fit(features, labels, params: TrainParams = TrainParams(),
        n_classes: Optional[int] = None) -> BoostedEnsemble:
    """Train a softmax boosted ensemble.

    Single-class data yields a constant prior-only model flagged degenerate.
    Training is bitwise-deterministic for fixed inputs, params, and seed.
    """
    x = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2:
        raise DataError("features must be a 2-D matrix")
    n, n_feat = x.shape
    if n == 0 or n_feat == 0:
        raise DataError("empty training data")
    if y.shape != (n,):
        raise DataError(f"label count {y.shape} does not match {n} rows")
    if not np.all(np.isfinite(x)):
        raise DataError("features contain NaN or Inf")
    if y.min() < 0:
        raise DataError("negative class index")
    c = int(n_classes) if n_classes is not None else int(y.max()) + 1
    if int(y.max()) >= c:
        raise DataError(f"label {int(y.max())} out of range for {c} classes")
    c = max(c, 2)

    counts = np.bincount(y, minlength=c).astype(np.float64)
    base = np.log(np.clip(counts / n, 1e-12, None))
    degenerate = np.count_nonzero(counts) < 2
    rounds = 0 if degenerate else params.n_estimators

    edges, codes, n_bins = _bin_features(x, params.max_bins) if params.tree_method == "hist" else ([], None, 0)

    rng = np.random.default_rng(params.rng_seed)
    m_sub = min(n, max(1, math.ceil(n * params.subsample)))
    k_cols = min(n_feat, max(1, math.ceil(n_feat * params.colsample_bytree)))
    all_rows = np.arange(n, dtype=np.int64)
    all_cols = np.arange(n_feat, dtype=np.int64)

    margins = np.tile(base, (n, 1))
    row_idx = np.arange(n)
    importance: Dict[int, float] = {}
    losses = []
    all_trees = []
    for _ in range(rounds):
        p = _softmax(margins)
        losses.append(float(-np.mean(np.log(np.clip(p[row_idx, y], 1e-300, None)))))
        g_all = p.copy()
        g_all[row_idx, y] -= 1.0
        h_all = p * (1.0 - p)
        round_trees = []
        for cls in range(c):
            rows = all_rows if m_sub == n else np.sort(rng.permutation(n)[:m_sub]).astype(np.int64)
            cols = all_cols if k_cols == n_feat else np.sort(rng.permutation(n_feat)[:k_cols]).astype(np.int64)
            grad = np.ascontiguousarray(g_all[:, cls])
            hess = np.ascontiguousarray(h_all[:, cls])
            tree = _grow_tree(x, codes, edges, n_bins, grad, hess, rows, cols, params, importance)
            margins[:, cls] += params.learning_rate * _tree_values(tree, x, codes)
            round_trees.append(tree)
        all_trees.append(tuple(round_trees))
    p = _softmax(margins)
    losses.append(float(-np.mean(np.log(np.clip(p[row_idx, y], 1e-300, None)))))

    return BoostedEnsemble(
        n_classes=c,
        n_features=n_feat,
        params=params,
        base_score=base,
        trees=tuple(all_trees),
        importance=importance,
        train_loss=tuple(losses),
        degenerate=degenerate,
    )


def predict_margins(model: BoostedEnsemble, features) -> np.ndarray:
    x = np.ascontiguousarray(features, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise DataError(
            f"feature width {x.shape[-1] if x.ndim else 0} does not match "
            f"model width {model.n_features}"
        )
    margins = np.tile(model.base_score, (x.shape[0], 1))
    for round_trees in model.trees:
        for cls, tree in enumerate(round_trees):
            margins[:, cls] += model.params.learning_rate * _tree_values(tree, x)
    return margins[0] if single else margins


def predict_proba(model: BoostedEnsemble, features) -> np.ndarray:
    """Softmax class probabilities; rows sum to 1 within 1e-9."""
    margins = predict_margins(model, features)
    if margins.ndim == 1:
        return _softmax(margins[None, :])[0]
    return _softmax(margins)


def feature_importance(model: BoostedEnsemble) -> Dict[int, float]:
    """Total split gain accumulated per feature index; unused features absent."""
    return dict(model.importance)
