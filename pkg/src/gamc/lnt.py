"""Least-squares normal transform: importance-ranked nested subspaces,
per-subspace standardization, one-vs-rest logistic projectors, and softmax
probability features appended to the raw vector.

Cross-validation folds are stratified by class and keyed on a content hash
of each row, so refitting on a permuted copy of the same training set
reproduces the block exactly. The optimizer is plain full-batch gradient
descent with an adaptive (halving) step, which keeps the training loss
non-increasing by construction.
"""

import hashlib
import warnings
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_SIZES = (64, 128, 256, 512)
DEFAULT_L2 = 1e-2
MAX_ITERS = 500
GRAD_TOL = 1e-6


@dataclass(frozen=True)
class SubspaceSpec:
    """Requested sizes and the chosen feature indices per size (descending
    importance; nested by construction)."""

    sizes: Tuple[int, ...]
    indices: Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map z = (x - mu) / sigma with population variance;
    zero-variance features get sigma = 1 and map to 0."""

    mu: np.ndarray
    sigma: np.ndarray

    def apply(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mu) / self.sigma

    def invert(self, z):
        return np.asarray(z, dtype=np.float64) * self.sigma + self.mu


@dataclass(frozen=True)
class LinearProjector:
    """One-vs-rest logistic weights; logits = z @ weights + biases."""

    weights: np.ndarray
    biases: np.ndarray
    n_classes: int
    l2: float
    fold_id: int
    loss_trace: Tuple[float, ...] = ()
    converged: bool = False


@dataclass(frozen=True)
class LntEntry:
    size: int
    indices: Tuple[int, ...]
    standardizer: Standardizer
    projector: LinearProjector


@dataclass(frozen=True)
class LntBlock:
    """One fitted (subspace, standardizer, projector) triple per size,
    ascending; augment() appends len(entries) * n_classes probabilities."""

    entries: Tuple[LntEntry, ...]
    d_total: int
    n_classes: int

    @property
    def output_dim(self) -> int:
        return self.d_total + len(self.entries) * self.n_classes


def select_subspaces(importance: Dict[int, float], sizes: Sequence[int],
                     n_features: int) -> SubspaceSpec:
    """Top-s features per size by gain, ties toward lower index; sizes clip
    to n_features, and smaller subspaces are prefixes of larger ones."""
    if n_features < 1:
        raise ConfigError("n_features must be >= 1")
    sizes = tuple(int(s) for s in sizes)
    if len(set(sizes)) != len(sizes) or any(s < 1 for s in sizes):
        raise ConfigError("subspace sizes must be unique positive integers")
    gains = np.zeros(n_features)
    if hasattr(importance, "items"):
        for idx, g in importance.items():
            if 0 <= int(idx) < n_features:
                gains[int(idx)] = g
    else:
        arr = np.asarray(importance, dtype=np.float64)
        gains[: min(arr.size, n_features)] = arr[:n_features]
    order = np.lexsort((np.arange(n_features), -gains))
    picked = tuple(tuple(int(j) for j in order[: min(s, n_features)]) for s in sorted(sizes))
    return SubspaceSpec(sizes=tuple(sorted(sizes)), indices=picked)


def fit_standardizer(x_sub) -> Standardizer:
    x = np.asarray(x_sub, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("standardizer needs a non-empty 2-D matrix")
    mu = x.mean(axis=0)
    sigma = np.sqrt(x.var(axis=0))
    sigma = np.where(sigma <= 0.0, 1.0, sigma)
    return Standardizer(mu=mu, sigma=sigma)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _loss_and_grad(theta, zb, y_onehot, l2):
    """Total one-vs-rest objective and its gradient.

    theta: (d+1, C) with the bias in the last row (unregularized); the L2
    term is l2/(2d) * ||W||^2 per class, summed over classes.
    """
    n, d1 = zb.shape
    d = d1 - 1
    logits = zb @ theta
    loss = float(np.sum(np.mean(np.logaddexp(0.0, logits) - y_onehot * logits, axis=0)))
    loss += 0.5 * (l2 / d) * float(np.sum(theta[:-1] ** 2))
    grad = zb.T @ (_sigmoid(logits) - y_onehot) / n
    grad[:-1] += (l2 / d) * theta[:-1]
    return loss, grad


def _spectral_norm_sq(zb):
    # Power iteration; only used to seed the step size, so a rough estimate
    # is fine (the optimizer halves the step whenever the loss increases).
    v = np.full(zb.shape[1], 1.0 / np.sqrt(zb.shape[1]))
    for _ in range(32):
        w = zb.T @ (zb @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 1.0
        v = w / nw
    return float(np.linalg.norm(zb @ v) ** 2)


def _run_gd(zb, y_onehot, l2):
    n, d1 = zb.shape
    d = d1 - 1
    lip = 1.3 * _spectral_norm_sq(zb) / (4.0 * n) + l2 / max(d, 1)
    lr = 1.0 / max(lip, 1e-12)
    theta = np.zeros((d1, y_onehot.shape[1]))
    loss, grad = _loss_and_grad(theta, zb, y_onehot, l2)
    trace = [loss]
    converged = False
    for _ in range(MAX_ITERS):
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        while True:
            cand = theta - lr * grad
            cand_loss, cand_grad = _loss_and_grad(cand, zb, y_onehot, l2)
            if cand_loss <= loss or lr < 1e-18:
                break
            lr *= 0.5
        theta, loss, grad = cand, cand_loss, cand_grad
        trace.append(loss)
    return theta, trace, converged


def _content_order(x, y):
    """Row order by content digest; permutation-invariant and collision-safe
    for practical purposes (rows with equal bytes are interchangeable)."""
    digests = []
    for i in range(x.shape[0]):
        h = hashlib.blake2b(digest_size=16)
        h.update(x[i].tobytes())
        h.update(int(y[i]).to_bytes(8, "little", signed=True))
        digests.append(h.digest())
    return sorted(range(x.shape[0]), key=lambda i: digests[i])


def _fold_assignment(y_sorted, folds, seed):
    """Stratified round-robin folds over content-ordered rows, shuffled
    per class with the given seed."""
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y_sorted.size, dtype=np.int64)
    for cls in np.unique(y_sorted):
        pos = np.nonzero(y_sorted == cls)[0]
        ids = np.arange(pos.size) % folds
        rng.shuffle(ids)
        fold_of[pos] = ids
    return fold_of


def _macro_accuracy(pred, truth):
    accs = []
    for cls in np.unique(truth):
        mask = truth == cls
        accs.append(float(np.mean(pred[mask] == cls)))
    return float(np.mean(accs))


def fit_projector(z, labels, folds: int = 5, l2: float = DEFAULT_L2,
                  seed: int = 0) -> LinearProjector:
    """Cross-validated one-vs-rest logistic fit on standardized features.

    Trains on each fold's complement, scores validation macro-accuracy, and
    returns the best fold's weights (ties toward the lowest fold id).
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if z.ndim != 2 or z.shape[0] != y.size:
        raise DataError("feature matrix and labels disagree")
    classes = np.unique(y)
    if classes.size < 2:
        raise DataError("projector needs at least two classes")
    c = int(y.max()) + 1
    min_count = int(np.min(np.bincount(y, minlength=c)[classes]))
    if min_count < folds:
        folds_eff = max(2, min_count)
        warnings.warn(
            f"reducing folds from {folds} to {folds_eff}: smallest class has "
            f"{min_count} rows"
        )
    else:
        folds_eff = folds

    order = np.array(_content_order(z, y), dtype=np.int64)
    zs, ys = z[order], y[order]
    fold_of = _fold_assignment(ys, folds_eff, seed)
    eye = np.eye(c)

    best = None
    for f in range(folds_eff):
        tr = fold_of != f
        va = ~tr
        if not va.any() or np.unique(ys[tr]).size < 2:
            continue
        std = fit_standardizer(zs[tr])
        zb = np.hstack([std.apply(zs[tr]), np.ones((int(tr.sum()), 1))])
        theta, trace, converged = _run_gd(zb, eye[ys[tr]], l2)
        logits = std.apply(zs[va]) @ theta[:-1] + theta[-1]
        acc = _macro_accuracy(np.argmax(logits, axis=1), ys[va])
        if best is None or acc > best[0]:
            best = (acc, f, theta, trace, converged)
    if best is None:
        raise DataError("cross-validation produced no valid fold")
    _, fold_id, theta, trace, converged = best
    return LinearProjector(
        weights=theta[:-1].copy(),
        biases=theta[-1].copy(),
        n_classes=c,
        l2=l2,
        fold_id=fold_id,
        loss_trace=tuple(trace),
        converged=converged,
    )


def project(projector: LinearProjector, z) -> np.ndarray:
    """Softmax over the projector logits; rows sum to 1 within 1e-9."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    zm = z[None, :] if single else z
    if zm.shape[1] != projector.weights.shape[0]:
        raise DataError(
            f"projector expects {projector.weights.shape[0]} features, got {zm.shape[1]}"
        )
    logits = zm @ projector.weights + projector.biases
    logits -= logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    p = e / e.sum(axis=1, keepdims=True)
    return p[0] if single else p


def fit_lnt_block(features, labels, importance: Dict[int, float],
                  sizes: Sequence[int] = DEFAULT_SIZES, folds: int = 5,
                  l2: float = DEFAULT_L2, seed: int = 0) -> LntBlock:
    """Fit one projector per subspace size.

    During CV each fold standardizes with its own training-split statistics;
    the retained entry pairs the best fold's weights with statistics refit on
    the full training split.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2:
        raise DataError("features must be 2-D")
    # Canonical row order up front: the fit is then invariant to any
    # permutation of the training rows, bitwise.
    order = np.array(_content_order(x, y), dtype=np.int64)
    x, y = x[order], y[order]
    spec = select_subspaces(importance, sizes, x.shape[1])
    entries = []
    for size, idx in zip(spec.sizes, spec.indices):
        cols = np.array(idx, dtype=np.int64)
        proj = fit_projector(x[:, cols], y, folds=folds, l2=l2, seed=seed)
        std = fit_standardizer(x[:, cols])
        entries.append(
            LntEntry(size=size, indices=idx, standardizer=std, projector=proj)
        )
    return LntBlock(entries=tuple(entries), d_total=x.shape[1],
                    n_classes=entries[0].projector.n_classes)


def augment(block: LntBlock, x) -> np.ndarray:
    """[x, p_s1, p_s2, ...] with one probability sub-vector per subspace."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    xm = arr[None, :] if single else arr
    if xm.shape[1] != block.d_total:
        raise DataError(f"expected {block.d_total} features, got {xm.shape[1]}")
    parts = [xm]
    for entry in block.entries:
        cols = np.array(entry.indices, dtype=np.int64)
        z = entry.standardizer.apply(xm[:, cols])
        parts.append(project(entry.projector, z))
    out = np.hstack(parts)
    return out[0] if single else out


def lnt_feature_names(block: LntBlock) -> Tuple[str, ...]:
    """Names of the appended probability slots, aligned with augment order."""
    names = []
    for entry in block.entries:
        names += [f"lnt.s{entry.size}.p{c}" for c in range(block.n_classes)]
    return tuple(names)
