"""SNR-band gate (channel quality indicator) and the soft-routing
mixture-of-experts ensemble.

The gate is a boosted classifier over the graph-feature segment that emits a
probability weight per SNR band. Each expert owns an LNT block and a boosted
classifier trained only on its band's frames; the ensemble output is the
weight-averaged expert probability vector, which stays on the simplex.
"""

from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import gbt
from .bands import SnrBands
from .errors import DataError
from .lnt import DEFAULT_SIZES, LntBlock, augment, fit_lnt_block

# Gate hyperparameters.
CQI_PARAMS = gbt.TrainParams(
    learning_rate=0.1,
    max_depth=2,
    n_estimators=200,
    subsample=0.8,
    colsample_bytree=0.8,
    min_child_weight=1.0,
    gamma=0.1,
    reg_alpha=0.1,
    reg_lambda=0.1,
    tree_method="hist",
)

# Per-expert hyperparameters; reg_lambda keeps the library default.
EXPERT_PARAMS = gbt.TrainParams(
    learning_rate=0.1,
    max_depth=2,
    n_estimators=200,
    subsample=0.8,
    colsample_bytree=0.8,
    min_child_weight=3.0,
    gamma=0.1,
    reg_alpha=0.0,
    reg_lambda=1.0,
    tree_method="hist",
)


@dataclass(frozen=True)
class CqiModel:
    """Band gate; `model` is None for the trivial single-band case."""

    bands: SnrBands
    model: Optional[gbt.BoostedEnsemble]

    @property
    def n_bands(self) -> int:
        return len(self.bands)


@dataclass(frozen=True)
class Expert:
    """One band's feature-learning block plus classifier; `lnt` is None when
    the feature-learning stage is disabled."""

    band_id: int
    lnt: Optional[LntBlock]
    model: gbt.BoostedEnsemble


@dataclass(frozen=True)
class MoeModel:
    """Gate plus one expert per band over a shared class table."""

    cqi: CqiModel
    experts: Tuple[Expert, ...]
    class_names: Tuple[str, ...]
    graph_dim: int

    def __post_init__(self):
        if len(self.experts) != self.cqi.n_bands:
            raise DataError(
                f"{len(self.experts)} experts for {self.cqi.n_bands} bands"
            )


def fit_cqi(graph_features, snrs_db, bands: SnrBands,
            params: gbt.TrainParams = CQI_PARAMS,
            rng_seed: int = 0) -> CqiModel:
    """Train the band gate on ground-truth band indices of the training SNRs."""
    x = np.asarray(graph_features, dtype=np.float64)
    snrs = np.asarray(snrs_db, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != snrs.size:
        raise DataError("graph features and snr labels disagree")
    band_idx = np.array(bands.indices(snrs), dtype=np.int64)
    counts = np.bincount(band_idx, minlength=len(bands))
    empty = np.nonzero(counts == 0)[0]
    if empty.size:
        raise DataError(f"no training rows for band(s) {empty.tolist()}")
    if len(bands) == 1:
        return CqiModel(bands=bands, model=None)
    model = gbt.fit(x, band_idx, replace(params, rng_seed=rng_seed),
                    n_classes=len(bands))
    return CqiModel(bands=bands, model=model)


def cqi_weights(cqi: CqiModel, graph_features) -> np.ndarray:
    """Soft band weights per frame: nonnegative, rows sum to 1."""
    x = np.asarray(graph_features, dtype=np.float64)
    single = x.ndim == 1
    xm = x[None, :] if single else x
    if cqi.model is None:
        w = np.ones((xm.shape[0], 1))
    else:
        w = gbt.predict_proba(cqi.model, xm)
    return w[0] if single else w


def fit_expert(features, labels, band_id: int, importance: Dict[int, float],
               n_classes: int,
               params: gbt.TrainParams = EXPERT_PARAMS,
               sizes: Sequence[int] = DEFAULT_SIZES,
               folds: int = 5, l2: float = 1e-2, rng_seed: int = 0,
               use_lnt: bool = True) -> Expert:
    """Fit one band's LNT block (on its own rows, globally ranked subspaces)
    and its boosted classifier on the augmented features."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.shape[0] != y.size or x.shape[0] == 0:
        raise DataError(f"band {band_id}: empty or inconsistent training data")
    if use_lnt:
        lnt_block = fit_lnt_block(x, y, importance, sizes=sizes, folds=folds,
                                  l2=l2, seed=rng_seed)
        aug = augment(lnt_block, x)
    else:
        lnt_block = None
        aug = x
    model = gbt.fit(aug, y, replace(params, rng_seed=rng_seed),
                    n_classes=n_classes)
    return Expert(band_id=band_id, lnt=lnt_block, model=model)


def expert_proba(expert: Expert, features) -> np.ndarray:
    """One expert's class probabilities from raw (un-augmented) features."""
    x = features if expert.lnt is None else augment(expert.lnt, features)
    return gbt.predict_proba(expert.model, x)


def ensemble_predict(moe: MoeModel, features, weights=None) -> np.ndarray:
    """Weight-averaged expert probabilities: P = sum_i w_i P_i.

    `weights` overrides the gate (used for diagnostics); rows must lie on the
    simplex. The output is a convex combination of simplex points, so each
    row sums to 1 within 1e-9.
    """
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    xm = x[None, :] if single else x
    if weights is None:
        w = cqi_weights(moe.cqi, xm[:, : moe.graph_dim])
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w[None, :] if w.ndim == 1 else w
        if w.shape != (xm.shape[0], len(moe.experts)):
            raise DataError("weight matrix shape mismatch")
    out = np.zeros((xm.shape[0], len(moe.class_names)))
    for i, expert in enumerate(moe.experts):
        col = w[:, i]
        if not np.any(col):
            continue
        out += col[:, None] * expert_proba(expert, xm)
    return out[0] if single else out
