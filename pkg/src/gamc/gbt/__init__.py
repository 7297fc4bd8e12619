"""Boosted-tree learner: softmax objective, histogram splits, gain importance."""

from .core import (
    BoostedEnsemble,
    TrainParams,
    Tree,
    feature_importance,
    fit,
    predict_margins,
    predict_proba,
    split_gain,
)
from .kernels import BACKEND, available_backends

__all__ = [
    "BACKEND",
    "BoostedEnsemble",
    "TrainParams",
    "Tree",
    "available_backends",
    "feature_importance",
    "fit",
    "predict_margins",
    "predict_proba",
    "split_gain",
]
