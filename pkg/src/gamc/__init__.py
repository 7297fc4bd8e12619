"""gamc: graph-augmented modulation classification.

Raw I/Q frames are summarized by spatio-temporal graph spectra and a
statistical descriptor bank, enriched by supervised linear projections, and
classified by SNR-band experts combined through a soft gate.
"""

from .bands import SnrBands, default_bands, snr_band_index
from .errors import (
    BundleError,
    ConfigError,
    DataError,
    DegenerateGraphError,
    DegenerateInputError,
    GamcError,
)
from .frames import (
    CLASS_NAMES,
    Dataset,
    IqFrame,
    ModulationScheme,
    SynthConfig,
    load_dataset,
    normalize_frame,
    save_dataset,
    synthesize_dataset,
    synthesize_frame,
)
from .graphify import GraphConfig, extract_graph_features, graph_feature_names
from .lnt import LntBlock, augment, fit_lnt_block
from .pipeline import (
    EvalReport,
    GamcBundle,
    PipelineConfig,
    SyntheticRecipe,
    complexity_report,
    evaluate,
    extract_features,
    feature_names_for,
    load_bundle,
    predict_dataset,
    save_bundle,
    train_pipeline,
)
from .router import MoeModel, cqi_weights, ensemble_predict
from .statfeat import StatConfig, extract_stat_features, stat_feature_names

__version__ = "0.1.0"

__all__ = [
    "CLASS_NAMES",
    "BundleError",
    "ConfigError",
    "DataError",
    "Dataset",
    "DegenerateGraphError",
    "DegenerateInputError",
    "EvalReport",
    "GamcBundle",
    "GamcError",
    "GraphConfig",
    "IqFrame",
    "LntBlock",
    "ModulationScheme",
    "MoeModel",
    "PipelineConfig",
    "SnrBands",
    "StatConfig",
    "SynthConfig",
    "SyntheticRecipe",
    "augment",
    "complexity_report",
    "cqi_weights",
    "default_bands",
    "ensemble_predict",
    "evaluate",
    "extract_features",
    "extract_graph_features",
    "extract_stat_features",
    "feature_names_for",
    "fit_lnt_block",
    "graph_feature_names",
    "load_bundle",
    "load_dataset",
    "normalize_frame",
    "predict_dataset",
    "save_bundle",
    "save_dataset",
    "snr_band_index",
    "stat_feature_names",
    "synthesize_dataset",
    "synthesize_frame",
    "train_pipeline",
    "__version__",
]
