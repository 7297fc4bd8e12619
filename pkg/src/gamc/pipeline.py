"""Orchestration: dataset resolution, feature extraction, training,
evaluation, bundle persistence, and complexity accounting.

Training order: stratified train/test split on (class, SNR) -> per-frame RMS
normalization -> graph + statistical feature extraction -> auxiliary
importance selector -> band gate -> per-band LNT blocks and expert
classifiers. Every stage is deterministic for a fixed config, so two runs of
the same config produce byte-identical bundles.
"""

import pickle
import struct
import zlib
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from . import gbt
from .bands import SnrBands, default_bands
from .errors import (
    BundleCorruptError,
    BundleVersionError,
    ConfigError,
    DataError,
    GamcError,
)
from .frames import (
    Dataset,
    ModulationScheme,
    SynthConfig,
    load_dataset,
    normalize_frame,
    synthesize_dataset,
)
from .graphify import (
    BLOCK_SIZE,
    DEFAULT_K_SET,
    DEFAULT_LAMBDA_T,
    extract_graph_features,
    graph_feature_names,
)
from .lnt import DEFAULT_L2, DEFAULT_SIZES
from .router import (
    CQI_PARAMS,
    EXPERT_PARAMS,
    MoeModel,
    ensemble_predict,
    fit_cqi,
    fit_expert,
)
from .statfeat import DEFAULT_STAT, StatConfig, extract_stat_features, stat_feature_names

BUNDLE_MAGIC = b"GMCB"
BUNDLE_VERSION = 1
FEATURE_SETS = ("all", "graph", "stat")
CONFUSION_SNRS = (-20, 0, 18)


@contextmanager
def _stage(name):
    """Tag stage failures so CLI diagnostics point at the failing phase."""
    try:
        yield
    except GamcError as e:
        raise type(e)(f"[{name}] {e}") from e


@dataclass(frozen=True)
class SyntheticRecipe:
    """Recipe for a balanced synthetic dataset."""

    schemes: Tuple[str, ...]
    snrs_db: Tuple[int, ...]
    frames_per_cell: int = 100
    frame_len: int = 128
    seed: int = 0

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("recipe needs at least one scheme")
        for name in self.schemes:
            ModulationScheme.from_name(name)
        if not self.snrs_db:
            raise ConfigError("recipe needs at least one SNR")
        if self.frames_per_cell < 1:
            raise ConfigError("frames_per_cell must be >= 1")
        if self.frame_len < 4:
            raise ConfigError("frame_len must be >= 4")

    def build(self) -> Dataset:
        schemes = [ModulationScheme.from_name(n) for n in self.schemes]
        return synthesize_dataset(
            schemes, self.snrs_db, self.frames_per_cell, self.frame_len,
            SynthConfig(rng_seed=self.seed),
        )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a training run depends on; serialized into the bundle."""

    dataset_path: Optional[str] = None
    recipe: Optional[SyntheticRecipe] = None
    q: int = 3
    bands: Optional[Tuple[Tuple[float, float], ...]] = None
    k_set: Tuple[int, ...] = DEFAULT_K_SET
    lambda_t: float = DEFAULT_LAMBDA_T
    stat: StatConfig = field(default_factory=StatConfig)
    aux_params: gbt.TrainParams = EXPERT_PARAMS
    cqi_params: gbt.TrainParams = CQI_PARAMS
    expert_params: gbt.TrainParams = EXPERT_PARAMS
    sizes: Tuple[int, ...] = DEFAULT_SIZES
    folds: int = 5
    l2: float = DEFAULT_L2
    split_seed: int = 0
    train_fraction: float = 0.7
    feature_set: str = "all"
    use_lnt: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.q <= 5 and self.bands is None:
            raise ConfigError("q must lie in 1..5 (or provide explicit bands)")
        if self.bands is not None and len(self.bands) != self.q:
            raise ConfigError(
                f"q={self.q} disagrees with {len(self.bands)} explicit bands"
            )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.feature_set not in FEATURE_SETS:
            raise ConfigError(f"feature_set must be one of {FEATURE_SETS}")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")

    def resolved_bands(self) -> SnrBands:
        if self.bands is not None:
            return SnrBands(bands=self.bands)
        return default_bands(self.q)


@dataclass(frozen=True)
class GamcBundle:
    """Self-contained fitted pipeline; prediction needs no training data."""

    version: int
    config: PipelineConfig
    feature_names: Tuple[str, ...]
    class_names: Tuple[str, ...]
    selector: gbt.BoostedEnsemble
    moe: MoeModel
    holdout: np.ndarray


@dataclass(frozen=True)
class EvalReport:
    """Accuracy summaries plus confusion matrices (rows = true class)."""

    overall: float
    n_frames: int
    per_snr: Tuple[Tuple[float, float, int], ...]
    per_band: Tuple[Tuple[float, float, float, int], ...]
    confusion_overall: np.ndarray
    confusion_at: Dict[int, np.ndarray]
    class_names: Tuple[str, ...]

    def summary(self) -> str:
        lines = [f"frames evaluated: {self.n_frames}",
                 f"overall accuracy: {self.overall:.4f}", "", "per-SNR accuracy:"]
        for snr, acc, n in self.per_snr:
            lines.append(f"  {snr:+6.0f} dB  {acc:.4f}  (n={n})")
        lines.append("")
        lines.append("per-band accuracy:")
        for lo, hi, acc, n in self.per_band:
            lines.append(f"  [{lo:+.0f}, {hi:+.0f}] dB  {acc:.4f}  (n={n})")
        return "\n".join(lines)


@dataclass(frozen=True)
class ComplexityReport:
    """Parameter and per-frame FLOP accounting; total = exact sum of rows.

    Conventions: one multiply-add = 2 FLOPs; transcendental calls = 1 FLOP;
    dense symmetric eigendecomposition = (4/3) N^3; length-N FFT =
    5 N log2 N; sorting = N log2 N comparisons, 1 FLOP each. Tree parameters
    count 2 per internal node (feature id, threshold) and 1 per leaf; a tree
    evaluation costs its depth in comparisons. LNT parameters are
    (size + 1) * C and a projection costs 2 * size * C per subspace.
    """

    rows: Tuple[Tuple[str, float, float], ...]
    total_params: float
    total_flops: float

    def summary(self) -> str:
        lines = ["component          params(K)    flops(K)/frame"]
        for name, p, f in self.rows:
            lines.append(f"{name:<18} {p / 1e3:>9.1f} {f / 1e3:>15.1f}")
        lines.append(
            f"{'total':<18} {self.total_params / 1e3:>9.1f} "
            f"{self.total_flops / 1e3:>15.1f}"
        )
        return "\n".join(lines)


def resolve_dataset(cfg: PipelineConfig) -> Dataset:
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path)
    if cfg.recipe is not None:
        return cfg.recipe.build()
    raise ConfigError("config names neither a dataset path nor a recipe")


def feature_names_for(cfg: PipelineConfig) -> Tuple[str, ...]:
    names: Tuple[str, ...] = ()
    if cfg.feature_set in ("all", "graph"):
        names += graph_feature_names(cfg.k_set)
    if cfg.feature_set in ("all", "stat"):
        names += stat_feature_names(cfg.stat)
    return names


def extract_features(dataset: Dataset, cfg: PipelineConfig) -> np.ndarray:
    """Per-frame feature matrix in bundle column order (graph block first)."""
    rows = []
    for frame in dataset.frames:
        nf = normalize_frame(frame)
        parts = []
        if cfg.feature_set in ("all", "graph"):
            parts.append(extract_graph_features(nf, cfg.k_set, cfg.lambda_t))
        if cfg.feature_set in ("all", "stat"):
            parts.append(extract_stat_features(nf, cfg.stat))
        rows.append(np.concatenate(parts))
    return np.vstack(rows)


def _gate_dim(cfg: PipelineConfig, width: int) -> int:
    if cfg.feature_set == "all":
        return len(cfg.k_set) * 2 * BLOCK_SIZE
    return width


def stratified_split(labels, snrs, train_fraction, seed):
    """Disjoint train/test indices, stratified on (label, SNR) cells."""
    labels = np.asarray(labels)
    snrs = np.asarray(snrs)
    cells: Dict[tuple, list] = {}
    for i, key in enumerate(zip(labels.tolist(), snrs.tolist())):
        cells.setdefault(key, []).append(i)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for key in sorted(cells):
        idx = np.array(cells[key], dtype=np.int64)
        perm = idx[rng.permutation(idx.size)]
        if idx.size < 2:
            train.extend(perm.tolist())
            continue
        n_tr = min(max(int(round(idx.size * train_fraction)), 1), idx.size - 1)
        train.extend(perm[:n_tr].tolist())
        test.extend(perm[n_tr:].tolist())
    return np.array(sorted(train), dtype=np.int64), np.array(sorted(test), dtype=np.int64)


def _compact_labels(dataset: Dataset):
    names = tuple(sorted({f.label.canonical for f in dataset.frames}))
    lut = {n: i for i, n in enumerate(names)}
    y = np.array([lut[f.label.canonical] for f in dataset.frames], dtype=np.int64)
    return names, y


def train_pipeline(cfg: PipelineConfig, dataset: Optional[Dataset] = None,
                   features: Optional[np.ndarray] = None) -> GamcBundle:
    """Train the full pipeline; deterministic for a fixed config.

    `dataset`/`features` short-circuit dataset resolution and extraction
    (features must align with dataset rows and the config's feature layout).
    """
    with _stage("data"):
        ds = dataset if dataset is not None else resolve_dataset(cfg)
        if len(ds) == 0:
            raise DataError("training dataset is empty")
        class_names, y = _compact_labels(ds)
        snrs = ds.snrs()
        bands = cfg.resolved_bands()

    with _stage("split"):
        train_idx, _test_idx = stratified_split(
            y, snrs, cfg.train_fraction, cfg.split_seed
        )

    with _stage("features"):
        x = features if features is not None else extract_features(ds, cfg)
        x = np.asarray(x, dtype=np.float64)
        names = feature_names_for(cfg)
        if x.shape != (len(ds), len(names)):
            raise DataError(
                f"feature matrix {x.shape} does not match "
                f"({len(ds)}, {len(names)})"
            )
        gate_dim = _gate_dim(cfg, x.shape[1])

    xt, yt, st = x[train_idx], y[train_idx], snrs[train_idx]
    n_classes = len(class_names)

    with _stage("selector"):
        selector = gbt.fit(
            xt, yt, replace(cfg.aux_params, rng_seed=cfg.rng_seed),
            n_classes=n_classes,
        )
        importance = gbt.feature_importance(selector)

    with _stage("cqi"):
        cqi = fit_cqi(xt[:, :gate_dim], st, bands, cfg.cqi_params,
                      rng_seed=cfg.rng_seed)

    experts = []
    band_idx = np.array(bands.indices(st), dtype=np.int64)
    for b in range(len(bands)):
        with _stage(f"expert{b}"):
            rows = band_idx == b
            experts.append(
                fit_expert(
                    xt[rows], yt[rows], b, importance, n_classes,
                    params=cfg.expert_params, sizes=cfg.sizes,
                    folds=cfg.folds, l2=cfg.l2, rng_seed=cfg.rng_seed,
                    use_lnt=cfg.use_lnt,
                )
            )

    moe = MoeModel(cqi=cqi, experts=tuple(experts), class_names=class_names,
                   graph_dim=gate_dim)
    return GamcBundle(
        version=BUNDLE_VERSION,
        config=cfg,
        feature_names=names,
        class_names=class_names,
        selector=selector,
        moe=moe,
        holdout=_test_idx,
    )


def predict_dataset(bundle: GamcBundle, dataset: Dataset,
                    features: Optional[np.ndarray] = None) -> np.ndarray:
    """Class-probability matrix over bundle.class_names for every frame.

    The prediction path never reads frame SNR metadata; routing weights come
    from the gate's output on the extracted features alone.
    """
    x = features if features is not None else extract_features(dataset, bundle.config)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] != len(bundle.feature_names):
        raise DataError(
            f"feature width {x.shape[1]} does not match bundle "
            f"({len(bundle.feature_names)})"
        )
    return ensemble_predict(bundle.moe, x)


def evaluate(bundle: GamcBundle, dataset: Dataset,
             features: Optional[np.ndarray] = None) -> EvalReport:
    """Accuracy report on a labeled dataset."""
    if len(dataset) == 0:
        raise DataError("evaluation dataset is empty")
    lut = {n: i for i, n in enumerate(bundle.class_names)}
    for f in dataset.frames:
        if f.label.canonical not in lut:
            raise DataError(f"label {f.label.canonical!r} not in bundle table")
    y = np.array([lut[f.label.canonical] for f in dataset.frames], dtype=np.int64)
    snrs = dataset.snrs()

    proba = predict_dataset(bundle, dataset, features)
    pred = np.argmax(proba, axis=1)
    correct = pred == y
    c = len(bundle.class_names)

    per_snr = []
    for snr in np.unique(snrs):
        mask = snrs == snr
        per_snr.append((float(snr), float(correct[mask].mean()), int(mask.sum())))

    bands = bundle.moe.cqi.bands
    band_idx = np.array(bands.indices(snrs), dtype=np.int64)
    per_band = []
    for b, (lo, hi) in enumerate(bands):
        mask = band_idx == b
        if mask.any():
            per_band.append((lo, hi, float(correct[mask].mean()), int(mask.sum())))

    def confusion(mask):
        m = np.zeros((c, c), dtype=np.int64)
        np.add.at(m, (y[mask], pred[mask]), 1)
        return m

    confusion_at = {}
    for snr in CONFUSION_SNRS:
        mask = snrs == snr
        if mask.any():
            confusion_at[snr] = confusion(mask)

    return EvalReport(
        overall=float(correct.mean()),
        n_frames=len(dataset),
        per_snr=tuple(per_snr),
        per_band=tuple(per_band),
        confusion_overall=confusion(np.ones(len(dataset), dtype=bool)),
        confusion_at=confusion_at,
        class_names=bundle.class_names,
    )


def _tree_accounting(model: gbt.BoostedEnsemble):
    params = 0
    flops = 0
    for round_trees in model.trees:
        for tree in round_trees:
            internal = int(np.count_nonzero(~tree.is_leaf))
            leaves = tree.n_nodes - internal
            params += 2 * internal + leaves
            flops += tree.depth()
    return params, flops


def _extraction_flops(cfg: PipelineConfig) -> float:
    """Per-frame cost of the prediction-path feature extraction under the
    report's conventions (see ComplexityReport docstring)."""
    n = cfg.recipe.frame_len if cfg.recipe is not None else 128
    total = 0.0
    if cfg.feature_set in ("all", "graph"):
        for _metric in ("cartesian", "polar"):
            total += 6.0 * n * n          # pairwise squared distances
            total += n * n * np.log2(n)   # neighbor ordering
            for k in cfg.k_set:
                total += 5.0 * n * k      # kernel weights
                total += 3.0 * n * n      # combined adjacency + laplacian
                total += (4.0 / 3.0) * n**3  # eigendecomposition
                total += 6.0 * n          # spectral descriptors
    if cfg.feature_set in ("all", "stat"):
        total += 2 * 5.0 * n * np.log2(n)   # frame DFT (freq) + bispectrum DFT
        total += 2.5 * n * np.log2(n)       # phase-difference spectrum
        total += 12.0 * n                   # amplitude + 2-D histograms
        total += 10.0 * n                   # phase features
        total += 40.0 * n                   # cumulants
        total += 12.0 * n                   # bispectrum slice products
        total += 8.0 * n * len(cfg.stat.cyclic_alphas) * len(cfg.stat.cyclic_lags)
    return total


def complexity_report(bundle: GamcBundle) -> ComplexityReport:
    """Parameter/FLOP table over the prediction path (selector excluded)."""
    fe_flops = _extraction_flops(bundle.config)

    lnt_params = 0.0
    lnt_flops = 0.0
    moe_params = 0.0
    moe_flops = 0.0
    if bundle.moe.cqi.model is not None:
        p, f = _tree_accounting(bundle.moe.cqi.model)
        moe_params += p
        moe_flops += f
    for expert in bundle.moe.experts:
        if expert.lnt is not None:
            for entry in expert.lnt.entries:
                size = len(entry.indices)
                c = expert.lnt.n_classes
                lnt_params += (size + 1) * c
                lnt_flops += 2.0 * size * c
        p, f = _tree_accounting(expert.model)
        moe_params += p
        moe_flops += f

    rows = (
        ("feature_extraction", 0.0, fe_flops),
        ("lnt", lnt_params, lnt_flops),
        ("moe", moe_params, moe_flops),
    )
    return ComplexityReport(
        rows=rows,
        total_params=sum(r[1] for r in rows),
        total_flops=sum(r[2] for r in rows),
    )


def importance_table(bundle: GamcBundle) -> Tuple[Tuple[str, float], ...]:
    """(feature name, total gain) of the auxiliary selector, descending."""
    imp = gbt.feature_importance(bundle.selector)
    pairs = [(bundle.feature_names[i], g) for i, g in imp.items()]
    pairs.sort(key=lambda t: (-t[1], t[0]))
    return tuple(pairs)


def save_bundle(bundle: GamcBundle, path) -> None:
    """magic | u32 version | u64 length | pickle payload | u32 crc32."""
    payload = pickle.dumps(bundle, protocol=4)
    with open(path, "wb") as fh:
        fh.write(BUNDLE_MAGIC)
        fh.write(struct.pack("<I", BUNDLE_VERSION))
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_bundle(path) -> GamcBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != BUNDLE_MAGIC:
        raise BundleCorruptError(f"bad bundle magic {blob[:4]!r}")
    if len(blob) < 16:
        raise BundleCorruptError("bundle header truncated")
    (version,) = struct.unpack("<I", blob[4:8])
    if version != BUNDLE_VERSION:
        raise BundleVersionError(
            f"bundle version {version} unsupported; this build reads {BUNDLE_VERSION}"
        )
    (length,) = struct.unpack("<Q", blob[8:16])
    if len(blob) != 16 + length + 4:
        raise BundleCorruptError(
            f"bundle length mismatch: header says {length} payload bytes"
        )
    payload = blob[16 : 16 + length]
    (crc,) = struct.unpack("<I", blob[16 + length :])
    if zlib.crc32(payload) != crc:
        raise BundleCorruptError("bundle checksum mismatch")
    try:
        bundle = pickle.loads(payload)
    except Exception as e:
        raise BundleCorruptError(f"bundle payload undecodable: {e}") from e
    if not isinstance(bundle, GamcBundle):
        raise BundleCorruptError("bundle payload is not a model bundle")
    return bundle
