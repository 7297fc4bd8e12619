"""Spatio-temporal graph construction and Laplacian spectral features.

Each frame becomes a family of graphs: one node per sample, spatial k-NN
edges weighted by a Gaussian kernel under either a Cartesian or a polar
metric, plus a chronological chain of temporal edges. Features are read off
the spectrum of the symmetric normalized Laplacian of the combined graph.

Kernel bandwidth is adaptive: per graph, sigma is the median of the selected
k-NN distances (floored at 1e-6), which makes the construction insensitive
to overall frame scale once frames are RMS-normalized.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DegenerateGraphError
from .frames import IqFrame

DEFAULT_K_SET = (4, 8, 16, 32)
DEFAULT_LAMBDA_T = 50.0
METRICS = ("cartesian", "polar")
SIGMA_FLOOR = 1e-6

# Per-block descriptor layout. The raw head skips the first eigenvalue of a
# connected graph (always ~0, carries no information).
BLOCK_DESCRIPTORS = (
    "entropy",
    "mean",
    "var",
    "skew",
    "lam1",
    "lam2",
    "lam_ratio",
    "max_gap",
    "raw2",
    "raw3",
    "raw4",
    "raw5",
    "raw6",
    "raw7",
    "raw8",
    "raw_m4",
    "raw_m3",
    "raw_m2",
    "raw_m1",
)
BLOCK_SIZE = len(BLOCK_DESCRIPTORS)


class ConstellationPoint(NamedTuple):
    """One sample in both Cartesian and polar coordinates."""

    i: float
    q: float
    a: float
    phi: float


@dataclass(frozen=True)
class GraphConfig:
    """Construction knobs for one spatio-temporal graph."""

    k: int = 8
    metric: str = "cartesian"
    lambda_t: float = DEFAULT_LAMBDA_T
    sigma_rule: str = "median"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"neighbor count k must be >= 1, got {self.k}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not np.isfinite(self.lambda_t) or self.lambda_t < 0:
            raise ConfigError("lambda_t must be finite and >= 0")
        if self.sigma_rule != "median":
            raise ConfigError(f"unknown sigma_rule {self.sigma_rule!r}")


@dataclass(frozen=True)
class StGraph:
    """A built spatio-temporal graph and its Laplacian spectrum."""

    a_s: np.ndarray
    a_t: np.ndarray
    a_st: np.ndarray
    d_st: np.ndarray
    laplacian: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class SpectralBlock:
    """Spectral descriptors of one graph; `degenerate` marks spectra with
    fewer than two eigenvalues above the zero threshold."""

    values: np.ndarray
    degenerate: bool


def _wrap_phase(phi: np.ndarray) -> np.ndarray:
    # arctan2 lands in [-pi, pi]; move the -pi edge to +pi for (-pi, pi].
    phi = np.where(phi <= -np.pi, phi + 2.0 * np.pi, phi)
    return phi


def to_polar(frame: IqFrame) -> list:
    """Per-sample Cartesian plus (amplitude, phase) view of a frame."""
    x = frame.samples
    a = np.abs(x)
    phi = _wrap_phase(np.angle(x))
    return [
        ConstellationPoint(float(xi.real), float(xi.imag), float(ai), float(pi_))
        for xi, ai, pi_ in zip(x, a, phi)
    ]


def _coerce_points(points):
    """Accept complex samples, an IqFrame, or ConstellationPoint sequences."""
    if isinstance(points, IqFrame):
        x = points.samples
    else:
        first = points[0] if len(points) else None
        if isinstance(first, ConstellationPoint):
            x = np.array([complex(p.i, p.q) for p in points])
        else:
            x = np.asarray(points, dtype=np.complex128)
    a = np.abs(x)
    phi = _wrap_phase(np.angle(x))
    return x, a, phi


def _pairwise_sq(x, a, phi, metric):
    """Squared pairwise distances with +inf on the diagonal."""
    if metric == "cartesian":
        di = x.real[:, None] - x.real[None, :]
        dq = x.imag[:, None] - x.imag[None, :]
        d2 = di * di + dq * dq
    else:
        da = a[:, None] - a[None, :]
        dphi = phi[:, None] - phi[None, :]
        dphi = np.mod(dphi + np.pi, 2.0 * np.pi) - np.pi
        d2 = da * da + dphi * dphi
    np.fill_diagonal(d2, np.inf)
    return d2


def _knn_selection(d2, k):
    """Directed k-NN per row; exact distance ties resolved by lower index."""
    order = np.argsort(d2, axis=1, kind="stable")
    nbrs = order[:, :k]
    rows = np.repeat(np.arange(d2.shape[0]), k)
    sel = d2[rows, nbrs.ravel()]
    return rows, nbrs.ravel(), sel


def _median_sigma(sel_sq):
    return max(float(np.median(np.sqrt(sel_sq))), SIGMA_FLOOR)


def _spatial_from_selection(n, rows, cols, sel_sq, sigma):
    w = np.exp(-sel_sq / (sigma * sigma))
    directed = np.zeros((n, n))
    directed[rows, cols] = w
    a_s = np.maximum(directed, directed.T)
    np.fill_diagonal(a_s, 0.0)
    return a_s


def knn_spatial_adjacency(points, k: int, metric: str, sigma: float) -> np.ndarray:
    """Symmetrized Gaussian-kernel k-NN adjacency over the samples.

    Symmetrization is the elementwise maximum of the directed matrix and its
    transpose, so weights stay in [0, 1] and mutual edges are kept.
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    if sigma <= 0:
        raise ConfigError(f"sigma must be > 0, got {sigma}")
    x, a, phi = _coerce_points(points)
    n = x.size
    if k >= n:
        raise ConfigError(f"k={k} must be smaller than the node count {n}")
    d2 = _pairwise_sq(x, a, phi, metric)
    rows, cols, sel = _knn_selection(d2, k)
    return _spatial_from_selection(n, rows, cols, sel, sigma)


def temporal_adjacency(n: int) -> np.ndarray:
    """Chronological chain: a_t(i, j) = 1 iff |i - j| = 1."""
    if n < 2:
        raise ConfigError(f"temporal chain needs at least 2 nodes, got {n}")
    a_t = np.zeros((n, n))
    idx = np.arange(n - 1)
    a_t[idx, idx + 1] = 1.0
    a_t[idx + 1, idx] = 1.0
    return a_t


def _laplacian_from_a_st(a_st):
    d_st = a_st.sum(axis=1)
    if np.any(d_st <= 0.0):
        raise DegenerateGraphError(
            "isolated node: zero combined degree (no spatial edges and lambda_t = 0)"
        )
    inv_sqrt = 1.0 / np.sqrt(d_st)
    lap = -(inv_sqrt[:, None] * a_st * inv_sqrt[None, :])
    np.fill_diagonal(lap, lap.diagonal() + 1.0)
    lap = 0.5 * (lap + lap.T)
    return d_st, lap


def _clamp_eigs(eigs):
    return np.where((eigs < 0.0) & (eigs > -1e-8), 0.0, eigs)


def spectral_pipeline(frame: IqFrame, cfg: GraphConfig) -> StGraph:
    """Build the combined graph for one (k, metric) setting and diagonalize it."""
    x, a, phi = _coerce_points(frame)
    n = x.size
    if cfg.k >= n:
        raise ConfigError(f"k={cfg.k} must be smaller than the frame length {n}")
    d2 = _pairwise_sq(x, a, phi, cfg.metric)
    rows, cols, sel = _knn_selection(d2, cfg.k)
    sigma = _median_sigma(sel)
    a_s = _spatial_from_selection(n, rows, cols, sel, sigma)
    a_t = temporal_adjacency(n)
    a_st = a_s + cfg.lambda_t * a_t
    d_st, lap = _laplacian_from_a_st(a_st)
    eigs = _clamp_eigs(np.linalg.eigvalsh(lap))
    return StGraph(a_s=a_s, a_t=a_t, a_st=a_st, d_st=d_st, laplacian=lap, eigenvalues=eigs)


def spectral_features(graph) -> SpectralBlock:
    """Summarize a Laplacian spectrum into the fixed per-block descriptor set.

    Accepts an StGraph or a raw ascending eigenvalue array. When fewer than
    two eigenvalues exceed the zero threshold, the lam1/lam2/ratio slots are
    zeroed and the block is flagged degenerate; the remaining descriptors are
    still well defined and computed normally.
    """
    eigs = graph.eigenvalues if isinstance(graph, StGraph) else np.asarray(graph, float)
    total = eigs.sum()
    if total <= 0.0:
        raise DegenerateGraphError("spectrum sums to zero; empty graph")

    p = eigs / total
    nz = p > 0.0
    entropy = float(-(p[nz] * np.log(p[nz])).sum())
    mean = float(eigs.mean())
    var = float(eigs.var())
    std = np.sqrt(var)
    skew = float(((eigs - mean) ** 3).mean() / std**3) if std >= 1e-12 else 0.0
    gaps = np.diff(eigs)
    max_gap = float(gaps.max()) if gaps.size else 0.0

    nonzero = eigs[eigs > 1e-8]
    degenerate = nonzero.size < 2
    if degenerate:
        lam1 = lam2 = ratio = 0.0
    else:
        lam1 = float(nonzero[0])
        lam2 = float(nonzero[1])
        ratio = lam2 / lam1

    head = eigs[1:8]
    head = np.pad(head, (0, 7 - head.size)) if head.size < 7 else head
    tail = eigs[-4:]
    tail = np.pad(tail, (4 - tail.size, 0)) if tail.size < 4 else tail

    values = np.concatenate(
        [[entropy, mean, var, skew, lam1, lam2, ratio, max_gap], head, tail]
    )
    return SpectralBlock(values=values, degenerate=degenerate)


def extract_graph_features(
    frame: IqFrame,
    k_set: Sequence[int] = DEFAULT_K_SET,
    lambda_t: float = DEFAULT_LAMBDA_T,
) -> np.ndarray:
    """Concatenated spectral blocks over k (ascending) x metric (cartesian,
    polar): len(k_set) * 2 blocks of BLOCK_SIZE values each.

    The pairwise distance matrix and its neighbor ordering are shared across
    the k sweep for each metric, and all Laplacians are diagonalized in one
    batched call; results match per-graph spectral_pipeline exactly.
    """
    ks = tuple(sorted(set(int(k) for k in k_set)))
    if not ks:
        raise ConfigError("k_set must be non-empty")
    x, a, phi = _coerce_points(frame)
    n = x.size
    if ks[-1] >= n:
        raise ConfigError(f"max k={ks[-1]} must be smaller than the frame length {n}")

    a_t = temporal_adjacency(n)
    laps = {}
    for metric in METRICS:
        d2 = _pairwise_sq(x, a, phi, metric)
        order = np.argsort(d2, axis=1, kind="stable")
        rows_full = np.arange(n)
        for k in ks:
            nbrs = order[:, :k]
            rows = np.repeat(rows_full, k)
            cols = nbrs.ravel()
            sel = d2[rows, cols]
            sigma = _median_sigma(sel)
            a_s = _spatial_from_selection(n, rows, cols, sel, sigma)
            a_st = a_s + lambda_t * a_t
            _, lap = _laplacian_from_a_st(a_st)
            laps[(k, metric)] = lap

    block_order = [(k, metric) for k in ks for metric in METRICS]
    stacked = np.stack([laps[key] for key in block_order])
    eig_all = _clamp_eigs(np.linalg.eigvalsh(stacked))
    segments = [spectral_features(eig_all[i]).values for i in range(len(block_order))]
    return np.concatenate(segments)


def graph_feature_names(k_set: Sequence[int] = DEFAULT_K_SET) -> Tuple[str, ...]:
    """Names aligned with extract_graph_features output order."""
    ks = tuple(sorted(set(int(k) for k in k_set)))
    names = []
    for k in ks:
        for metric in METRICS:
            for desc in BLOCK_DESCRIPTORS:
                names.append(f"g.{metric}.k{k}.{desc}")
    return tuple(names)
