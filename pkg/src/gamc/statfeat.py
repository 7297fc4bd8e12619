"""Statistical feature bank: amplitude, phase, frequency, higher-order
cumulant, bispectral, and cyclostationary descriptors of one frame.

All families assume a unit-RMS frame (see normalize_frame); none of them
re-normalize. Histogram families are probability masses and sum to 1; every
output is finite for any finite input.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigError
from .frames import IqFrame

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class StatConfig:
    """Bin layouts and descriptor grids for the statistical families."""

    amp_bins: int = 32
    amp_range: Tuple[float, float] = (0.0, 4.0)
    cdf_quantiles: Tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 0.9)
    tail_thresholds: Tuple[float, ...] = (1.5, 2.0, 2.5)
    iq2d_bins: int = 8
    iq2d_limit: float = 3.0
    phase_diff_bins: int = 32
    rotational_orders: Tuple[int, ...] = (2, 4, 8)
    phase_spec_bands: int = 8
    logmag_bins: int = 32
    bispec_bins: int = 16
    cyclic_alphas: Tuple[float, ...] = (0.125, 0.25, 0.5)
    cyclic_lags: Tuple[int, ...] = (1, 2, 4)

    def __post_init__(self):
        for name in ("amp_bins", "iq2d_bins", "phase_diff_bins", "logmag_bins",
                     "bispec_bins", "phase_spec_bands"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be >= 2")
        if any(t <= 0 for t in self.tail_thresholds):
            raise ConfigError("tail thresholds must be positive")
        if any(not 0 < q < 1 for q in self.cdf_quantiles):
            raise ConfigError("cdf quantiles must lie in (0, 1)")
        if any(lag < 1 for lag in self.cyclic_lags):
            raise ConfigError("cyclic lags must be >= 1")


DEFAULT_STAT = StatConfig()


def _wrap_pi(values):
    # Wrap into (-pi, pi].
    out = np.mod(values + np.pi, TWO_PI) - np.pi
    return np.where(out <= -np.pi, out + TWO_PI, out)


def amplitude_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """Amplitude histogram, CDF quantiles, tail rates, and the flattened 8x8
    I/Q occupancy histogram. Out-of-range samples are clipped to edge bins so
    every histogram keeps total mass 1."""
    x = frame.samples
    n = x.size
    a = np.abs(x)
    lo, hi = cfg.amp_range
    hist, _ = np.histogram(np.clip(a, lo, hi), bins=cfg.amp_bins, range=(lo, hi))
    amp_hist = hist / n
    quants = np.quantile(a, cfg.cdf_quantiles)
    tails = np.array([np.mean(a > t) for t in cfg.tail_thresholds])
    lim = cfg.iq2d_limit
    i = np.clip(x.real, -lim, lim)
    q = np.clip(x.imag, -lim, lim)
    edges = np.linspace(-lim, lim, cfg.iq2d_bins + 1)
    h2, _, _ = np.histogram2d(i, q, bins=(edges, edges))
    return np.concatenate([amp_hist, quants, tails, h2.ravel() / n])


def phase_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """Circular concentration, rotational moments, and phase-difference
    descriptors (histogram, circular mean/variance, coarse band energies)."""
    x = frame.samples
    phi = np.angle(x)
    r = np.abs(np.mean(np.exp(1j * phi)))
    moments = np.array([np.abs(np.mean(x**k)) for k in cfg.rotational_orders])

    dtheta = _wrap_pi(np.diff(phi))
    hist, _ = np.histogram(dtheta, bins=cfg.phase_diff_bins, range=(-np.pi, np.pi))
    d_hist = hist / max(dtheta.size, 1)
    resultant = np.mean(np.exp(1j * dtheta)) if dtheta.size else 1.0 + 0j
    circ_mean = float(np.angle(resultant))
    circ_var = float(1.0 - np.abs(resultant))

    spec = np.abs(np.fft.rfft(dtheta)) ** 2
    bands = np.array([seg.sum() for seg in np.array_split(spec, cfg.phase_spec_bands)])
    return np.concatenate([[r], moments, d_hist, [circ_mean, circ_var], bands])


def frequency_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """Log-magnitude spectrum histogram, PAPR of the power spectrum, and
    spectral entropy."""
    spec = np.fft.fft(frame.samples)
    power = np.abs(spec) ** 2
    logmag = np.log(np.abs(spec) + 1e-12)
    lo, hi = float(logmag.min()), float(logmag.max())
    if hi - lo < 1e-12:
        hi = lo + 1.0
    hist, _ = np.histogram(logmag, bins=cfg.logmag_bins, range=(lo, hi))
    lm_hist = hist / logmag.size

    total = power.sum()
    if total > 0.0:
        papr = float(power.max() / power.mean())
        p = power / total
        nz = p > 0.0
        entropy = float(-(p[nz] * np.log(p[nz])).sum())
    else:
        papr = 0.0
        entropy = 0.0
    return np.concatenate([lm_hist, [papr, entropy]])


def cumulant_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """Sample higher-order cumulants under the zero-mean identities.

    Emits magnitudes of C20, C21, C40, C41, C42, C63 followed by the real and
    imaginary parts of C20 and C40.
    """
    x = frame.samples
    xc = np.conj(x)
    m20 = np.mean(x * x)
    m21 = float(np.mean((x * xc).real))
    m40 = np.mean(x**4)
    m41 = np.mean(x**3 * xc)
    m42 = float(np.mean((x * xc).real ** 2))
    m63 = float(np.mean((x * xc).real ** 3))

    c20 = m20
    c21 = m21
    c40 = m40 - 3.0 * m20 * m20
    c41 = m41 - 3.0 * m20 * m21
    c42 = m42 - np.abs(m20) ** 2 - 2.0 * m21**2
    c63 = m63 - 9.0 * m42 * m21 + 12.0 * np.abs(m20) ** 2 * m21 + 12.0 * m21**3
    return np.array(
        [
            np.abs(c20), np.abs(c21), np.abs(c40), np.abs(c41), np.abs(c42), np.abs(c63),
            c20.real, c20.imag, c40.real, c40.imag,
        ]
    )


def bispectrum_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """Diagonal bispectrum slice |X(f)^2 X*(2f)| averaged into coarse bins and
    normalized by the 3/2 power of the total spectral energy."""
    spec = np.fft.fft(frame.samples)
    n = spec.size
    doubled = spec[(2 * np.arange(n)) % n]
    slice_mag = np.abs(spec * spec * np.conj(doubled))
    total = float((np.abs(spec) ** 2).sum())
    denom = total**1.5 if total > 0.0 else 1.0
    bins = np.array([seg.mean() for seg in np.array_split(slice_mag, cfg.bispec_bins)])
    return bins / denom


def cyclo_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """|cyclic autocorrelation| on the (alpha, lag) grid; the lagged product
    runs over valid sample pairs only, with a fixed 1/N normalization."""
    x = frame.samples
    n = x.size
    out = np.empty(len(cfg.cyclic_alphas) * len(cfg.cyclic_lags))
    pos = 0
    for alpha in cfg.cyclic_alphas:
        for lag in cfg.cyclic_lags:
            if lag >= n:
                raise ConfigError(f"cyclic lag {lag} too large for frame length {n}")
            idx = np.arange(lag, n)
            prod = x[lag:] * np.conj(x[:-lag]) * np.exp(-1j * TWO_PI * alpha * idx)
            out[pos] = np.abs(prod.sum()) / n
            pos += 1
    return out


def extract_stat_features(frame: IqFrame, cfg: StatConfig = DEFAULT_STAT) -> np.ndarray:
    """All statistical families concatenated in fixed order; the layout is a
    pure function of cfg (see stat_feature_names)."""
    return np.concatenate(
        [
            amplitude_features(frame, cfg),
            phase_features(frame, cfg),
            frequency_features(frame, cfg),
            cumulant_features(frame, cfg),
            bispectrum_features(frame, cfg),
            cyclo_features(frame, cfg),
        ]
    )


def stat_feature_names(cfg: StatConfig = DEFAULT_STAT) -> Tuple[str, ...]:
    """Names aligned with extract_stat_features output order."""
    names = []
    names += [f"s.amp.hist{b}" for b in range(cfg.amp_bins)]
    names += [f"s.amp.q{int(round(q * 100))}" for q in cfg.cdf_quantiles]
    names += [f"s.amp.tail{t}" for t in cfg.tail_thresholds]
    names += [
        f"s.iq2d.b{r}_{c}"
        for r in range(cfg.iq2d_bins)
        for c in range(cfg.iq2d_bins)
    ]
    names += ["s.phase.r"]
    names += [f"s.phase.m{k}" for k in cfg.rotational_orders]
    names += [f"s.phase.dhist{b}" for b in range(cfg.phase_diff_bins)]
    names += ["s.phase.dmean", "s.phase.dvar"]
    names += [f"s.phase.dband{b}" for b in range(cfg.phase_spec_bands)]
    names += [f"s.freq.lmhist{b}" for b in range(cfg.logmag_bins)]
    names += ["s.freq.papr", "s.freq.entropy"]
    names += [
        "s.hoc.c20_abs", "s.hoc.c21_abs", "s.hoc.c40_abs", "s.hoc.c41_abs",
        "s.hoc.c42_abs", "s.hoc.c63_abs",
        "s.hoc.c20_re", "s.hoc.c20_im", "s.hoc.c40_re", "s.hoc.c40_im",
    ]
    names += [f"s.bispec.b{b}" for b in range(cfg.bispec_bins)]
    names += [
        f"s.cyclo.a{alpha}_t{lag}"
        for alpha in cfg.cyclic_alphas
        for lag in cfg.cyclic_lags
    ]
    return tuple(names)


def stat_family_slices(cfg: StatConfig = DEFAULT_STAT) -> dict:
    """Contiguous index ranges of each family inside the stat vector."""
    sizes = {
        "amp": cfg.amp_bins + len(cfg.cdf_quantiles) + len(cfg.tail_thresholds),
        "iq2d": cfg.iq2d_bins * cfg.iq2d_bins,
        "phase": 1 + len(cfg.rotational_orders) + cfg.phase_diff_bins + 2
        + cfg.phase_spec_bands,
        "freq": cfg.logmag_bins + 2,
        "hoc": 10,
        "bispec": cfg.bispec_bins,
        "cyclo": len(cfg.cyclic_alphas) * len(cfg.cyclic_lags),
    }
    out = {}
    start = 0
    for family, size in sizes.items():
        out[family] = slice(start, start + size)
        start += size
    return out
