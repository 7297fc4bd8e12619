"""Frame data model, synthetic signal generation, and the portable dataset format.

An IqFrame is one labeled observation: complex baseband samples plus a
modulation label and an SNR tag. Dataset frames are 128 samples long; the
library itself accepts any length >= 4.

Portable dataset container (binary, little-endian):

    magic "GAMC" | version u32 (=1) | label count u16
    per label: name length u16, UTF-8 bytes
    frame count u32 | frame length u32
    per frame: label index u8, snr_db i8,
               frame-length float32 I values, frame-length float32 Q values
"""

import enum
import struct
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    BadMagicError,
    DataError,
    DegenerateInputError,
    LabelIndexError,
    TruncatedError,
    VersionError,
)

MAGIC = b"GAMC"
FORMAT_VERSION = 1


class ModulationScheme(enum.Enum):
    """The 11 supported schemes; enum order is ascending lexicographic on the
    canonical name, which fixes the stable class index."""

    PSK8 = "8PSK"
    AM_DSB = "AM-DSB"
    AM_SSB = "AM-SSB"
    BPSK = "BPSK"
    CPFSK = "CPFSK"
    GFSK = "GFSK"
    PAM4 = "PAM4"
    QAM16 = "QAM16"
    QAM64 = "QAM64"
    QPSK = "QPSK"
    WBFM = "WBFM"

    @property
    def canonical(self) -> str:
        return self.value

    @property
    def index(self) -> int:
        return _SCHEME_ORDER[self]

    @classmethod
    def from_name(cls, name: str) -> "ModulationScheme":
        try:
            return cls(name)
        except ValueError:
            raise DataError(f"unknown modulation scheme name: {name!r}") from None

    @classmethod
    def from_index(cls, idx: int) -> "ModulationScheme":
        members = list(cls)
        if not 0 <= idx < len(members):
            raise DataError(f"modulation class index out of range: {idx}")
        return members[idx]


_SCHEME_ORDER = {m: i for i, m in enumerate(ModulationScheme)}
CLASS_NAMES = tuple(m.canonical for m in ModulationScheme)

assert CLASS_NAMES == tuple(sorted(CLASS_NAMES)), "enum must stay lexicographic"

DIGITAL_SCHEMES = (
    ModulationScheme.PSK8,
    ModulationScheme.BPSK,
    ModulationScheme.CPFSK,
    ModulationScheme.GFSK,
    ModulationScheme.PAM4,
    ModulationScheme.QAM16,
    ModulationScheme.QAM64,
    ModulationScheme.QPSK,
)
ANALOG_SCHEMES = (
    ModulationScheme.AM_DSB,
    ModulationScheme.AM_SSB,
    ModulationScheme.WBFM,
)


class ComplexSample(NamedTuple):
    """One I/Q sample."""

    i: float
    q: float


@dataclass(frozen=True)
class IqFrame:
    """One observation: complex samples plus label and SNR metadata.

    `samples` is stored as a read-only complex128 array. Frames are immutable
    after construction and safe to share across threads.
    """

    samples: np.ndarray
    label: Optional[ModulationScheme] = None
    snr_db: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise DataError("frame samples must be a 1-D sequence")
        if arr.size < 4:
            raise DataError(f"frame too short: {arr.size} samples (minimum 4)")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise DataError("frame contains non-finite samples")
        if not np.isfinite(self.snr_db):
            raise DataError("snr_db must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.samples.size

    def sample(self, n: int) -> ComplexSample:
        v = self.samples[n]
        return ComplexSample(float(v.real), float(v.imag))

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.samples) ** 2)))


@dataclass(frozen=True)
class Dataset:
    """A sequence of equal-length frames plus the label table they index into."""

    frames: tuple
    label_table: tuple = CLASS_NAMES
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "label_table", tuple(self.label_table))
        lengths = {len(f) for f in self.frames}
        if len(lengths) > 1:
            raise DataError(f"frames have mixed lengths: {sorted(lengths)}")
        for f in self.frames:
            if f.label is None:
                raise DataError("dataset frames must carry a label")
            if f.label.canonical not in self.label_table:
                raise DataError(f"label {f.label.canonical!r} not in label table")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def frame_length(self) -> int:
        return len(self.frames[0]) if self.frames else 0

    def label_indices(self) -> np.ndarray:
        lut = {name: i for i, name in enumerate(self.label_table)}
        return np.array([lut[f.label.canonical] for f in self.frames], dtype=np.int64)

    def snrs(self) -> np.ndarray:
        return np.array([f.snr_db for f in self.frames], dtype=np.float64)


@dataclass(frozen=True)
class AnalogSource:
    """Fixed tone mixture driving the analog schemes (frequencies in
    cycles/sample, equal power), plus the AM depth and FM deviation."""

    freqs: tuple = (0.01, 0.023, 0.037)
    am_depth: float = 0.5
    fm_deviation: float = 0.1

    def __post_init__(self):
        if any(not 0 < f < 0.5 for f in self.freqs):
            raise DataError("analog tone frequencies must lie in (0, 0.5) cycles/sample")


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs for synthetic frames."""

    samples_per_symbol: int = 8
    gfsk_cpfsk_modulation_index: float = 0.5
    gfsk_bt: float = 0.35
    analog_source: AnalogSource = field(default_factory=AnalogSource)
    rng_seed: int = 0

    def __post_init__(self):
        if self.samples_per_symbol < 2:
            raise DataError("samples_per_symbol must be >= 2")


DEFAULT_SYNTH = SynthConfig()


def constellation(scheme: ModulationScheme) -> np.ndarray:
    """Unit-average-power symbol alphabet of a digital scheme."""
    if scheme is ModulationScheme.BPSK:
        pts = np.array([1.0, -1.0], dtype=np.complex128)
    elif scheme is ModulationScheme.QPSK:
        pts = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
    elif scheme is ModulationScheme.PSK8:
        pts = np.exp(1j * (2 * np.pi / 8 * np.arange(8)))
    elif scheme is ModulationScheme.PAM4:
        pts = np.array([-3.0, -1.0, 1.0, 3.0], dtype=np.complex128)
    elif scheme is ModulationScheme.QAM16:
        lv = np.array([-3.0, -1.0, 1.0, 3.0])
        pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    elif scheme is ModulationScheme.QAM64:
        lv = np.array([-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0])
        pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    else:
        raise DataError(f"{scheme.canonical} has no symbol constellation")
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def _gaussian_window(bt: float, sps: int) -> np.ndarray:
    # Gaussian frequency pulse truncated at +/-2 symbols, unit sum.
    b = bt / sps
    sigma = np.sqrt(np.log(2.0)) / (2.0 * np.pi * b)
    m = np.arange(-2 * sps, 2 * sps + 1, dtype=np.float64)
    w = np.exp(-(m**2) / (2.0 * sigma**2))
    return w / w.sum()


def _tone_mixture(src: AnalogSource, n: int, rng: np.random.Generator) -> np.ndarray:
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(src.freqs))
    t = np.arange(n)
    m = np.zeros(n, dtype=np.float64)
    for f, ph in zip(src.freqs, phases):
        m += np.cos(2.0 * np.pi * f * t + ph)
    return m / np.sqrt(len(src.freqs) / 2.0)


def _clean_signal(scheme, n, cfg, rng) -> np.ndarray:
    sps = cfg.samples_per_symbol
    n_sym = -(-n // sps)
    if scheme in (ModulationScheme.GFSK, ModulationScheme.CPFSK):
        bits = rng.integers(0, 2, size=n_sym) * 2.0 - 1.0
        nrz = np.repeat(bits, sps)[:n]
        if scheme is ModulationScheme.GFSK:
            freq = np.convolve(nrz, _gaussian_window(cfg.gfsk_bt, sps), mode="same")
        else:
            freq = nrz
        h = cfg.gfsk_cpfsk_modulation_index
        phase = np.cumsum(np.pi * h / sps * freq)
        return np.exp(1j * phase)
    if scheme in (ModulationScheme.AM_DSB, ModulationScheme.AM_SSB, ModulationScheme.WBFM):
        src = cfg.analog_source
        if scheme is ModulationScheme.AM_SSB:
            # Upper sideband: analytic signal of the tone mixture.
            phases = rng.uniform(0.0, 2.0 * np.pi, size=len(src.freqs))
            t = np.arange(n)
            x = np.zeros(n, dtype=np.complex128)
            for f, ph in zip(src.freqs, phases):
                x += np.exp(1j * (2.0 * np.pi * f * t + ph))
            return x / np.sqrt(len(src.freqs))
        m = _tone_mixture(src, n, rng)
        if scheme is ModulationScheme.AM_DSB:
            env = 1.0 + src.am_depth * m
            return env.astype(np.complex128) / np.sqrt(1.0 + src.am_depth**2)
        phase = np.cumsum(2.0 * np.pi * src.fm_deviation * m)
        return np.exp(1j * phase)
    symbols = rng.choice(constellation(scheme), size=n_sym)
    return np.repeat(symbols, sps)[:n]


def synthesize_components(scheme, snr_db, n, cfg=DEFAULT_SYNTH, seed=0):
    """Return (clean, noise) for a synthetic frame.

    The clean signal is scaled to exactly unit empirical average power, so the
    realized SNR differs from `snr_db` only through the noise draw.
    """
    if not np.isfinite(snr_db):
        raise DataError("snr_db must be finite")
    if n < 4:
        raise DataError(f"frame length must be >= 4, got {n}")
    rng = np.random.default_rng(seed)
    clean = _clean_signal(scheme, n, cfg, rng)
    clean = clean / np.sqrt(np.mean(np.abs(clean) ** 2))
    noise_power = 10.0 ** (-snr_db / 10.0)
    noise = rng.normal(size=n) + 1j * rng.normal(size=n)
    noise *= np.sqrt(noise_power / 2.0)
    return clean, noise


def synthesize_frame(scheme, snr_db, n, cfg=DEFAULT_SYNTH, seed=0) -> IqFrame:
    """Generate one synthetic frame: unit-power clean signal plus AWGN.

    Deterministic for fixed (scheme, snr_db, n, cfg, seed).
    """
    clean, noise = synthesize_components(scheme, snr_db, n, cfg, seed)
    return IqFrame(samples=clean + noise, label=scheme, snr_db=snr_db)


def synthesize_dataset(
    schemes: Sequence[ModulationScheme],
    snrs_db: Sequence[int],
    frames_per_cell: int,
    n: int = 128,
    cfg: SynthConfig = DEFAULT_SYNTH,
) -> Dataset:
    """Balanced synthetic dataset: `frames_per_cell` frames per (scheme, SNR).

    Per-frame seeds derive from cfg.rng_seed and the cell coordinates, so the
    result is reproducible and insensitive to iteration order.
    """
    frames = []
    for scheme in sorted(schemes, key=lambda s: s.index):
        for snr in sorted(snrs_db):
            for j in range(frames_per_cell):
                ss = np.random.SeedSequence(
                    (cfg.rng_seed, scheme.index, int(snr) + 1000, j)
                )
                seed = int(ss.generate_state(1, dtype=np.uint64)[0])
                frames.append(synthesize_frame(scheme, snr, n, cfg, seed))
    return Dataset(frames=tuple(frames), provenance="synthetic")


def normalize_frame(frame: IqFrame) -> IqFrame:
    """Scale a frame to unit RMS amplitude. Phases, label and SNR are untouched."""
    r = frame.rms()
    if r <= 0.0:
        raise DegenerateInputError("cannot normalize an all-zero frame")
    return replace(frame, samples=frame.samples / r)


def _read_exact(fh, count, what):
    buf = fh.read(count)
    if len(buf) != count:
        raise TruncatedError(f"file truncated while reading {what}")
    return buf


def save_dataset(ds: Dataset, path) -> None:
    """Write the portable little-endian container described in the module docstring."""
    if len(ds.label_table) > 256:
        raise DataError("label table too large for u8 frame labels")
    lut = {name: i for i, name in enumerate(ds.label_table)}
    n_frames = len(ds.frames)
    frame_len = ds.frame_length
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<H", len(ds.label_table)))
        for name in ds.label_table:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(struct.pack("<II", n_frames, frame_len))
        for f in ds.frames:
            snr = int(round(f.snr_db))
            if snr != f.snr_db or not -128 <= snr <= 127:
                raise DataError(f"snr_db {f.snr_db} not storable as integer dB")
            fh.write(struct.pack("<Bb", lut[f.label.canonical], snr))
            fh.write(f.samples.real.astype("<f4").tobytes())
            fh.write(f.samples.imag.astype("<f4").tobytes())


def load_dataset(path) -> Dataset:
    """Read a portable dataset file; raises a distinct error per defect class."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FORMAT_VERSION:
            raise VersionError(
                f"unsupported dataset version {version}, this reader handles {FORMAT_VERSION}"
            )
        (n_labels,) = struct.unpack("<H", _read_exact(fh, 2, "label count"))
        names = []
        for _ in range(n_labels):
            (ln,) = struct.unpack("<H", _read_exact(fh, 2, "label length"))
            names.append(_read_exact(fh, ln, "label name").decode("utf-8"))
        n_frames, frame_len = struct.unpack("<II", _read_exact(fh, 8, "frame header"))
        frames = []
        for k in range(n_frames):
            label_idx, snr = struct.unpack("<Bb", _read_exact(fh, 2, f"frame {k} header"))
            if label_idx >= n_labels:
                raise LabelIndexError(
                    f"frame {k}: label index {label_idx} >= table size {n_labels}"
                )
            i_raw = _read_exact(fh, 4 * frame_len, f"frame {k} I samples")
            q_raw = _read_exact(fh, 4 * frame_len, f"frame {k} Q samples")
            iv = np.frombuffer(i_raw, dtype="<f4").astype(np.float64)
            qv = np.frombuffer(q_raw, dtype="<f4").astype(np.float64)
            frames.append(
                IqFrame(
                    samples=iv + 1j * qv,
                    label=ModulationScheme.from_name(names[label_idx]),
                    snr_db=float(snr),
                )
            )
    return Dataset(frames=tuple(frames), label_table=tuple(names), provenance=str(path))
