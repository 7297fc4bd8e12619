"""Convert the RadioML 2016.10A archive into the portable GAMC container.

The archive is a pickle of {(modulation name, SNR): float32 array of shape
(n_frames, 2, frame_len)} with I samples in row 0 and Q samples in row 1.
Modulation names may be str or bytes and SNR keys may be integers or strings
depending on the release; both forms are accepted and the kind seen is
recorded in the summary.

The output container (little-endian) matches the GAMC dataset format:

    magic "GAMC" | version u32 (=1) | label count u16
    per label: name length u16, UTF-8 bytes
    frame count u32 | frame length u32
    per frame: label index u8, snr_db i8,
               frame-length float32 I values, frame-length float32 Q values

Frames are emitted ordered by (class index, SNR ascending, original array
order), one (class, SNR) cell at a time. Samples are written bit-exactly, so
float32 input round-trips losslessly and the output byte stream is a pure
function of the archive contents.
"""

import hashlib
import pickle
import struct
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

MAGIC = b"GAMC"
FORMAT_VERSION = 1
SNR_MIN, SNR_MAX = -20, 18

# Canonical label table of the GAMC format: ascending lexicographic, and the
# label index stored per frame is the position in this table.
CANONICAL_CLASSES = (
    "8PSK", "AM-DSB", "AM-SSB", "BPSK", "CPFSK", "GFSK",
    "PAM4", "QAM16", "QAM64", "QPSK", "WBFM",
)
_CLASS_INDEX = {name.upper(): i for i, name in enumerate(CANONICAL_CLASSES)}

# Fields of the summary that describe the emitted file itself; verification
# compares exactly these. The SNR key kind is a property of the source
# archive, not of the file, so it is excluded.
_FILE_FIELDS = ("frame_count", "class_names", "snr_levels", "per_cell", "checksum")


class ConverterError(Exception):
    """Base error for this package."""


class ArchiveError(ConverterError):
    """The input archive is unreadable or violates the expected structure."""


class VerificationError(ConverterError):
    """A converted file disagrees with its header or an expected summary."""

    def __init__(self, mismatches):
        self.mismatches = tuple(mismatches)
        super().__init__("; ".join(self.mismatches))


@dataclass(frozen=True)
class ConversionSummary:
    """What was converted: counts per cell plus a whole-file checksum."""

    frame_count: int
    class_names: Tuple[str, ...]
    snr_levels: Tuple[int, ...]
    per_cell: Tuple[Tuple[str, int, int], ...]
    checksum: str
    snr_key_kind: str

    def cell_count(self, class_name: str, snr_db: int) -> int:
        for name, snr, count in self.per_cell:
            if name == class_name and snr == snr_db:
                return count
        return 0


def _canonical_name(key) -> str:
    if isinstance(key, bytes):
        try:
            key = key.decode("utf-8")
        except UnicodeDecodeError:
            key = key.decode("latin1")
    if not isinstance(key, str):
        raise ArchiveError(f"modulation name {key!r} is not a string")
    name = key.strip()
    idx = _CLASS_INDEX.get(name.upper())
    if idx is None:
        raise ArchiveError(
            f"unknown modulation name {name!r}; expected one of {CANONICAL_CLASSES}"
        )
    return CANONICAL_CLASSES[idx]


def _parse_snr(key) -> Tuple[int, str]:
    """Return (snr value, key kind); kind is 'int' or 'str'."""
    if isinstance(key, bytes):
        key = key.decode("latin1")
    if isinstance(key, str):
        try:
            return int(key.strip()), "str"
        except ValueError:
            raise ArchiveError(f"SNR key {key!r} is not an integer") from None
    if isinstance(key, (bool, np.bool_)):
        raise ArchiveError(f"SNR key {key!r} is not an integer")
    if isinstance(key, (int, np.integer)):
        return int(key), "int"
    if isinstance(key, (float, np.floating)) and float(key).is_integer():
        return int(key), "int"
    raise ArchiveError(f"SNR key {key!r} is not an integer")


def _validated_cell(name: str, snr: int, value) -> np.ndarray:
    arr = np.asarray(value)
    if arr.ndim != 3 or arr.shape[1] != 2 or arr.shape[0] < 1 or arr.shape[2] < 4:
        raise ArchiveError(
            f"cell ({name}, {snr}): expected shape (n, 2, len>=4), got {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise ArchiveError(f"cell ({name}, {snr}): non-finite samples")
    return arr.astype("<f4", copy=False)


def _load_archive(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = pickle.load(fh, encoding="latin1")
    except OSError:
        raise
    except Exception as e:
        raise ArchiveError(f"cannot unpickle archive {path}: {e}") from None
    if not isinstance(raw, dict):
        raise ArchiveError(f"archive root is {type(raw).__name__}, expected dict")
    return raw


class _HashingWriter:
    def __init__(self, fh):
        self.fh = fh
        self.sha = hashlib.sha256()

    def write(self, data: bytes) -> None:
        self.fh.write(data)
        self.sha.update(data)


def convert(input_path, output_path) -> ConversionSummary:
    """Convert one archive; returns the summary describing the written file."""
    raw = _load_archive(input_path)

    cells: Dict[Tuple[int, int], np.ndarray] = {}
    kinds = set()
    frame_len = None
    for key, value in raw.items():
        if not isinstance(key, tuple) or len(key) != 2:
            raise ArchiveError(f"archive key {key!r} is not a (name, snr) pair")
        name = _canonical_name(key[0])
        snr, kind = _parse_snr(key[1])
        kinds.add(kind)
        if not SNR_MIN <= snr <= SNR_MAX:
            raise ArchiveError(
                f"cell ({name}, {snr}): SNR outside [{SNR_MIN}, {SNR_MAX}] dB"
            )
        arr = _validated_cell(name, snr, value)
        if frame_len is None:
            frame_len = arr.shape[2]
        elif arr.shape[2] != frame_len:
            raise ArchiveError(
                f"cell ({name}, {snr}): frame length {arr.shape[2]} != {frame_len}"
            )
        cell = (_CLASS_INDEX[name.upper()], snr)
        if cell in cells:
            raise ArchiveError(f"duplicate cell ({name}, {snr}) after normalization")
        cells[cell] = arr
    if not cells:
        raise ArchiveError("archive holds no cells")

    order = sorted(cells)
    n_frames = sum(cells[c].shape[0] for c in order)
    if n_frames > 0xFFFFFFFF:
        raise ArchiveError(f"{n_frames} frames exceed the u32 frame count field")

    with open(output_path, "wb") as fh:
        out = _HashingWriter(fh)
        out.write(MAGIC)
        out.write(struct.pack("<I", FORMAT_VERSION))
        out.write(struct.pack("<H", len(CANONICAL_CLASSES)))
        for cname in CANONICAL_CLASSES:
            enc = cname.encode("utf-8")
            out.write(struct.pack("<H", len(enc)))
            out.write(enc)
        out.write(struct.pack("<II", n_frames, frame_len))
        for class_idx, snr in order:
            arr = cells[(class_idx, snr)]
            head = struct.pack("<Bb", class_idx, snr)
            for i in range(arr.shape[0]):
                out.write(head)
                out.write(arr[i, 0].tobytes())
                out.write(arr[i, 1].tobytes())

    return ConversionSummary(
        frame_count=n_frames,
        class_names=tuple(CANONICAL_CLASSES[c] for c in sorted({c for c, _ in order})),
        snr_levels=tuple(sorted({s for _, s in order})),
        per_cell=tuple(
            (CANONICAL_CLASSES[c], s, int(cells[(c, s)].shape[0])) for c, s in order
        ),
        checksum="sha256:" + out.sha.hexdigest(),
        snr_key_kind="mixed" if len(kinds) > 1 else kinds.pop(),
    )


def _file_checksum(path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            sha.update(chunk)
    return "sha256:" + sha.hexdigest()


def _parse_portable(path) -> ConversionSummary:
    """Stream the container, checking header claims against actual content."""
    problems = []
    counts: Dict[Tuple[int, int], int] = {}
    with open(path, "rb") as fh:
        def need(nbytes, what):
            buf = fh.read(nbytes)
            if len(buf) != nbytes:
                raise VerificationError([f"truncated while reading {what}"])
            return buf

        magic = fh.read(4)
        if magic != MAGIC:
            raise VerificationError([f"bad magic {magic!r}, expected {MAGIC!r}"])
        (version,) = struct.unpack("<I", need(4, "version"))
        if version != FORMAT_VERSION:
            raise VerificationError([f"unsupported format version {version}"])
        (n_labels,) = struct.unpack("<H", need(2, "label count"))
        table = []
        for _ in range(n_labels):
            (ln,) = struct.unpack("<H", need(2, "label length"))
            table.append(need(ln, "label name").decode("utf-8"))
        claimed, frame_len = struct.unpack("<II", need(8, "frame header"))

        record = 2 + 8 * frame_len
        parsed = 0
        while parsed < claimed:
            buf = fh.read(record)
            if len(buf) < record:
                problems.append(
                    f"frame_count: header claims {claimed}, file holds {parsed}"
                    + (" plus a partial record" if buf else "")
                )
                break
            label_idx, snr = struct.unpack_from("<Bb", buf)
            if label_idx >= n_labels:
                problems.append(
                    f"frame {parsed}: label index {label_idx} >= table size {n_labels}"
                )
                break
            counts[(label_idx, snr)] = counts.get((label_idx, snr), 0) + 1
            parsed += 1
        else:
            trailing = len(fh.read(1))
            if trailing:
                problems.append(f"trailing data after the last of {claimed} frames")
    if problems:
        raise VerificationError(problems)

    order = sorted(counts)
    return ConversionSummary(
        frame_count=parsed,
        class_names=tuple(table[c] for c in sorted({c for c, _ in order})),
        snr_levels=tuple(sorted({s for _, s in order})),
        per_cell=tuple((table[c], s, counts[(c, s)]) for c, s in order),
        checksum=_file_checksum(path),
        snr_key_kind="int",
    )


def verify(path, expected: Optional[ConversionSummary] = None) -> ConversionSummary:
    """Re-parse a converted file and recompute its summary.

    Header claims are always checked against the actual records. When
    `expected` is given (normally the summary returned by convert), every
    file-describing field is compared and all mismatches are reported
    together.
    """
    actual = _parse_portable(path)
    if expected is not None:
        mismatches = [
            f"{field}: expected {getattr(expected, field)!r}, "
            f"got {getattr(actual, field)!r}"
            for field in _FILE_FIELDS
            if getattr(expected, field) != getattr(actual, field)
        ]
        if mismatches:
            raise VerificationError(mismatches)
    return actual
