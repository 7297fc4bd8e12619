"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
anything else -> 4.
"""


class GamcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(GamcError):
    """Invalid configuration value or malformed config file."""


class DataError(GamcError):
    """Problem with input data (dataset files, frames, labels)."""


class DegenerateInputError(DataError):
    """Input is formally valid but carries no usable signal (e.g. all-zero frame)."""


class DatasetFormatError(DataError):
    """Portable dataset file violates the container format."""


class BadMagicError(DatasetFormatError):
    """File does not start with the expected magic bytes."""


class VersionError(DatasetFormatError):
    """Container format version is not supported."""


class TruncatedError(DatasetFormatError):
    """File ends before the payload announced in the header."""


class LabelIndexError(DatasetFormatError):
    """A frame references a label index outside the label table."""


class DegenerateGraphError(GamcError):
    """Graph construction produced an isolated node (zero degree)."""


class BundleError(GamcError):
    """Model bundle file is corrupt or has an incompatible version."""


class BundleVersionError(BundleError):
    """Bundle was written by an unsupported format version."""


class BundleCorruptError(BundleError):
    """Bundle bytes fail integrity checks (magic, length, or checksum)."""
