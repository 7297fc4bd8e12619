"""RadioML 2016.10A to portable GAMC dataset converter."""

from .convert import (
    ArchiveError,
    ConversionSummary,
    ConverterError,
    VerificationError,
    convert,
    verify,
)

__all__ = [
    "ArchiveError",
    "ConversionSummary",
    "ConverterError",
    "VerificationError",
    "convert",
    "verify",
]
