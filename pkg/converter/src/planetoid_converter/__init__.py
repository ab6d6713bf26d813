"""Raw citation-release to text-bundle converter."""

from .convert import (
    KNOWN_STATS,
    ConversionError,
    DatasetStats,
    RawRelease,
    convert,
    load_release,
    validate_stats,
)

__all__ = [
    "KNOWN_STATS",
    "ConversionError",
    "DatasetStats",
    "RawRelease",
    "convert",
    "load_release",
    "validate_stats",
]
