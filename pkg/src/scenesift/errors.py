"""Exception types shared by the pipeline, store, and service layers."""


class ScenesiftError(Exception):
    """Base class for all scenesift errors."""


class ManifestError(ScenesiftError):
    """Manifest document violates the schema; message names the field path."""


class OrderingError(ScenesiftError):
    """Frame records are out of order, duplicated, or non-contiguous."""


class DimensionError(ScenesiftError):
    """A vector length does not match the layout or model dimension."""


class DataError(ScenesiftError):
    """Input contains non-finite or otherwise unusable values."""


class InsufficientDataError(ScenesiftError):
    """Too few frames (or warmup vectors) for the requested operation."""


class NotNormalizedError(ScenesiftError):
    """Scoring requires a normalized stream; the flag is absent."""


class ParameterError(ScenesiftError):
    """An operation parameter is out of its valid range."""


class EmptyReportError(ScenesiftError):
    """A report was requested from a series with no scored windows."""


class ConflictError(ScenesiftError):
    """A session with this id already exists."""


class NotFoundError(ScenesiftError):
    """Unknown session id, or the session has no video."""


class NotReadyError(ScenesiftError):
    """The session exists but has not finished (or failed) scoring."""


class InvalidRangeError(ScenesiftError):
    """A byte-range request is malformed or outside the file."""
