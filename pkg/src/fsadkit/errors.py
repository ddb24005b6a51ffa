"""Exception types shared across the package.

Each class names one failure mode; the CLI maps them onto its exit-code
contract (see cli.py).
"""


class FsadkitError(Exception):
    """Base class for all package-specific errors."""


class NotFoundError(FsadkitError):
    """A required path (dataset root, checkpoint, results dir) is missing."""


class SchemaViolationError(FsadkitError):
    """On-disk data or records do not follow the documented layout."""


class InvalidSpecError(FsadkitError):
    """A synthetic-dataset or episode spec fails its invariants."""


class InvalidInputError(FsadkitError):
    """An operation received an argument outside its domain."""


class InsufficientDataError(FsadkitError):
    """Not enough samples to perform the requested operation."""


class DecodeError(FsadkitError):
    """An image file could not be decoded."""


class ConfigError(FsadkitError):
    """Invalid or inconsistent configuration."""


class NumericalError(FsadkitError):
    """A non-finite value appeared where finiteness is required."""


class ShapeError(FsadkitError):
    """Tensor shapes do not match the operation's contract."""


class OracleError(FsadkitError):
    """A verification oracle's own preconditions were violated."""


class UndefinedMetricError(FsadkitError):
    """A metric is undefined for the given input (e.g. single-class AUROC)."""
