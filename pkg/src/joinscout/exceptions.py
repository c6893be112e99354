"""Exception and warning types shared across the package."""

from __future__ import annotations


class JoinscoutError(Exception):
    """Base class for errors raised by this package."""


class ParseError(JoinscoutError):
    """A delimited file violates the expected tabular structure."""


class ProfilingError(JoinscoutError):
    """A column cannot be summarized into an attribute profile."""


class IndexingError(JoinscoutError):
    """Indexing a repository yielded no usable attribute profiles."""


class UnknownAttributeError(JoinscoutError):
    """A query names an attribute that is not present in the store."""


class LayoutMismatchError(JoinscoutError):
    """Vector layout versions of two artifacts do not agree."""


class ModelFormatError(JoinscoutError):
    """A persisted model file is malformed or has an unsupported version."""


class TrainingDivergenceError(JoinscoutError):
    """Optimization produced a non-finite loss."""


class ClampedValueWarning(UserWarning):
    """An evaluation point fell outside the supported interval and was clamped."""


class DegenerateFitWarning(UserWarning):
    """A fitted scale parameter landed on the smallest value of the search grid."""
