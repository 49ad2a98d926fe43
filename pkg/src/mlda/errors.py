"""Exception types shared across the library.

Every error raised on purpose by this package derives from ``MldaError``,
so callers can catch the whole family with one clause.
"""


class MldaError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(MldaError):
    """Malformed input: wrong shape, non-finite entries, empty matrix, ..."""


class RankDeficient(MldaError):
    """A full-column-rank matrix was required but not supplied."""


class MissingLabel(MldaError):
    """A label column has no positive sample (or zero marginal probability)."""


class UnlabeledSample(MldaError):
    """A sample row carries no label at all."""


class InvalidScheme(MldaError):
    """A label-generation scheme is internally inconsistent."""


class InvalidCovariance(MldaError):
    """A noise covariance is not symmetric positive (semi-)definite."""


class SingularTotalScatter(MldaError):
    """Total-scatter whitening was requested but the matrix is singular."""


class DegenerateNoise(MldaError):
    """A signal-to-noise quantity was requested with zero noise floor."""


class InvalidGap(MldaError):
    """A spectral gap must be positive for the requested bound."""


class NotConverged(MldaError):
    """An iterative solver hit its iteration cap.

    The last iterate is attached so callers can inspect how far it got.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(MldaError):
    """An experiment configuration is infeasible or malformed."""
