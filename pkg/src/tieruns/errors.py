"""Exception hierarchy."""


class TierunsError(ValueError):
    """Base class for invalid input to the package."""


class DegenerateDataError(TierunsError):
    """The data cannot support a runs test (one sign class, no points)."""


class ZeroResidualError(DegenerateDataError):
    """A residual is exactly zero and the zero policy forbids it."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ExactLimitError(TierunsError):
    """Sample too large for the exact runs distribution."""


class RankDeficientError(TierunsError):
    """The least-squares design matrix does not have full column rank."""
