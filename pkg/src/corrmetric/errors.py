"""Exception hierarchy shared by every corrmetric module."""


class CorrMetricError(ValueError):
    """Base class for all library errors."""


class ZeroVariance(CorrMetricError):
    """A sample is constant, so its correlation with anything is undefined."""

    def __init__(self, message, sample_id=None):
        super().__init__(message)
        self.sample_id = sample_id


class DimensionMismatch(CorrMetricError):
    pass


class DomainError(CorrMetricError):
    pass


class Infeasible(CorrMetricError):
    """An angle triple cannot be realized by three unit vectors."""


class DimensionTooSmall(CorrMetricError):
    pass
