"""Exception hierarchy shared by all modules."""


class UnidiscError(Exception):
    """Base class for library errors."""


class SizeLimitError(UnidiscError):
    """A dictionary or frequency grid would exceed the configured size cap."""


class CombinatorialLimitError(UnidiscError):
    """Exhaustive enumeration over supports would exceed the configured cap."""


class ConditioningError(UnidiscError):
    """A Gram matrix is singular or not positive semidefinite within tolerance."""


class DomainMismatchError(UnidiscError):
    pass


class UnsupportedModeError(UnidiscError):
    pass


class DegenerateDictionaryError(UnidiscError):
    """Every column of the sample matrix has zero discrete norm."""


class CoverageError(UnidiscError):
    """The frequency grid does not contain the blocks an algorithm needs."""


class InternalInconsistencyError(UnidiscError):
    """A guaranteed mathematical property failed to hold numerically."""
