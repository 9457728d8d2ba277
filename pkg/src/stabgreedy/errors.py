"""Exception types raised by the package."""


class StabGreedyError(Exception):
    """Base class for all package errors."""


class UnsupportedDerivative(StabGreedyError, ValueError):
    """The kernel is not differentiable to the requested order at this radius."""


class RejectionBudgetExceeded(StabGreedyError, RuntimeError):
    pass


class EmptySet(StabGreedyError, ValueError):
    pass


class TooFewPoints(StabGreedyError, ValueError):
    pass


class DuplicatePoints(StabGreedyError, ValueError):
    """Two points of a center or candidate set coincide."""


DuplicateCandidates = DuplicatePoints


class DimensionMismatch(StabGreedyError, ValueError):
    pass


class NumericallySingular(StabGreedyError, ArithmeticError):
    """A pivot (squared Power value or Cholesky diagonal) fell below the floor."""


class AllPowerZero(StabGreedyError, ArithmeticError):
    """The Power function vanishes on every candidate, so no point is admissible."""


EmptyRestrictedSet = AllPowerZero


class NotSPD(StabGreedyError, ArithmeticError):
    pass


class NonPositiveValue(StabGreedyError, ValueError):
    pass


class WindowOutOfRange(StabGreedyError, ValueError):
    pass


class ConfigError(StabGreedyError, ValueError):
    pass
