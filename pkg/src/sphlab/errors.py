"""Exception and warning types shared across sphlab."""


class SphlabError(Exception):
    """Base class for all sphlab errors."""


class EvaluationDomainError(SphlabError):
    pass


class DegenerateFunctionError(SphlabError):
    pass


class UnknownFamilyError(SphlabError):
    pass


class BudgetExceededError(SphlabError):
    """Adaptive quadrature ran out of cells; ``partial`` holds the unconverged result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateTargetError(SphlabError):
    pass


class ResolutionTooLowError(SphlabError):
    pass


class AreaBoundViolatedError(SphlabError):
    pass


class InsufficientMeasureError(SphlabError):
    pass


class DegenerateSetError(SphlabError):
    pass


class ScheduleTooShortError(SphlabError):
    pass


class NotConcentratedError(SphlabError):
    pass


class NotQuasiNormalError(SphlabError):
    """The flagged set is not a finite point set (e.g. a curve of non-normality).

    ``flagged`` is the boolean cell mask, ``exponents`` the growth-exponent grid,
    ``clusters`` a list of index arrays, ``grid`` the (xs, ys) cell centres.
    """

    def __init__(self, message, flagged=None, exponents=None, clusters=None, grid=None):
        super().__init__(message)
        self.flagged = flagged
        self.exponents = exponents
        self.clusters = clusters or []
        self.grid = grid


class OutsideDiskError(SphlabError):
    pass


class ParameterRangeError(SphlabError):
    pass


class HypothesisViolatedError(SphlabError):
    pass


class CriticalPointError(SphlabError):
    """Raised where f^# vanishes (log undefined); ``nodes`` lists (i, j) grid indices."""

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = nodes if nodes is not None else []


class NewtonDivergedError(SphlabError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BoundaryRootWarning(UserWarning):
    pass


class DerivativeMismatchWarning(UserWarning):
    pass
