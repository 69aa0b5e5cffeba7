"""Exception types shared across the package."""


class SparseSelectError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SparseSelectError, ValueError):
    pass


class ConstantColumn(SparseSelectError, ValueError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has zero empirical variance")


class LossMismatch(SparseSelectError, ValueError):
    pass


class MissingSigma(SparseSelectError, ValueError):
    pass


class InvalidDelta(SparseSelectError, ValueError):
    pass


class EmptySupport(SparseSelectError, ValueError):
    pass


class DOutOfRange(SparseSelectError, ValueError):
    pass


class InfeasibleDesign(SparseSelectError, ValueError):
    pass


class UnknownGuarantee(SparseSelectError, KeyError):
    pass
