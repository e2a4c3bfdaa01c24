"""Exception types shared across the package."""


class EigengradError(Exception):
    """Base class for all errors raised by this package."""


class NonSquareError(EigengradError, ValueError):
    pass


class NonFiniteError(EigengradError, ValueError):
    pass


class DimensionMismatch(EigengradError, ValueError):
    pass


class NotPositiveDefinite(EigengradError):
    pass


class ConvergenceFailure(EigengradError):
    pass


class MaxIterExceeded(ConvergenceFailure):
    """Iteration budget exhausted; `payload` carries the best iterate."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class NotSolvable(EigengradError):
    """Right-hand side has a component in the nullspace of the shifted pencil."""

    def __init__(self, column, defect):
        super().__init__(
            f"column {column}: RHS nullspace component {defect:.3e} exceeds tolerance"
        )
        self.column = column
        self.defect = defect


class ValidityViolated(EigengradError):
    """A degeneracy validity condition does not hold for the given input."""

    def __init__(self, defect, message=None):
        super().__init__(message or f"validity condition violated, defect {defect:.3e}")
        self.defect = defect


class GaugeAlignmentFailed(EigengradError):
    pass


class ClusterSplit(EigengradError):
    """A degenerate group separated under perturbation; per-column FD is meaningless."""


class InvalidSpec(EigengradError, ValueError):
    pass
