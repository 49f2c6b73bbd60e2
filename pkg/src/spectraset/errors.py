"""Exception hierarchy; the CLI maps these onto exit codes."""


class SpectrasetError(Exception):
    pass


class InvalidInputError(SpectrasetError, ValueError):
    """Malformed, non-commuting, or non-contractive input (exit code 2)."""


class NonConvergenceError(SpectrasetError, ArithmeticError):
    """A strong limit did not settle within the doubling budget (exit code 3)."""

    def __init__(self, message: str, last_delta: float):
        super().__init__(message)
        self.last_delta = last_delta


class HypothesisError(SpectrasetError):
    """A structural hypothesis of a decomposition scheme fails beyond tolerance."""


class UnsolvableError(SpectrasetError):
    """A fundamental-operator equation has no solution on the defect space."""

    def __init__(self, message: str, off_defect_residual: float):
        super().__init__(message)
        self.off_defect_residual = off_defect_residual


class NumericalAnomalyError(SpectrasetError):
    """A result that finite dimension rules out (e.g. a nonzero shift part)."""
