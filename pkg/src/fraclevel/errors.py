"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: validation problems (DomainError,
AdmissibilityError, UsageError) exit with 2, numerical failures with 3.
"""


class FraclevelError(Exception):
    """Base class for all package errors."""


class DomainError(FraclevelError, ValueError):
    """Input outside the mathematical domain of an operator."""


class AdmissibilityError(DomainError):
    """Parameter set violates a named admissibility constraint.

    The message always names the violated constraint, e.g.
    ``"rho + r_2 <= 2 violated"``.
    """

    def __init__(self, constraint: str, detail: str = ""):
        self.constraint = constraint
        msg = f"{constraint} violated"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UsageError(FraclevelError, ValueError):
    """API misuse: mismatched grids, bad indices, malformed input files."""


class NumericalFailureError(FraclevelError, ArithmeticError):
    """A numerical procedure could not reach the requested accuracy.

    Carries the best accuracy actually achieved so callers can decide
    whether the result is still usable.
    """

    def __init__(self, message: str, achieved: float = float("nan")):
        self.achieved = achieved
        super().__init__(f"{message} (achieved bound: {achieved:.3e})")


class IllPosedError(FraclevelError, ArithmeticError):
    """The inverse problem is ill-posed for the given data (e.g. a
    vanishing Mittag-Leffler denominator at some mode)."""
