"""
Learning-to-Rank Generalization Workbench
Exception and warning types shared by every subpackage
"""

# =============================================================================
# Core Module: Errors
# =============================================================================


class WorkbenchError(Exception):
    """Base class for all workbench errors"""


class ShapeError(WorkbenchError, ValueError):
    """Array shapes or dimensions do not agree"""


class NonFiniteError(WorkbenchError, ValueError):
    """An input contains NaN or infinite entries"""


class EmptyDatasetError(WorkbenchError, ValueError):
    """A dataset with no query instances was supplied"""


class UnsupportedOperationError(WorkbenchError):
    """The operation is not defined for this loss kind"""


class NonConvexLossError(WorkbenchError, ValueError):
    """A trainer that needs a convex surrogate received a non-convex one"""


class InapplicableBoundError(WorkbenchError):
    """The bound formula does not apply to this hypothesis class"""


class BoundDomainError(WorkbenchError, ValueError):
    """A closed-form bound is evaluated outside the range where it is valid"""


class DudleyDivergenceError(WorkbenchError, ValueError):
    """The entropy integral diverges at its lower limit"""


class ConfigError(WorkbenchError, ValueError):
    """Invalid or incomplete configuration"""


class LetorFormatError(WorkbenchError, ValueError):
    """Malformed line in a LETOR / SVMlight ranking file"""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class GuaranteeWarning(UserWarning):
    """A run proceeds although the theory backing it does not apply"""
