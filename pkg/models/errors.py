"""
Error Types
===========
Named errors raised by the operator kernel. Every error carries the name shown
in reports (``code``) and the process exit code used by the command line.
"""


class PsdoError(Exception):
    """Base class for all kernel errors."""

    code = "PsdoError"
    exit_code = 1

    def __init__(self, message=""):
        super().__init__(message or self.code)
        self.message = message or self.code

    def to_dict(self):
        """
        Serialize the error for a report.

        Returns:
            dict: error name and message
        """
        return {"error": self.code, "message": self.message}


class UsageError(PsdoError):
    """Errors caused by the caller's input rather than by the mathematics."""

    code = "UsageError"
    exit_code = 2


# Arithmetic


class DimensionMismatch(PsdoError):
    code = "DimensionMismatch"


class ZeroSeries(PsdoError):
    code = "ZeroSeries"


class NotAUnit(PsdoError):
    code = "NotAUnit"


class ResidueObstruction(PsdoError):
    code = "ResidueObstruction"


class ExponentNotDivisible(PsdoError):
    code = "ExponentNotDivisible"


class CoefficientNotAPower(PsdoError):
    code = "CoefficientNotAPower"


class WindowTooSmall(PsdoError):
    code = "WindowTooSmall"


class ZeroOperator(PsdoError):
    code = "ZeroOperator"


class NotInvertibleInE(PsdoError):
    code = "NotInvertibleInE"


# Conjugacy


class NotCommuting(PsdoError):
    code = "NotCommuting"


class WrongForm(PsdoError):
    code = "WrongForm"


class IntegrationObstruction(PsdoError):
    code = "IntegrationObstruction"


class NotInCentralizer(PsdoError):
    code = "NotInCentralizer"


class OrderMismatch(PsdoError):
    code = "OrderMismatch"


class WrongNormalForm(PsdoError):
    code = "WrongNormalForm"


# Hierarchy and brackets


class ConstraintNotSatisfied(PsdoError):
    code = "ConstraintNotSatisfied"


class HypothesisFailed(PsdoError):
    code = "HypothesisFailed"


# Input


class ConfigError(UsageError):
    code = "ConfigError"


class ExpressionSyntaxError(UsageError):
    """Malformed operator expression, positioned by line and column."""

    code = "SyntaxError"

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column

    def to_dict(self):
        data = super().to_dict()
        data.update({"line": self.line, "column": self.column})
        return data


class UnknownVariable(UsageError):
    code = "UnknownVariable"


class ExponentOverflow(UsageError):
    code = "ExponentOverflow"
