"""Exception hierarchy shared by all toolkit modules."""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class InputError(ToolkitError):
    """Malformed or inconsistent input (shapes, parameters, off-grid times)."""


class HorizonError(ToolkitError):
    """An index or window falls off the end of the time grid."""


class DomainError(ToolkitError):
    """Evaluation hit the -inf boundary of an objective where a finite value is required."""


class UnsupportedError(ToolkitError):
    """Operation not defined for this time-domain kind or objective order."""


class NumericalError(ToolkitError):
    """Numerical failure: singular Jacobian, no valid step, NaN, budget exceeded."""


class ExprSyntaxError(InputError):
    """Lexing or parsing failure in the expression DSL; carries a byte position."""

    def __init__(self, message, pos=None):
        super().__init__(message if pos is None else f"{message} (at position {pos})")
        self.pos = pos


class EvalError(NumericalError):
    """Runtime failure evaluating a DSL expression (division by zero, NaN)."""
