"""errors.py — Exception hierarchy shared by the library, harness and CLI."""


class LmoError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(LmoError, ValueError):
    """Operands have incompatible shapes, or a geometry does not accept the shape."""


class NonFiniteError(LmoError, FloatingPointError):
    def __init__(self, quantity: str, message: str | None = None):
        self.quantity = quantity
        super().__init__(message or f"non-finite values in {quantity}")


class SvdConvergenceError(LmoError, ArithmeticError):
    """The dense SVD routine did not converge."""


class ParamsError(LmoError, ValueError):
    """Hyperparameters violate an invariant of UnifiedParams or a MethodClass."""


class ConfigError(LmoError, ValueError):
    def __init__(self, message: str, field: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}, column {column}")
        prefix = f"[{'; '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class RunError(LmoError, RuntimeError):
    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
