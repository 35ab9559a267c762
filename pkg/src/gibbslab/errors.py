"""Exception types shared across gibbslab."""


class GibbsLabError(Exception):
    """Base class for all gibbslab errors."""


class PreconditionError(GibbsLabError, ValueError):
    """A documented mathematical precondition of an operation is violated."""


class DimensionMismatchError(GibbsLabError, ValueError):
    """Matrix-valued operands have incompatible shapes."""


class ConvergenceError(GibbsLabError, RuntimeError):
    """An iterative computation stopped before reaching its tolerance.

    The last observed residual is kept on the instance so callers can
    report how far the iteration got.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual
