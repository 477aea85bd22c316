"""Exception types raised by the library."""


class ModelError(ValueError):
    """Invalid model parameters or an input outside an operation's domain."""


class ConvergenceError(ArithmeticError):
    """A numerical procedure did not reach its tolerance.

    ``partial`` carries whatever partial result the procedure had produced
    when it gave up (may be ``None``).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
