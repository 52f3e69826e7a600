"""Exception types raised across the package."""


class FracwaveError(Exception):
    """Base class; ``details`` carries machine-readable context."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self), **self.details}


class GridMismatch(FracwaveError, ValueError):
    pass


class ParameterError(FracwaveError, ValueError):
    """An exponent gate or range condition on the model parameters failed."""


class NoRoot(FracwaveError):
    pass


class NonConvergence(FracwaveError):
    pass


class NegativeSeed(FracwaveError, ValueError):
    pass


class MassUnreachable(FracwaveError):
    pass


class ResidualTooLarge(FracwaveError):
    pass


class PerturbationNotInQc(FracwaveError):
    pass


class BoxTooSmall(FracwaveError, ValueError):
    pass


class ConfigError(FracwaveError, ValueError):
    pass
