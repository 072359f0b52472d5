"""Exception hierarchy shared by all solver modules."""


class ActiveFluxError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(ActiveFluxError, ValueError):
    """Bad grid, model, operator, or initial-condition specification."""


class DomainError(ActiveFluxError, ValueError):
    """Evaluation point lies outside the region where data is defined."""


class CFLViolation(ActiveFluxError, ValueError):
    """Time step or CFL number exceeds the stability bound."""


class InadmissibleState(ActiveFluxError, ValueError):
    """A state left the model's admissible region (e.g. h <= 0)."""


class ReferenceUnavailable(ActiveFluxError):
    """No exact reference solution exists for the requested case."""


class StagnationError(ActiveFluxError, RuntimeError):
    """Time loop stopped making progress."""
