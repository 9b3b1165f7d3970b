"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of an analytic function (e.g. MGF abscissa)."""


class RegimeError(ValueError):
    """Model is in a regime where the requested quantity is not defined or infinite."""


class ConfigError(ValueError):
    """Inconsistent estimator configuration."""


class BudgetError(RuntimeError):
    """A Monte Carlo or certification budget was exhausted."""


class RejectionBudgetError(BudgetError):
    """Acceptance rate of a rejection sampler fell below its floor."""


class GridError(ValueError):
    """Query outside the range covered by a tabulated grid."""


class NoHitsError(RuntimeError):
    """No replica produced the conditioning event."""


class ResonanceWarning(UserWarning):
    """Laplace inversion contour had to be moved away from a pole."""


class FallbackWarning(UserWarning):
    """An estimator dispatched to a different method than requested."""
