"""Typed failures shared across the package."""


class DualwalkError(Exception):
    """Base class for package-specific failures."""


class LatticeSizeError(DualwalkError):
    """Lattice grew past the configured point cap."""


class EvaluationError(DualwalkError):
    """An expectation integrand was non-finite at a lattice atom."""


class BracketError(DualwalkError):
    """A root or minimum could not be bracketed."""


class NormalizationError(DualwalkError):
    """Utility is non-positive on the evaluation grid; shift it first."""


class NoMarginError(DualwalkError):
    """No grid point beats the Gaussian Laplace transform.

    Expected whenever the innovation's third moment is <= 0.
    """

    def __init__(self, message, best_lambda=None, best_margin=None):
        super().__init__(message)
        self.best_lambda = best_lambda
        self.best_margin = best_margin


class SearchFailure(DualwalkError):
    """A scheduled search exhausted its budget before meeting its target."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
