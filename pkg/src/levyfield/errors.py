"""Shared exception types."""


class LevyFieldError(Exception):
    """Base class for all package errors."""


class DivergenceDetected(LevyFieldError):
    """An improper integral kept growing instead of flattening."""


class ToleranceNotMet(LevyFieldError):
    """Max cutoff reached with residual above the requested tolerance."""


class InconclusiveTrend(LevyFieldError):
    """A convergence/divergence trend test could not decide."""


class SymmetryRequired(LevyFieldError):
    """Operation defined only for symmetric exponents (Im psi = 0)."""


class ExistenceRequired(LevyFieldError):
    """Operation requires a finite existence integral (point masses admissible)."""


class TabulationRange(LevyFieldError):
    """Tabulated symbol evaluated outside its tabulated frequency range."""


class DegenerateSymbol(LevyFieldError):
    """Re psi vanishes on the whole probe tail; no index can be estimated."""


class StepTooCoarse(LevyFieldError):
    """Path simulation step too large for the requested ball radius."""


class InsufficientSeparations(LevyFieldError):
    """Not enough dyadic separations available for a regression."""


class RingingExcess(LevyFieldError):
    """Clipped negative mass of a synthesized density above tolerance."""


class NoConvergence(LevyFieldError):
    """Fixed-point iteration reached max_iter without contracting."""


class NumericalFailure(LevyFieldError):
    """A numerically required property (e.g. positive-definiteness) failed."""


class ConfigError(LevyFieldError):
    """Invalid experiment configuration."""
