"""Exception types shared across the package."""


class NuhawkesError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(NuhawkesError, ValueError):
    """A constructor or operation received inputs violating an invariant."""


class InfiniteMean(NuhawkesError):
    """The kernel has no finite first moment; use the heavy-tail operations."""


class StepTooCoarse(NuhawkesError):
    """Grid step too large to resolve the kernel scale of the renewal solve."""


class ClampBudgetExceeded(NuhawkesError):
    """Too many negative round-off values clamped in a resolvent grid."""


class BoundViolation(NuhawkesError):
    """A thinning candidate exceeded its dominating bound (internal bug)."""


class GenerationOverflow(NuhawkesError):
    """A simulated path exceeded the configured event cap."""


class UnmarkedPath(NuhawkesError):
    """A bivariate operation received a path without +/- marks."""


class DegenerateEstimate(NuhawkesError):
    """CIR estimation produced a non-positive or singular fit."""


class OutOfRange(NuhawkesError):
    """A derived quantity left its admissible range."""
