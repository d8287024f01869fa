"""Exception types shared across the package."""


class FracapError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FracapError):
    """An evaluation point lies outside the admissible domain."""


class IntegrabilityError(FracapError):
    """A cutoff exponent is too small for the requested derivative order."""


class QuadratureError(FracapError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the achieved error estimate in ``achieved``.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class MissingDataError(FracapError):
    """A required derivative/initial value was not supplied."""


class TailError(FracapError):
    """A field lacks the decay model needed for a whole-line integral."""


class HypothesisError(FracapError):
    """A lemma/theorem hypothesis is violated; the message names the inequality."""


class AssumptionError(FracapError):
    """A transform assumption was falsified; carries a witness point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CertificateError(FracapError):
    """An operation demanded a certified transform and none was supplied."""


class CaseError(FracapError):
    """A bound refinement was requested outside the case it is derived for."""


class ConfigError(FracapError):
    """Run-configuration validation failure; the message names the field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
