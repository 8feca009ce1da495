"""Exception hierarchy.

Each error class carries an ``exit_status`` used by the command line
front end: 2 for degenerate or invalid physics input, 3 for numerical
nonconvergence, 4 for I/O problems.
"""


class LandauDosError(Exception):
    """Base class for all package errors."""

    exit_status = 2
    kind = "error"


class DomainError(LandauDosError, ValueError):
    kind = "domain"


class UnsupportedOperationError(LandauDosError):
    kind = "unsupported_operation"


class UnsupportedModelError(LandauDosError):
    kind = "unsupported_model"


class PositivityViolationError(LandauDosError):
    kind = "positivity_violation"


class DegenerateBandError(LandauDosError):
    kind = "degenerate_band"


class ConfigError(LandauDosError):
    kind = "config"


class QuadratureError(LandauDosError):
    exit_status = 3
    kind = "quadrature_nonconvergence"


class NonConvergenceError(LandauDosError):
    exit_status = 3
    kind = "nonconvergence"


class NoCertifiedSupError(LandauDosError):
    exit_status = 3
    kind = "no_certified_sup"


class FactorizationError(LandauDosError):
    exit_status = 3
    kind = "factorization"


class EigensolverError(LandauDosError):
    exit_status = 3
    kind = "eigensolver"

    def __init__(self, message, realization_index=None):
        super().__init__(message)
        self.realization_index = realization_index


class MissingInputError(LandauDosError):
    exit_status = 4
    kind = "missing_input"
