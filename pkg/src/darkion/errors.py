"""Exception types shared across the package."""


class DarkIonError(Exception):
    """Base class for all package errors."""


class InvalidInputError(DarkIonError, ValueError):
    """A parameter is outside its admissible domain."""


class UnsupportedRegimeError(DarkIonError, ValueError):
    """The inputs are valid physics but outside the modelled regime (e.g. m1 < m2)."""


class ContractError(DarkIonError, ValueError):
    """Operands do not match (ordering tags, basis tags, grid axes, dimensions)."""


class InvalidStateError(DarkIonError, ValueError):
    """A state violates hermiticity, normalisation or the uncertainty principle."""


class CutoffError(DarkIonError):
    """The Fock cutoff is too small for the requested operation."""


class ResolutionError(DarkIonError):
    """A quadrature grid is too coarse or too narrow for the requested accuracy."""


class InversionError(DarkIonError):
    """Population inversion from a sideband signal is ill-posed."""


class TruncationWarning(UserWarning):
    """Population above the fitted Fock range was detected."""
