"""Exception hierarchy shared by all cavitas modules."""


class CavitasError(Exception):
    """Base class for all cavitas errors."""


class ParseError(CavitasError):
    """Configuration file is malformed (bad JSON, wrong schema version)."""


class UnitError(CavitasError):
    """A quantity string carries an unknown or inapplicable unit suffix."""


class ValidationError(CavitasError):
    """A physical invariant is violated; message names the offending field."""


class UnknownKey(CavitasError):
    """A CLI override references a key that does not exist in the config."""


class UnsupportedPolarization(CavitasError):
    """Coupling formulas require a trap polarization angle of zero."""


class StabilityError(CavitasError):
    """Time-domain integration diverged (dt too large or blue-detuned gain)."""


class InsufficientData(CavitasError):
    """Time series too short for the requested spectral estimate."""


class InsufficientPoints(CavitasError):
    """Too few data points for the requested fit."""


class DegenerateFit(CavitasError):
    """Jacobian rank-deficient at the optimum; uncertainties undefined."""


class NonFiniteModel(CavitasError):
    """Model evaluation produced a non-finite value during the search."""
