"""Exception types shared across the package."""


class DgEtcError(Exception):
    """Base class for errors raised by this package."""


class DomainError(DgEtcError, ValueError):
    """A set or item index lies outside the ground set it is used with."""


class ParameterError(DgEtcError, ValueError):
    """A numeric parameter violates its documented range."""


class CapacityError(DgEtcError, ValueError):
    """An exact (enumerative) routine was asked for an instance that is too large."""


class StateError(DgEtcError, RuntimeError):
    """An algorithm was driven in a way its current state does not allow."""


class ConfigError(DgEtcError, ValueError):
    """An experiment or function configuration is invalid or incomplete."""


class InternalConsistencyError(DgEtcError, AssertionError):
    """Two computations that must agree did not."""
