"""Exception types raised across the package."""

from __future__ import annotations


class TugCouplingError(Exception):
    """Base class for all package errors."""


class SpacingTooCoarse(TugCouplingError, ValueError):
    pass


class DegenerateDomain(TugCouplingError, ValueError):
    pass


class NotInterior(TugCouplingError, ValueError):
    pass


class BadExponent(TugCouplingError, ValueError):
    pass


class MissingBoundaryData(TugCouplingError, ValueError):
    pass


class VanishingGradient(TugCouplingError, ValueError):
    pass


class NonTerminating(TugCouplingError, RuntimeError):
    """A simulated path exceeded its step cap."""


class DegenerateReflection(TugCouplingError, ValueError):
    pass


class NotUnit(TugCouplingError, ValueError):
    pass


class NotSymmetric(TugCouplingError, ValueError):
    pass


class CoincidentPoints(TugCouplingError, ValueError):
    pass


class DimensionMismatch(TugCouplingError, ValueError):
    pass


class PointsTooClose(TugCouplingError, ValueError):
    pass


class EmptyRegion(TugCouplingError, ValueError):
    pass


class NoBracket(TugCouplingError, ValueError):
    pass


class ConfigInvalid(TugCouplingError, ValueError):
    pass


class NotConverged(UserWarning):
    """Emitted (not raised) when an iteration stops at its cap."""
