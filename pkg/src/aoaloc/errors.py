"""Exception types shared across the package."""


class LocalizationError(Exception):
    """Base class for all algorithmic errors raised by this package."""


class DegenerateRange(LocalizationError):
    """Source and receiver (nearly) coincide; polar Jacobian is singular."""


class InfeasibleBearing(LocalizationError):
    """A local bearing lies outside the antenna's feasible cone [-pi/2, pi/2]."""


class DegenerateBootstrap(LocalizationError):
    """Bootstrap pair bearings are too close to parallel/antiparallel."""


class NoViablePair(LocalizationError):
    """No measurement pair satisfies the bootstrap separation criterion."""


class SingularCovariance(LocalizationError):
    """A covariance matrix required to be invertible is (near) singular."""


class SingularInformation(LocalizationError):
    """Fisher information is singular (fewer than two distinct bearings)."""


class InvalidAlpha(LocalizationError):
    """Outlier fraction outside the open interval (0, 1)."""


class AllRunsPruned(LocalizationError):
    """Every randomized suppression run was pruned or degenerate."""


class SourceOutsideField(LocalizationError):
    """Scenario source placed outside the receiver field disc."""


class ParseError(LocalizationError):
    """Configuration document could not be parsed."""


class ValidationError(LocalizationError):
    """Configuration value out of range or missing; message names the key."""
