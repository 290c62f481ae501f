"""Exception and warning types raised across the package."""


class MomentLDPError(Exception):
    """Base class for all package errors."""


class SingularInput(MomentLDPError):
    """A group element is singular or too badly conditioned to factor."""


class NotAState(MomentLDPError):
    """A matrix fails the density-matrix checks (Hermitian, PSD, unit trace)."""


class MismatchedGroup(MomentLDPError):
    """Objects defined over different groups were combined."""


class TooLarge(MomentLDPError):
    """A requested tensor power exceeds the configured memory bound."""


class UnsupportedRep(MomentLDPError):
    """The representation family is not handled by the requested routine."""


class NotDominant(MomentLDPError):
    """A weight is not dominant integral for the representation family."""


class MaxIterations(MomentLDPError):
    """The optimizer neither converged nor certified divergence."""


class EnvelopeOverflow(MomentLDPError):
    """A rejection-sampling density exceeded its envelope."""


class SamplerTimeout(MomentLDPError):
    """The rejection sampler acceptance rate fell below its floor."""


class DegenerateRegion(MomentLDPError):
    """No sample hit the region, so only a rate lower bound is available."""

    def __init__(self, message, lower_bound=None):
        super().__init__(message)
        self.lower_bound = lower_bound


class InvalidConfig(MomentLDPError):
    """A run configuration failed validation."""


class SingularMinor(RuntimeWarning):
    """A principal minor underflowed; a numeric fallback was used."""


class InvariantViolation(MomentLDPError):
    """A numerically asserted identity failed beyond tolerance."""
