"""Exception types shared across the library."""


class NotPSDError(ValueError):
    """A matrix required to be positive semidefinite has a significantly negative eigenvalue."""


class NotCPError(ValueError):
    """A map required to be completely positive has a negative Choi eigenvalue."""


class NonPositiveEffectError(ValueError):
    """A pulled-back POVM element is not a positive operator."""


class TargetMismatchError(ValueError):
    """A target ensemble does not average to the state it is supposed to decompose."""


class UnsupportedMemberError(ValueError):
    """A target ensemble member lies outside the support of the steered state."""


class MixMismatchError(ValueError):
    """Two ensembles that must share a density operator do not."""


class PremiseViolatedError(ValueError):
    """The trace pairing tr(B(rho)) = tr(rho F) fails for the given map/effect pair."""
