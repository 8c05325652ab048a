"""Exception hierarchy shared by the simulation modules and the CLI."""


class NumericalDomainError(ValueError):
    """A request that is well-formed but outside the numerical domain of a method."""


class EPDegenerateError(NumericalDomainError):
    """Spectral machinery requested inside the exceptional-point band."""


class PhaseError(NumericalDomainError):
    """Operation only defined in a particular PT phase."""


class DegenerateStateError(NumericalDomainError):
    """State with (numerically) zero trace where a normalisation is needed."""


class PictureOverflowError(NumericalDomainError):
    """The e^{gamma t} picture factor would overflow."""


class NonIdentifiableError(NumericalDomainError):
    """Measurement data carry no information about the fitted parameter."""
