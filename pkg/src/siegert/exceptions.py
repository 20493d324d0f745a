"""Error types shared across the package.

Validation problems (bad arguments, malformed model files) raise
:class:`ValidationError`; anything that fails *numerically* despite valid
input derives from :class:`NumericalError` so the CLI can map the two
families onto distinct exit codes.
"""


class ValidationError(ValueError):
    """Input violates a documented precondition or schema."""


class NumericalError(RuntimeError):
    """Computation failed numerically on otherwise valid input."""


class OverflowGuardError(NumericalError):
    """An exponent magnitude exceeded the guard (|exponent| > 700)."""


class BoundaryProximityError(NumericalError):
    """A zero sits too close to a contour after repeated perturbation."""


class NewtonDivergenceError(NumericalError):
    """Newton iteration exhausted its budget without converging."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class BandEdgeError(NumericalError):
    """Energy coincides with a lead band edge where the self-energy is singular."""


class ExceptionalPointError(NumericalError):
    """Eigenvectors too close to parallel for a biorthogonal construction."""


class SpuriousPoleError(NumericalError):
    """A claimed pole failed the wave-function matching residual check."""


class NearThresholdWarning(UserWarning):
    """Expanding-window contract is marginal for a near-threshold pole."""
