"""Exception types shared across the package."""


class FppLabError(Exception):
    """Base class for all fpplab errors."""


class DegenerateFrame(FppLabError):
    """The two frame directions are (numerically) parallel."""


class WindowExhausted(FppLabError):
    """Search window expansion budget spent with the geodesic still touching the boundary."""


class MultipleContacts(FppLabError):
    """Two target points attain the hitting time within floating-point resolution."""


class SurrogateTooFlat(FppLabError):
    """The surrogate distance function fails to produce a bounded ball inside its window."""


class NoCrossing(FppLabError):
    """The geodesic polyline never attains the requested chord coordinate."""


class DegenerateChord(FppLabError):
    """The chord between the endpoints has zero extent along the frame direction."""


class Unreachable(FppLabError):
    """No admissible path exists inside the window."""


class OutOfRange(FppLabError):
    """Argument lies beyond the extrapolation guard of a fitted scale table."""


class DegenerateDesign(FppLabError):
    """Regression design has no spread in the predictor."""


class TooFewPositive(FppLabError):
    """Fewer than three positive entries remain after dropping non-positive values."""


class SeparationTooLarge(FppLabError):
    """Requested tangential separation exceeds what the window policy can accommodate."""


class ConfigInvalid(FppLabError):
    """Experiment configuration failed validation.

    The offending field path is carried in ``field``.
    """

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ManifestMismatch(FppLabError):
    """Resume attempted against a manifest written for a different configuration."""


class ExperimentFailed(FppLabError):
    """Replicate failure rate exceeded the experiment failure budget."""


class OutputUnwritable(FppLabError):
    """Output directory cannot be created or written."""
