"""Exception types shared across the package.

Every failure mode that a caller might want to branch on gets its own class;
generic misuse keeps raising ValueError/TypeError from the offending function.
"""


class FreqlabError(Exception):
    """Base class for all package-specific failures."""


class GeometryError(FreqlabError):
    """Invalid geometric query (point outside domain, search window escape, ...)."""


class QuadratureError(FreqlabError):
    """An integral could not be evaluated at all (empty/ill-posed setup)."""


class FieldError(FreqlabError):
    """A field construction or evaluation failed."""


class TrivialFieldError(FieldError):
    """A solve produced the zero field; downstream quotients would be meaningless."""


class DegenerateNormalizationError(FieldError):
    """Rescaling denominator vanishes (constant field on the ball)."""


class BoundaryFitError(FieldError):
    """Boundary residual of a fitted field exceeds its quality gate."""


class WorkingBallError(GeometryError):
    """Straightening-map determinant left the admissible band."""


class FrequencyError(FreqlabError):
    """Frequency quotient undefined (vanishing height integral)."""


class MapQualityError(FreqlabError):
    """A constructed map failed a quality gate (gradient floor, path dependence)."""


class SelfCheckError(FreqlabError):
    """An internal consistency check (analytic vs finite difference) failed."""


class PipelineStageError(FreqlabError):
    """A named stage of the certificate pipeline failed; carries partial results."""

    def __init__(self, stage, message, report=None):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
        self.report = report


class ConfigError(FreqlabError):
    """Experiment configuration could not be parsed or validated."""
