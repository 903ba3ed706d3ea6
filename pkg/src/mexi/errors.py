"""Exception hierarchy shared across the toolkit."""


class MexiError(Exception):
    """Base class for all toolkit errors."""


class SessionFormatError(MexiError):
    """A session log violates the file schema (bad field, bad range,
    unordered timestamps).  Carries a location hint when available."""

    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class MalformedSessionError(MexiError):
    """A structurally valid session violates task/screen bounds."""


class UndefinedMeasureError(MexiError):
    """An expertise measure has no defined value for this input
    (e.g. precision of an empty match)."""


class ConfigurationError(MexiError):
    """Invalid configuration or unusable population (e.g. empty
    reference match, empty training set)."""


class EvaluationError(MexiError):
    """Mismatched or degenerate inputs to an evaluation routine."""


class PipelineOrderError(MexiError):
    """A pipeline stage was invoked before its prerequisites
    (e.g. feature fusion before the fusion nets are trained)."""


class ModelInputError(MexiError):
    """Input shape incompatible with a trained model."""


class BaselineInapplicableError(MexiError):
    """A baseline's required data (e.g. warmup decisions) is missing."""
