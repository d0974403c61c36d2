"""Exception hierarchy for the toolkit.

Every error derives from ``ValueError`` so callers that only guard against
bad input keep working, while the CLI can report the concrete class name.
"""


class ToolkitError(ValueError):
    """Base class of all toolkit errors."""


class IngestError(ToolkitError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class LabelError(ToolkitError):
    pass


class FormatVersionError(ToolkitError):
    def __init__(self, found: int, expected: int, path: str | None = None):
        self.found = found
        self.expected = expected
        where = f" in {path}" if path else ""
        super().__init__(
            f"artifact format version {found}{where} does not match supported version {expected}"
        )


class ArtifactError(ToolkitError):
    pass


class GraphError(ToolkitError):
    pass


class PropagationError(ToolkitError):
    pass


class TrainingError(ToolkitError):
    def __init__(self, message: str, epoch: int | None = None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)


class ClassifierError(ToolkitError):
    pass


class EvaluationError(ToolkitError):
    pass


class PolarizationError(ToolkitError):
    pass


class SynthError(ToolkitError):
    pass


class ConfigError(ToolkitError):
    pass
