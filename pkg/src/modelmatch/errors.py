"""Exception hierarchy shared across the package.

Every error carries a stable ``code`` string that is also used verbatim in
HTTP error envelopes and CLI output, so the names here are part of the
public surface.
"""


class ModelMatchError(Exception):
    """Base class; ``code`` is the machine-readable error identifier."""

    code = "ModelMatchError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


class MismatchedLengths(ModelMatchError):
    code = "MismatchedLengths"


class DimensionMismatch(ModelMatchError):
    code = "DimensionMismatch"


class NonFiniteValue(ModelMatchError):
    code = "NonFiniteValue"


class ZeroVector(ModelMatchError):
    code = "ZeroVector"


class EmptyPromptSet(ModelMatchError):
    code = "EmptyPromptSet"


class MalformedPayload(ModelMatchError):
    code = "MalformedPayload"


class VersionUnsupported(ModelMatchError):
    code = "VersionUnsupported"


class InvalidInput(ModelMatchError):
    code = "InvalidInput"


class EmptyInput(ModelMatchError):
    code = "EmptyInput"


class EndpointUnavailable(ModelMatchError):
    code = "EndpointUnavailable"


class ProtocolViolation(ModelMatchError):
    code = "ProtocolViolation"


class EncoderFailure(ModelMatchError):
    code = "EncoderFailure"


class CaptionFailure(ModelMatchError):
    code = "CaptionFailure"


class GenerationFailure(ModelMatchError):
    code = "GenerationFailure"

    def __init__(self, prompt_index: int, message: str = ""):
        super().__init__(message or f"generation failed at prompt index {prompt_index}")
        self.prompt_index = prompt_index


class DuplicateModel(ModelMatchError):
    code = "DuplicateModel"


class DuplicateModelId(ModelMatchError):
    code = "DuplicateModelId"


class EmptyRegistry(ModelMatchError):
    code = "EmptyRegistry"


class ModelNotFound(ModelMatchError):
    code = "ModelNotFound"


class AssignmentFailure(ModelMatchError):
    code = "AssignmentFailure"


class InvalidK(ModelMatchError):
    code = "InvalidK"


class DegenerateInput(ModelMatchError):
    code = "DegenerateInput"


class NumericalFailure(ModelMatchError):
    code = "NumericalFailure"


class InvalidConfig(ModelMatchError):
    code = "InvalidConfig"


class InsufficientExamples(ModelMatchError):
    code = "InsufficientExamples"
