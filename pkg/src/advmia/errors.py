"""Exception types shared across the auditing toolkit."""


class MiaError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(MiaError):
    """An input violates a documented contract (CLI exit code 1)."""


class ParseError(ValidationError):
    """A serialized artifact could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class DuplicateIdError(ValidationError):
    """Two records share an id that must be unique."""


class CapacityError(ValidationError):
    """A pool is too small to satisfy a balanced-sampling request."""


class ArityError(ValidationError):
    """A fixed-cardinality argument has the wrong length."""


class EmptyInputError(ValidationError):
    """An operation received empty text where content is required."""


class DegenerateEmbeddingError(ValidationError):
    """A vector operation received a zero-norm embedding."""


class DependencyError(MiaError):
    """A required upstream artifact is missing (CLI exit code 2)."""

    def __init__(self, message: str, required_stage: str | None = None):
        super().__init__(message)
        self.required_stage = required_stage


class TransportError(MiaError):
    """A remote call failed after exhausting retries (CLI exit code 2)."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class ProtocolError(MiaError):
    """A remote endpoint returned a malformed response."""


class UnsupportedCapabilityError(MiaError):
    """The configured endpoint does not support the requested operation."""
