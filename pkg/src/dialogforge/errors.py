"""Exception hierarchy shared across the toolkit."""


class ForgeError(Exception):
    """Base class for all toolkit errors."""


class FormatError(ForgeError):
    """Malformed input file (bad JSON, bad TSV line, ...); carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ForgeError):
    """Data violates a documented invariant (vocabulary, schema, config)."""


class BackendError(ForgeError):
    """Base class for generation-backend failures."""


class BackendTransportError(BackendError):
    """Could not reach the backend at all."""


class BackendHTTPError(BackendError):
    """Backend answered with a non-200 status."""

    def __init__(self, message: str, status: int):
        self.status = status
        super().__init__(message)


class BackendProtocolError(BackendError):
    """Backend answered 200 but the body violates the wire contract."""
