"""Exception hierarchy shared by all sirkit modules."""


class SirkitError(Exception):
    """Base class for all errors raised by sirkit."""


class ValidationError(SirkitError, ValueError):
    """An input value violates a documented precondition."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvalidGeometryError(ValidationError):
    pass


class InvalidSubstrateError(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class PoleError(DomainError):
    """Argument sits on a tangent pole."""


class NoSolutionError(SirkitError):
    pass


class DesignInfeasibleError(SirkitError):
    pass


class RootNotFoundError(SirkitError):
    pass


class ResolutionError(SirkitError):
    pass


class InsufficientSpanError(SirkitError):
    pass


class NoResonanceError(SirkitError):
    pass


class ConvergenceError(SirkitError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InconsistentQError(ValidationError):
    pass


class DegenerateError(SirkitError):
    pass


class TraceFormatError(SirkitError):
    """Malformed trace file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        where = ", ".join(parts)
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.line = line
