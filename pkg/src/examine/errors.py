"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


class FormatError(ValidationError):
    """Raised when a file's framing (magic, version, sizes) is wrong."""


class SizeLimitError(ValidationError):
    """Raised when a request exceeds a hard size guard."""
