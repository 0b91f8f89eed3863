"""Exception hierarchy shared across the package."""


class LabelGraphError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(LabelGraphError, ValueError):
    """A file or byte stream does not conform to its declared format."""


class ParameterError(LabelGraphError, ValueError):
    """An operation was invoked with invalid parameters."""


class DegenerateNodeError(LabelGraphError, ValueError):
    """A graph node has zero degree and cannot be normalized."""

    def __init__(self, node: int, message: str | None = None):
        self.node = node
        super().__init__(message or f"node {node} has zero degree")


class NotFoundError(LabelGraphError, LookupError):
    """A referenced session or sample does not exist."""


class IntegrityError(LabelGraphError):
    """Persisted state is corrupt or incomplete."""
