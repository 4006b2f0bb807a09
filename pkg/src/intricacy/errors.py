class IntricacyError(Exception):
    """Base class for errors raised by this package."""


class SizeLimitError(IntricacyError, ValueError):
    """A window, language or assignment space is above a configured limit."""


class ValidationError(IntricacyError, ValueError):
    """An input object violates its structural invariants."""


class BudgetExceeded(IntricacyError):
    """A run stopped because a node or time budget ran out."""
