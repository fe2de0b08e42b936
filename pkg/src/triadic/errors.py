"""Exception types shared across the package.

Most errors subclass :class:`ValueError` so callers that only care about
"bad input" can catch that.
"""


class TriadicError(Exception):
    """Base class for package-specific errors."""


class ParseError(TriadicError, ValueError):
    """A tabular record could not be parsed."""

    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"row {row}: {message}")


class ValidationError(TriadicError, ValueError):
    """Input parsed but violates a domain invariant."""


class EmptyInputError(TriadicError, ValueError):
    pass


class ConfigurationError(TriadicError, ValueError):
    pass


class TrainingError(TriadicError, RuntimeError):
    pass


class NotFoundError(TriadicError, LookupError):
    pass


class DegenerateClassError(TriadicError, ValueError):
    """Only one class is present in the labels.

    ``recall`` holds the recall of the class that is present so callers can
    still report it.
    """

    def __init__(self, present_class: int, recall: float):
        self.present_class = present_class
        self.recall = recall
        super().__init__(
            f"only class {present_class} present in labels (recall={recall:.4f})"
        )
