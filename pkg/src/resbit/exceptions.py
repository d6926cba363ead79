"""Exception hierarchy shared by the codecs, pipeline and CLI."""


class ResBitError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ResBitError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class CodeRangeError(ResBitError, ValueError):
    """A class index is outside ``[0, M)``."""


class ShapeError(ResBitError, ValueError):
    """A code or matrix has the wrong width."""


class MalformedCodeError(ResBitError, ValueError):
    """A one-hot code does not contain exactly one set bit."""


class ScheduleError(DomainError):
    """A noise schedule violates ``0 < beta_1 < ... < beta_T < 1``."""


class SchemaError(ResBitError, ValueError):
    """Column schemas do not match the data."""


class VocabularyError(ResBitError, KeyError):
    """A label was not seen at fit time and the column has no masked category."""

    def __init__(self, label, column):
        self.label = label
        self.column = column
        super().__init__(label, column)

    def __str__(self):
        return f"unseen label {self.label!r} in column {self.column!r}"
