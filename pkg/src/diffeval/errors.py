"""Exception hierarchy shared by all diffeval modules."""


class DiffevalError(Exception):
    """Base class for every error raised by this package."""


class AlignmentError(DiffevalError):
    """Two id-ordered collections share no instance ids."""


class ManifestError(DiffevalError):
    """Invalid ensemble manifest configuration."""


class MissingPredictionsError(DiffevalError):
    """An instance has no usable prediction from any ensemble member."""


class SelectionError(DiffevalError):
    """Invalid selection request (empty pool, non-positive budget, ...)."""


class StatError(DiffevalError):
    """Statistic requested on empty or mismatched input."""


class DegenerateRankingError(StatError):
    """Rank correlation is undefined because one ranking is fully tied."""


class CurationError(DiffevalError):
    """Invalid flagging or edit-acceptance request."""


class ParseError(DiffevalError):
    """A file could not be parsed. Carries the offending location."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f" [{path}"
            loc += f":{line}]" if line is not None else "]"
        elif line is not None:
            loc = f" [line {line}]"
        super().__init__(message + loc)


class DuplicateError(ParseError):
    """The same logical record appears twice in one file."""


class IntegrityError(DiffevalError):
    """An append-only log is internally inconsistent.

    ``valid_count`` reports how many leading records are intact, so a
    caller can recover the clean prefix.
    """

    def __init__(self, message: str, *, valid_count: int = 0):
        self.valid_count = valid_count
        super().__init__(f"{message} (valid prefix: {valid_count} records)")
