"""Exception types shared across the package."""


class PlanraceError(Exception):
    """Base class for all planrace errors."""


class EmptyCollectionError(PlanraceError):
    """Raised when a dataset with zero documents is requested."""


class UnknownFieldError(PlanraceError):
    """Raised when an operation references a field the collection lacks."""


class DatasetFormatError(PlanraceError):
    """Raised when a dataset file cannot be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class UnknownPlanError(PlanraceError):
    """Raised for a plan hint that names no producible plan."""


class NoCandidatesError(PlanraceError):
    """Raised when plan enumeration or a race is given nothing to work with."""


class UndefinedProductivityError(PlanraceError):
    """Raised when a plan is scored with zero work units."""
