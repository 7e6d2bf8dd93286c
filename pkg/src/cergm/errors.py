"""Exception hierarchy."""


class CergmError(Exception):
    """Base class for all package errors."""


# network construction and mutation
class ConstraintViolation(CergmError, ValueError):
    pass


class FixedDyad(CergmError, ValueError):
    pass


class UnknownCase(CergmError, IndexError):
    pass


class MissingAttribute(CergmError, ValueError):
    pass


# simulation / estimation
class NonFiniteParameter(CergmError, ValueError):
    pass


class EstimationError(CergmError):
    """Base for failures that map to CLI exit code 3."""


class RankDeficient(EstimationError):
    pass


class Separation(EstimationError):
    def __init__(self, message, terms=(), directions=()):
        super().__init__(message)
        self.terms = tuple(terms)
        self.directions = tuple(directions)


class HullFailure(EstimationError):
    pass


class Degenerate(EstimationError):
    pass


class MaxIterations(EstimationError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularInformation(EstimationError):
    pass


class LoglikUnavailable(EstimationError):
    pass


# data ingestion
class DataError(CergmError):
    """Base for input-data failures (CLI exit code 2)."""


class ParseError(DataError, ValueError):
    def __init__(self, path, row, column, reason):
        super().__init__(f"{path}: row {row}, column {column!r}: {reason}")
        self.path = path
        self.row = row
        self.column = column
        self.reason = reason


class DanglingCitation(DataError, KeyError):
    def __init__(self, case_id, row=None):
        where = f" (row {row})" if row is not None else ""
        super().__init__(f"citation references unknown case id {case_id!r}{where}")
        self.case_id = case_id

    def __str__(self):
        return self.args[0]


class ForwardCitation(DataError, ValueError):
    pass


class EmptyTerm(DataError, ValueError):
    pass
