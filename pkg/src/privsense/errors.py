"""Exception hierarchy.

Two broad families matter for the CLI exit-code contract: data problems
(exit 2) and endpoint/transport problems (exit 3). Usage errors are
handled by the argument parser itself (exit 1).
"""


class PrivsenseError(Exception):
    """Base class for all toolkit errors."""


class DataError(PrivsenseError):
    """Bad or insufficient input data."""


class EndpointError(PrivsenseError):
    """Remote endpoint unreachable or misbehaving."""


# corpus
class FileUnreadable(DataError):
    pass


class FormatError(DataError):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class EmptyCorpus(DataError):
    pass


class InsufficientData(DataError):
    pass


class BadFractions(DataError):
    pass


class MissingRatings(DataError):
    def __init__(self, ids):
        self.ids = list(ids)
        shown = ", ".join(self.ids[:5])
        more = f" (+{len(self.ids) - 5} more)" if len(self.ids) > 5 else ""
        super().__init__(f"records without a rating: {shown}{more}")


# annotation
class EmptyText(DataError):
    pass


class OutOfRange(DataError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"rating {value} outside the 1..5 scale")


class NoRatingFound(DataError):
    pass


class EndpointUnreachable(EndpointError):
    pass


class ProtocolError(EndpointError):
    pass


# agreement
class TooFewValues(DataError):
    pass


class ZeroExpectedDisagreement(DataError):
    pass


class NoOverlap(DataError):
    pass


class NoEligibleAnnotators(DataError):
    pass


# classification metrics
class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class BadDistribution(DataError):
    pass


# baseline scorer
class EmptyTrainingSet(DataError):
    pass


class UnlabeledRecord(DataError):
    def __init__(self, ids):
        self.ids = list(ids)
        shown = ", ".join(self.ids[:5])
        more = f" (+{len(self.ids) - 5} more)" if len(self.ids) > 5 else ""
        super().__init__(f"unlabeled records: {shown}{more}")


# de-identification harness
class InvalidSpan(DataError):
    pass


class ScorerFailure(PrivsenseError):
    def __init__(self, condition, cause):
        self.condition = condition
        super().__init__(f"scorer failed on condition {condition}: {cause}")
