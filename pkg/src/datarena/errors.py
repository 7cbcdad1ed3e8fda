"""Exception hierarchy shared across the harness."""


class HarnessError(Exception):
    """Base class for all harness errors."""


# --- core ---------------------------------------------------------------

class EmptyTrainSet(HarnessError):
    pass


class DimensionMismatch(HarnessError):
    pass


class EmptyInput(HarnessError):
    pass


class LengthMismatch(HarnessError):
    pass


class NoPositiveExamples(HarnessError):
    """A scored class has no positive example: problem construction bug."""


class RankingTooShort(HarnessError):
    pass


class EmptySlice(HarnessError):
    pass


class DuplicateIds(HarnessError):
    pass


# --- forge --------------------------------------------------------------

class InvalidSpec(HarnessError):
    pass


class RateOutOfRange(HarnessError):
    pass


class CannotRealizeGap(HarnessError):
    """Forge could not realize the requested underperformance gap."""


# --- evaluators ---------------------------------------------------------

class EmptySubmission(HarnessError):
    pass


class BudgetExceeded(HarnessError):
    pass


class UnknownExample(HarnessError):
    pass


class MissingEstimate(HarnessError):
    pass


class EstimateOutOfRange(HarnessError):
    pass


class TooManySlices(HarnessError):
    pass


class DegenerateProblem(HarnessError):
    """Dirty and repaired baselines coincide; the problem cannot be scored."""


class ParseError(HarnessError):
    pass


# --- arena --------------------------------------------------------------

class DuplicateTaskId(HarnessError):
    pass


class BundleHashMismatch(HarnessError):
    pass


class WindowClosed(HarnessError):
    pass


class ValidationFailed(HarnessError):
    def __init__(self, report):
        super().__init__("submission failed validation")
        self.report = report


class WrongTaskType(HarnessError):
    pass


class MissingArtifact(HarnessError):
    pass


class UnknownTask(HarnessError):
    pass


class UnknownSubmission(HarnessError):
    pass
