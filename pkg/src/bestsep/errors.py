"""Exception hierarchy shared by all modules."""


class BestSepError(Exception):
    """Base class for every error raised by this package."""


class NotHermitian(BestSepError, ValueError):
    pass


class NotPsd(BestSepError, ValueError):
    pass


class NotNormalized(BestSepError, ValueError):
    pass


class DimensionMismatch(BestSepError, ValueError):
    pass


class OutOfRange(BestSepError, ValueError):
    pass


class NoConvergence(BestSepError, RuntimeError):
    pass


class ParallelVectors(BestSepError, ValueError):
    pass


class EmptyCandidateSet(BestSepError, ValueError):
    pass


class NotTwoQubit(BestSepError, ValueError):
    pass


class RankDeficiencyViolation(BestSepError, RuntimeError):
    """The residual of a 2x2 approximation is not a single projector."""


class CandidateGenerationExhausted(BestSepError, RuntimeError):
    """Too few product vectors were found in the range of the input.

    The vectors found before the retry budget ran out are kept on
    ``found`` so callers can still run a sweep over them.
    """

    def __init__(self, message, found=()):
        super().__init__(message)
        self.found = list(found)


class MalformedFile(BestSepError, ValueError):
    """A matrix file could not be parsed into the expected structure."""
