"""Error types raised by the solver.

Every error that corresponds to a violated admissibility inequality carries
the inequality text in ``condition`` so the CLI can report it verbatim.
"""


class BreatherError(Exception):
    """Base class for all solver errors."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SignViolation(BreatherError):
    pass


class NotOddRational(BreatherError):
    pass


class PeriodMismatch(BreatherError):
    pass


class XiOutOfRange(BreatherError):
    pass


class DomainError(BreatherError, ValueError):
    pass


class NonPositive(BreatherError, ValueError):
    pass


class IndexOutOfRange(BreatherError, IndexError):
    pass


class MatchingSingular(BreatherError):
    pass


class ProductDiverged(BreatherError):
    pass


class NoDecayingMultiplier(BreatherError):
    pass


class DegenerateElement(BreatherError, ValueError):
    pass


class ExcludedViolation(BreatherError):
    pass


class NoWitness(BreatherError):
    pass


class Diverged(BreatherError):
    pass


class ExclusionDerivativeUnstable(BreatherError):
    pass


class MissingArtifact(BreatherError, FileNotFoundError):
    pass


class AuditFailed(BreatherError):
    pass


class KernelNotAdmissible(BreatherError):
    pass


class TruncationWarning(UserWarning):
    pass
