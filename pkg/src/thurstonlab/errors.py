"""Exception hierarchy.

Everything raised on purpose by the library derives from :class:`DomainError`,
which the CLI maps to exit status 2.
"""


class DomainError(Exception):
    """Base class for errors caused by mathematically invalid input."""


class DuplicateEdge(DomainError):
    pass


class NotIrreducible(DomainError):
    pass


class DanglingState(DomainError):
    pass


class GraphMismatch(DomainError):
    pass


class CycleNotInGraph(DomainError):
    pass


class ConvergenceFailure(DomainError):
    pass


class BudgetExceeded(DomainError):
    pass


class NotTangent(DomainError):
    pass


class NegativeCurvature(DomainError):
    pass


class DegenerateFlow(DomainError):
    """Raised when an entropy ratio is requested for a zero-entropy flow."""


class IdentityElement(DomainError):
    pass


class RankMismatch(DomainError):
    pass


class SingularGenerator(DomainError):
    pass


class EigenFailure(DomainError):
    pass


class NonLoxodromic(DomainError):
    pass


class NonLoxodromicWarning(UserWarning):
    pass


class UnknownPreset(DomainError):
    pass


class IndexOutOfRange(DomainError):
    pass


class CertificateFailed(UserWarning):
    """Emitted when a Schottky ping-pong certificate cannot be established."""


class NonPositiveLength(DomainError):
    pass


class InsufficientData(DomainError):
    pass


class EntropyUnstable(UserWarning):
    pass


class NonSimpleEigenvalue(DomainError):
    pass
