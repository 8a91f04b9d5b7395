"""Exception hierarchy.

Every validation failure raised by the library derives from
:class:`WEFairError`, which is a ``ValueError`` so callers that only care
about bad input can catch the builtin.
"""


class WEFairError(ValueError):
    """Base class for all library errors."""


# population
class MassNotNormalized(WEFairError):
    pass


class NegativeMass(WEFairError):
    pass


class ProbabilityOutOfRange(WEFairError):
    pass


class NonPositiveAlpha(WEFairError):
    pass


class EmptyGroup(WEFairError):
    pass


class InconsistentAlphaAcrossGroups(WEFairError):
    pass


class DuplicateCell(WEFairError):
    pass


class EmptyInput(WEFairError):
    pass


class MissingAlphaEntry(WEFairError):
    pass


class ZeroBins(WEFairError):
    pass


class ConstantFeatureWithQuantiles(WEFairError):
    pass


# concepts
class NoGoodBorrowersInGroup(WEFairError):
    pass


class NegativeUtility(WEFairError):
    pass


class ZeroClassifierNotWE(WEFairError):
    pass


class UndefinedConditional(WEFairError):
    pass


class InvalidConcept(WEFairError):
    pass


# solver / analytics
class DomainMismatch(WEFairError):
    pass


class UtilityDomainMismatch(DomainMismatch):
    pass


class BracketNotFound(WEFairError):
    pass


# oracle
class InstanceTooLarge(WEFairError):
    pass


class WOutOfDomain(WEFairError):
    pass
