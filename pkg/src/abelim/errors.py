"""Exception hierarchy shared by all modules.

Every domain error derives from :class:`AbelimError` so callers (and the
command line driver) can distinguish mathematical failures from bugs.
"""


class AbelimError(Exception):
    """Base class of all errors raised by this package."""


class GraphSyntaxError(AbelimError):
    """Malformed graph, cycle or table text."""


class DuplicateVertex(AbelimError):
    """The same vertex id was declared twice."""


class NotATree(AbelimError):
    """The graph is disconnected, has a cycle, or has a multi-edge."""


class NotNegativeDefinite(AbelimError):
    """The leading principal minors do not alternate in sign."""


class UnknownVertex(AbelimError):
    """A vertex id does not belong to the graph."""


class GraphMismatch(AbelimError):
    """Operands live on different graphs."""


class NotInLprime(AbelimError):
    """A rational cycle pairs non-integrally with some base vector."""


class NotNegLipman(AbelimError):
    """A Chern class is outside the negated Lipman cone."""


class CycleBelowE(AbelimError):
    """An operation requires a cycle with every coefficient >= 1."""


class BoxTooLarge(AbelimError):
    """An enumeration box exceeds the configured volume cap."""


class OracleFailure(AbelimError):
    """An analytic oracle could not answer a query."""


class MissingEntry(OracleFailure):
    """A table oracle has no entry for the query."""


class UnsupportedDescriptor(OracleFailure):
    """The oracle cannot evaluate this bundle descriptor."""


class ParseError(AbelimError):
    """Malformed oracle table file."""


class HypothesisViolation(AbelimError):
    """A theorem hypothesis failed while running in strict mode."""


class ChernMismatch(AbelimError):
    """The base bundle's Chern class disagrees with the restricted class."""


class EmptyECa(AbelimError):
    """The relative divisor space is empty, so no dimension is defined."""


class DisconnectedInput(AbelimError):
    """A per-component invariant received a disconnected (or zero) cycle."""


class TowerTooLarge(AbelimError):
    """The blow-up tower lattice exceeds the configured size cap."""
