"""Exception hierarchy.

Two families: :class:`HypothesisFailure` marks a legitimate scientific outcome
(the theorem's premises do not hold for the given data), everything else
derived from :class:`WedgeEdgeError` is a usage or numerical error.
"""


class WedgeEdgeError(Exception):
    """Base class for all errors raised by the package."""


class HypothesisFailure(WedgeEdgeError):
    """The data violates a premise of the continuation theorem."""


class InsufficientMeasure(HypothesisFailure):
    """A set is too thin to supply the requested separated, rich slices."""


class NoFiniteN0(HypothesisFailure):
    """No level set of the coefficient sums covers half of the wedge."""


class OverlapFailure(HypothesisFailure):
    """The real pieces of the domain do not overlap in a neighbourhood of 0."""


class DuplicateNodes(WedgeEdgeError):
    pass


class InvalidMeasure(WedgeEdgeError):
    pass


class Unbounded(WedgeEdgeError):
    """Cone membership never held below the configured lambda cap."""


class DegenerateCone(WedgeEdgeError):
    pass


class NormTooLarge(WedgeEdgeError):
    pass


class DomainViolation(WedgeEdgeError):
    """An oracle was about to be evaluated outside its declared domain."""


class IllConditioned(WedgeEdgeError):
    pass


class ConfigError(WedgeEdgeError):
    """Malformed run configuration."""
