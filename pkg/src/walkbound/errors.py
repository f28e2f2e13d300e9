"""Exception types shared across the package."""


class WalkboundError(Exception):
    """Base class for all package-specific failures."""


class StructuralError(WalkboundError):
    """Inputs are malformed or mutually inconsistent (shapes, domains, tables)."""


class ParameterError(WalkboundError):
    """A numeric parameter lies outside its admissible range."""


class BudgetError(WalkboundError):
    """An exhaustive enumeration would exceed its configured ceiling."""


class MarginalMismatchError(WalkboundError):
    """Marginal distributions that were required to be identical are not."""
