"""
Errors raised while reading, building or comparing molecular graphs.
"""


class ChemGraphError(ValueError):
    """Base class for every chemgraph failure."""


class SmilesSyntaxError(ChemGraphError):
    pass


class UnbalancedBracket(ChemGraphError):
    pass


class UnclosedRing(ChemGraphError):
    pass


class BadValence(ChemGraphError):
    pass


class UnsupportedElement(ChemGraphError):
    pass


class MultiFragment(ChemGraphError):
    pass


class GraphError(ChemGraphError):
    """Structural problem in a directly constructed graph."""


class LengthMismatch(ChemGraphError):
    pass
