"""
Errors raised by property oracles and the oracle ledger.
"""


class OracleError(ValueError):
    """Base class for oracle failures caused by bad input or data."""


class UnknownProperty(OracleError):
    pass


class NonFiniteScore(OracleError):
    pass


class MissingKey(OracleError):
    pass


class TableParseError(OracleError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f'line {line_number}: {message}')


class BudgetExhausted(RuntimeError):
    """The oracle ledger has no calls left for an uncached molecule."""

    def __init__(self, budget):
        self.budget = budget
        super().__init__(f'oracle budget of {budget} calls exhausted')
