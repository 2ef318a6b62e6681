class FilterError(ValueError):
    pass


class EmptyAfterFilter(FilterError):
    """Nothing survived filtering; the caller should skip the update."""
