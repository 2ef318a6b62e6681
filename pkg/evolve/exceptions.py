class EvolutionError(ValueError):
    """Invalid evolution settings or pool operation."""
