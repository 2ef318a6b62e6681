class PolicyError(ValueError):
    """Base class for policy failures."""


class IllegalEdit(PolicyError):
    pass


class NoLegalEdits(PolicyError):
    pass


class CheckpointError(PolicyError):
    pass
