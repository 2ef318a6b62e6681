class PGPOError(ValueError):
    """Base class for training failures."""


class LengthMismatch(PGPOError):
    pass


class NonFiniteGradient(PGPOError):
    """The update was aborted; parameters are left as they were."""
