class EpisodeError(ValueError):
    """Base class for episode protocol errors."""


class NoAnswerTag(EpisodeError):
    pass


class EpisodeFinished(EpisodeError):
    """step() called on an episode that is already done."""
