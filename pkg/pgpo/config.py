from dataclasses import asdict, dataclass, fields

from .exceptions import PGPOError


@dataclass(frozen=True)
class PGPOConfig:
    clip_epsilon: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    lambda_pref: float = 0.3
    max_pairs: int = 6
    pair_keep_ratio: float = 0.75
    learning_rate: float = 5e-5
    minibatch_size: int = 32
    max_grad_norm: float = 1.0
    epochs: int = 1

    def __post_init__(self):
        if not 0 < self.clip_epsilon < 1:
            raise PGPOError('clip_epsilon must lie in (0, 1)')
        for name in ('discount', 'gae_lambda', 'pair_keep_ratio'):
            if not 0 < getattr(self, name) <= 1:
                raise PGPOError(f'{name} must lie in (0, 1]')
        if self.lambda_pref < 0:
            raise PGPOError('lambda_pref must be non-negative')
        if self.learning_rate <= 0 or self.max_grad_norm <= 0:
            raise PGPOError('learning_rate and max_grad_norm must be positive')
        if self.max_pairs < 0 or self.minibatch_size < 1 or self.epochs < 1:
            raise PGPOError('max_pairs must be >= 0, minibatch_size and epochs >= 1')

    @classmethod
    def from_dict(cls, data):
        known = {field.name for field in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise PGPOError(f'unknown PGPO settings: {sorted(unknown)}')
        return cls(**data)

    def to_dict(self):
        return asdict(self)
