from dataclasses import asdict, dataclass, field, fields

from .exceptions import EvolutionError
from .fitness import DIFFICULTY_WEIGHTS

EVOLUTIONARY = 'evolutionary'
INDEPENDENT = 'independent'
STRATEGIES = (EVOLUTIONARY, INDEPENDENT)


@dataclass(frozen=True)
class EvolveConfig:
    budget: int = 500
    generations: int = 10
    rollouts_per_parent: int = 32
    horizon: int = 5
    tau_base: float = 0.9
    tau_step: float = 0.1
    tau_max: float = 2.0
    pool_capacity: int = 5
    elite_gamma: float = 0.4
    weights: dict = field(default_factory=lambda: dict(DIFFICULTY_WEIGHTS))
    strategy: str = EVOLUTIONARY

    def __post_init__(self):
        for name in ('budget', 'generations', 'rollouts_per_parent', 'horizon', 'pool_capacity'):
            if getattr(self, name) < 1:
                raise EvolutionError(f'{name} must be at least 1')
        if self.tau_base <= 0 or self.tau_max <= 0 or self.tau_step < 0:
            raise EvolutionError('temperatures must be positive and tau_step non-negative')
        if self.tau_base > self.tau_max:
            raise EvolutionError(f'tau_base {self.tau_base} exceeds tau_max {self.tau_max}')
        if not 0 <= self.elite_gamma <= 1:
            raise EvolutionError('elite_gamma must lie in [0, 1]')
        if any(weight <= 0 for weight in self.weights.values()):
            raise EvolutionError('fitness weights must be positive')
        if self.strategy not in STRATEGIES:
            raise EvolutionError(f'strategy must be one of {STRATEGIES}')

    @classmethod
    def from_dict(cls, data):
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise EvolutionError(f'unknown inference settings: {sorted(unknown)}')
        data = dict(data)
        if 'weights' in data:
            data['weights'] = {**DIFFICULTY_WEIGHTS, **data['weights']}
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def temperature_at(generation, config) -> float:
    """τ for 1-based ``generation``: linear ramp from tau_base, capped at tau_max."""
    if generation < 1:
        raise EvolutionError('generations are numbered from 1')
    return round(min(config.tau_base + (generation - 1) * config.tau_step, config.tau_max), 10)
