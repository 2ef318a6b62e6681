"""
Fixed-capacity elite pool kept sorted by fitness, best first.
"""
import logging
from dataclasses import asdict, dataclass, field

from .exceptions import EvolutionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PoolEntry:
    smiles: str
    fitness: float
    similarity: float
    scores: dict = field(default_factory=dict, compare=False)
    success: bool = False
    # generation that produced the entry, 0 for the lead
    generation: int = 0

    def to_dict(self):
        return asdict(self)


class ElitePool:
    def __init__(self, capacity=5, gamma=0.4):
        if capacity < 1:
            raise EvolutionError('pool capacity must be at least 1')
        self.capacity = capacity
        self.gamma = gamma
        self.entries = []

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, smiles):
        return any(entry.smiles == smiles for entry in self.entries)

    @property
    def best(self):
        return self.entries[0] if self.entries else None

    @property
    def worst(self):
        return self.entries[-1] if self.entries else None

    @property
    def full(self):
        return len(self.entries) >= self.capacity

    def insert(self, entry: PoolEntry) -> bool:
        """
        Add ``entry`` if it passes the similarity gate, is new and beats the
        worst member of a full pool. Equal fitness goes after existing
        members.
        """
        if entry.similarity < self.gamma or entry.smiles in self:
            return False
        if self.full:
            if entry.fitness <= self.worst.fitness:
                return False
            dropped = self.entries.pop()
            logger.debug(f'pool drops {dropped.smiles} ({dropped.fitness:.3f}) for {entry.smiles}')
        position = next(
            (index for index, member in enumerate(self.entries) if member.fitness < entry.fitness),
            len(self.entries),
        )
        self.entries.insert(position, entry)
        return True

    def snapshot(self):
        return [entry.to_dict() for entry in self.entries]


def elite_insert(pool, entry) -> ElitePool:
    pool.insert(entry)
    return pool
