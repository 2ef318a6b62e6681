"""
Turn reward table.

The hierarchy is: invalid proposal, unchanged molecule, similarity
violation, then the asymmetric improvement/degradation split on the
weighted property change.
"""
import math
from dataclasses import dataclass, fields
from enum import Enum


class Outcome(str, Enum):
    INVALID = 'invalid'
    UNCHANGED = 'unchanged'
    LOW_SIMILARITY = 'low_similarity'
    DEGRADED = 'degraded'
    IMPROVED = 'improved'
    DONE = 'done'
    BUDGET_EXHAUSTED = 'budget_exhausted'


@dataclass(frozen=True)
class RewardTable:
    invalid: float = -0.5
    unchanged: float = -0.3
    similarity_scale: float = 2.0
    degradation_scale: float = 1.0
    amplification: float = 5.0
    # added on top of an improvement that meets every success criterion
    success_bonus: float = 0.0

    @classmethod
    def from_dict(cls, data):
        known = {field.name for field in fields(cls)}
        return cls(**{key: float(value) for key, value in (data or {}).items() if key in known})


def weighted_change(specs, new_scores, old_scores) -> float:
    """Σ wᵢ·sᵢ·(Fᵢ(new) − Fᵢ(old)); positive means better."""
    return math.fsum(spec.weight * spec.improvement(new_scores[spec.name], old_scores[spec.name]) for spec in specs)


def weighted_objective(specs, scores) -> float:
    return math.fsum(spec.weight * spec.sign * scores[spec.name] for spec in specs)


def classify_change(change) -> Outcome:
    return Outcome.IMPROVED if change > 0 else Outcome.DEGRADED


def compute_reward(outcome, table=None, gamma=None, similarity=None, change=None) -> float:
    table = table or RewardTable()
    if outcome == Outcome.INVALID:
        return table.invalid
    if outcome == Outcome.UNCHANGED:
        return table.unchanged
    if outcome == Outcome.LOW_SIMILARITY:
        return -table.similarity_scale * (gamma - similarity)
    if outcome == Outcome.IMPROVED:
        return table.amplification * abs(change)
    if outcome == Outcome.DEGRADED:
        return -table.degradation_scale * abs(change) if change else 0.0
    return 0.0
