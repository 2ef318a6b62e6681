"""
Two-stage trajectory filtering ahead of each update.

Stage one keeps lead groups whose cumulative-reward spread is at or above
the median spread; stage two keeps the best-scoring trajectories inside each
kept group.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from pgpo.trajectory import TrajectoryBatch

from .exceptions import EmptyAfterFilter, FilterError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TrajectoryGroup:
    lead_id: int
    trajectories: list

    def __post_init__(self):
        self.trajectories = list(self.trajectories)
        # population std over the full group, before any filtering
        self.std = float(np.std(self.returns)) if self.trajectories else 0.0

    def __len__(self):
        return len(self.trajectories)

    @property
    def returns(self):
        return np.array([trajectory.total_reward for trajectory in self.trajectories], dtype=np.float64)

    def top(self, ratio):
        keep = math.ceil(round(ratio * len(self.trajectories), 9))
        ranked = sorted(self.trajectories, key=lambda trajectory: (-trajectory.total_reward, trajectory.id))
        return ranked[:keep]


def group_batch(batch) -> list:
    """TrajectoryGroups by lead id, ordered by lead id."""
    batch = batch if isinstance(batch, TrajectoryBatch) else TrajectoryBatch(batch)
    groups = batch.by_lead()
    return [TrajectoryGroup(lead_id, members) for lead_id, members in sorted(groups.items())]


def filter_batch(groups, variance_keep_ratio=0.5, score_keep_ratio=0.75) -> TrajectoryBatch:
    """
    Filtered batch ordered by lead id, then cumulative reward descending,
    then trajectory id.

    ``groups`` is a list of TrajectoryGroup or anything ``group_batch`` accepts.
    """
    if not 0 < variance_keep_ratio <= 1 or not 0 < score_keep_ratio <= 1:
        raise FilterError('keep ratios must lie in (0, 1]')
    groups = list(groups)
    if groups and not isinstance(groups[0], TrajectoryGroup):
        groups = group_batch(groups)
    if not groups:
        raise EmptyAfterFilter('no trajectory groups to filter')

    cutoff = float(np.quantile([group.std for group in groups], 1 - variance_keep_ratio))
    kept = sorted((group for group in groups if group.std >= cutoff), key=lambda group: group.lead_id)
    trajectories = [trajectory for group in kept for trajectory in group.top(score_keep_ratio)]
    if not trajectories:
        raise EmptyAfterFilter('every trajectory was filtered out')
    logger.debug(f'kept {len(kept)}/{len(groups)} groups and {len(trajectories)} trajectories (std cutoff {cutoff:.4f})')
    return TrajectoryBatch(trajectories)


def retention_ratio(before, after) -> float:
    before = before if isinstance(before, int) else len(before)
    after = after if isinstance(after, int) else len(after)
    if before <= 0:
        raise FilterError('retention ratio needs a non-empty batch before filtering')
    return after / before
