"""
Rollout records for training.

A Trajectory keeps, per turn, everything needed to recompute the policy's
log-probability later: features, the candidate set, the chosen index and the
log-probability under the policy that sampled it.
"""
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TurnRecord:
    features: np.ndarray
    candidates: tuple
    columns: np.ndarray
    chosen: int
    old_logp: float
    reward: float
    smiles: Optional[str] = None
    outcome: Optional[str] = None

    @classmethod
    def from_decision(cls, decision, reward, smiles=None, outcome=None):
        return cls(
            decision.features, decision.candidates, decision.columns, decision.chosen, decision.logp,
            float(reward), smiles, outcome,
        )


@dataclass(eq=False)
class Trajectory:
    id: int
    lead_id: int
    lead: str
    turns: list = field(default_factory=list)
    best: Optional[str] = None
    success: bool = False

    def __len__(self):
        return len(self.turns)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([turn.reward for turn in self.turns], dtype=np.float64)

    @property
    def old_logps(self) -> np.ndarray:
        return np.array([turn.old_logp for turn in self.turns], dtype=np.float64)

    @property
    def total_reward(self) -> float:
        """R(τ), the sum of turn rewards."""
        return math.fsum(turn.reward for turn in self.turns)


class TrajectoryBatch:
    def __init__(self, trajectories):
        self.trajectories = list(trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def __len__(self):
        return len(self.trajectories)

    def __getitem__(self, index):
        return self.trajectories[index]

    @property
    def turn_count(self):
        return sum(len(trajectory) for trajectory in self.trajectories)

    def by_lead(self):
        """Trajectories grouped by lead id, groups and members in first-seen order."""
        groups = OrderedDict()
        for trajectory in self.trajectories:
            groups.setdefault(trajectory.lead_id, []).append(trajectory)
        return groups


def collect_trajectory(env, agent, lead, rng, trajectory_id=0, lead_id=0) -> Trajectory:
    """
    Roll out one episode and record every sampled turn.

    A turn where the agent had no legal edit ends the episode and is not
    recorded; it carries no log-probability.
    """
    state = env.reset(lead)
    trajectory = Trajectory(trajectory_id, lead_id, state.lead_smiles)
    while not state.done:
        step = agent.act(env, state, rng)
        reward = env.step(state, step.text).reward
        if step.decision is None:
            break
        turn = state.transcript[-1]
        trajectory.turns.append(TurnRecord.from_decision(step.decision, reward, turn.smiles, turn.outcome.value))
    trajectory.best = state.best_smiles
    trajectory.success = any(turn.success for turn in state.transcript)
    return trajectory
