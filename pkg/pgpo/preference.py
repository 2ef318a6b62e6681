"""
Turn-level preference learning: pair selection inside a trajectory, Lambda
weights and the weighted logistic pair loss on ψ.
"""
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PreferencePair:
    """Turn ``j`` earned a strictly larger reward than turn ``i``."""

    trajectory_id: Optional[int]
    i: int
    j: int
    rank_i: int
    rank_j: int
    weight: float


def turn_ranks(rewards) -> np.ndarray:
    """
    Rank positions 1..T, best reward first.

    Among equal rewards the earlier turn gets the larger rank number.
    """
    order = sorted(range(len(rewards)), key=lambda t: (-rewards[t], -t))
    ranks = np.zeros(len(rewards), dtype=np.int64)
    for position, t in enumerate(order, start=1):
        ranks[t] = position
    return ranks


# 2**1000 is still a finite double
MAX_GAIN_EXPONENT = 1000.0


def gain(reward):
    return float(np.exp2(min(reward, MAX_GAIN_EXPONENT))) - 1.0


def discount(rank):
    return math.log1p(rank)


def lambda_weight(r_i, r_j, rank_i, rank_j) -> float:
    return abs(gain(r_i) - gain(r_j)) * abs(1.0 / discount(rank_i) - 1.0 / discount(rank_j))


def select_pairs(trajectory, keep_ratio=0.75, max_pairs=6) -> list:
    """
    Ordered pairs (i, j) with r_j > r_i, largest reward gap first.

    Keeps ⌊keep_ratio·n⌋ of the n candidate pairs (at least one), then at
    most ``max_pairs``. Accepts a Trajectory or a plain reward sequence.
    """
    rewards = [float(r) for r in getattr(trajectory, 'rewards', trajectory)]
    trajectory_id = getattr(trajectory, 'id', None)
    candidates = []
    for a, b in combinations(range(len(rewards)), 2):
        if rewards[a] == rewards[b]:
            continue
        i, j = (a, b) if rewards[b] > rewards[a] else (b, a)
        candidates.append((rewards[j] - rewards[i], i, j))
    if not candidates:
        return []
    candidates.sort(key=lambda item: (-item[0], item[1], item[2]))
    keep = min(max(1, math.floor(keep_ratio * len(candidates))), max_pairs)
    ranks = turn_ranks(rewards)
    return [
        PreferencePair(
            trajectory_id, i, j, int(ranks[i]), int(ranks[j]),
            lambda_weight(rewards[i], rewards[j], ranks[i], ranks[j]),
        )
        for _, i, j in candidates[:keep]
    ]


def pair_loss(psi_gap):
    """log(1 + exp(−gap)), stable for large |gap|."""
    return np.logaddexp(0.0, -np.asarray(psi_gap, dtype=np.float64))


def preference_loss(pairs, psi):
    """
    Σ Λ · log(1 + exp(−(ψ_j − ψ_i))) over ``pairs`` of one trajectory.

    Returns ``(loss, dloss/dψ)``; the gradient has the shape of ``psi``.
    """
    psi = np.asarray(psi, dtype=np.float64)
    grad = np.zeros_like(psi)
    terms = []
    for pair in pairs:
        gap = psi[pair.j] - psi[pair.i]
        terms.append(pair.weight * float(pair_loss(gap)))
        # d/dgap log(1 + e^-gap) = -sigmoid(-gap)
        slope = pair.weight * math.exp(-float(np.logaddexp(0.0, gap)))
        grad[pair.j] -= slope
        grad[pair.i] += slope
    return math.fsum(terms), grad


def signal_count(batch, keep_ratio=0.75, max_pairs=6):
    """(trajectory signals, preference signals) for a batch."""
    preference = 0
    for trajectory in batch:
        pairs = select_pairs(trajectory, keep_ratio, max_pairs)
        length = len(getattr(trajectory, 'rewards', trajectory))
        assert len(pairs) <= min(max_pairs, length * (length - 1) // 2)
        preference += len(pairs)
    return len(batch), preference
