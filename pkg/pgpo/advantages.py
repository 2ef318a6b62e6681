"""
Generalized advantage estimation with a per-turn batch baseline.

There is no learned critic: V_t is the mean discounted return-to-go observed
at turn index t across the batch, and the state after the last turn is
terminal (V = 0).
"""
import numpy as np

from .exceptions import LengthMismatch


def compute_gae(rewards, values, discount, gae_lambda):
    """
    Backward GAE recursion.

    ``values`` carries one bootstrap entry past the last reward. Returns
    ``(advantages, returns)`` with ``returns = advantages + values[:-1]``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (rewards.shape[0] + 1,):
        raise LengthMismatch(f'expected {rewards.shape[0] + 1} values for {rewards.shape[0]} rewards, got {values.shape[0]}')
    advantages = np.zeros_like(rewards)
    running = 0.0
    for t in reversed(range(rewards.shape[0])):
        delta = rewards[t] + discount * values[t + 1] - values[t]
        running = delta + discount * gae_lambda * running
        advantages[t] = running
    return advantages, advantages + values[:-1]


def returns_to_go(rewards, discount) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=np.float64)
    returns = np.zeros_like(rewards)
    running = 0.0
    for t in reversed(range(rewards.shape[0])):
        running = rewards[t] + discount * running
        returns[t] = running
    return returns


def turn_baselines(trajectories, discount) -> np.ndarray:
    """Mean return-to-go at each turn index over the trajectories that reach it."""
    horizon = max((len(trajectory) for trajectory in trajectories), default=0)
    totals = np.zeros(horizon)
    counts = np.zeros(horizon)
    for trajectory in trajectories:
        returns = returns_to_go(trajectory.rewards, discount)
        totals[:len(returns)] += returns
        counts[:len(returns)] += 1
    return np.divide(totals, counts, out=np.zeros(horizon), where=counts > 0)


def batch_advantages(trajectories, discount, gae_lambda):
    """Advantages per trajectory, in batch order."""
    baselines = turn_baselines(trajectories, discount)
    advantages = []
    for trajectory in trajectories:
        values = np.append(baselines[:len(trajectory)], 0.0)
        advantages.append(compute_gae(trajectory.rewards, values, discount, gae_lambda)[0])
    return advantages
