"""
Combined objective: clipped trajectory surrogate plus λ_pref times the turn
preference loss, with its analytic gradient in θ.

Both terms depend on θ only through the per-turn log-probabilities, so each
term reports dloss/dlogp per turn and ``_accumulate`` chains those through
``grad_logprob`` in a fixed trajectory-then-turn order.
"""
from dataclasses import dataclass

import numpy as np

from policy.linear import action_logprobs, grad_logprob

from .advantages import batch_advantages
from .preference import preference_loss, select_pairs


@dataclass(eq=False)
class PreparedTrajectory:
    trajectory: object
    advantages: np.ndarray
    ref_logps: np.ndarray
    pairs: list


@dataclass(eq=False)
class ObjectiveValue:
    loss: float
    trajectory_loss: float
    preference_loss: float
    grad: np.ndarray
    mean_ratio: float
    clip_fraction: float
    pair_count: int


def prepare_batch(trajectories, reference, config) -> list:
    """Advantages, reference log-probs and preference pairs, fixed for the whole update."""
    trajectories = list(trajectories)
    advantages = batch_advantages(trajectories, config.discount, config.gae_lambda)
    prepared = []
    for trajectory, advantage in zip(trajectories, advantages):
        ref_logps = np.array(
            [reference.logprob(turn.features, turn.candidates, turn.chosen) for turn in trajectory.turns],
            dtype=np.float64,
        )
        pairs = select_pairs(trajectory, config.pair_keep_ratio, config.max_pairs)
        prepared.append(PreparedTrajectory(trajectory, advantage, ref_logps, pairs))
    return prepared


def ppo_surrogate(old_logp, new_logp, advantage, epsilon):
    """min(ρ·Â, clip(ρ, 1−ε, 1+ε)·Â) with ρ = exp(new − old)."""
    ratio = np.exp(np.asarray(new_logp, dtype=np.float64) - old_logp)
    return np.minimum(ratio * advantage, np.clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)


def surrogate_slope(ratio, advantage, epsilon):
    """d surrogate / d new_logp; zero where the clipped branch is the minimum."""
    ratio = np.asarray(ratio, dtype=np.float64)
    unclipped = ratio * advantage
    active = (unclipped < np.clip(ratio, 1 - epsilon, 1 + epsilon) * advantage) | (np.abs(ratio - 1) <= epsilon)
    return np.where(active, unclipped, 0.0)


def new_logprobs(params, prepared) -> list:
    return [
        np.array([
            action_logprobs(params, turn.features, turn.candidates, turn.columns)[turn.chosen]
            for turn in item.trajectory.turns
        ], dtype=np.float64)
        for item in prepared
    ]


def trajectory_terms(prepared, logps, epsilon):
    """J_traj averaged over trajectories, dJ/dlogp per turn, and the ratios."""
    count = max(len(prepared), 1)
    total = 0.0
    slopes, ratios = [], []
    for item, logp in zip(prepared, logps):
        old = item.trajectory.old_logps
        ratio = np.exp(logp - old)
        total += float(np.sum(ppo_surrogate(old, logp, item.advantages, epsilon)))
        slopes.append(surrogate_slope(ratio, item.advantages, epsilon) / count)
        ratios.append(ratio)
    return total / count, slopes, ratios


def preference_terms(prepared, logps, beta):
    """Preference loss averaged over trajectories and dL/dlogp per turn."""
    count = max(len(prepared), 1)
    total = 0.0
    slopes = []
    for item, logp in zip(prepared, logps):
        psi = beta * (logp - item.ref_logps)
        loss, dpsi = preference_loss(item.pairs, psi)
        total += loss
        slopes.append(beta * dpsi / count)
    return total / count, slopes


def _accumulate(params, prepared, coefficients):
    grad = np.zeros_like(params.theta)
    for item, row in zip(prepared, coefficients):
        for turn, coefficient in zip(item.trajectory.turns, row):
            if coefficient != 0.0:
                grad += coefficient * grad_logprob(params, turn.features, turn.candidates, turn.chosen, turn.columns)
    return grad


def trajectory_gradient(params, prepared, epsilon):
    """Gradient of −J_traj alone."""
    logps = new_logprobs(params, prepared)
    _, slopes, _ = trajectory_terms(prepared, logps, epsilon)
    return _accumulate(params, prepared, [-slope for slope in slopes])


def pgpo_objective(params, prepared, config) -> ObjectiveValue:
    """Loss −J_traj + λ_pref·L_pref and its gradient; the preference term is skipped when λ_pref = 0."""
    logps = new_logprobs(params, prepared)
    objective, traj_slopes, ratios = trajectory_terms(prepared, logps, config.clip_epsilon)
    coefficients = [-slope for slope in traj_slopes]
    pref_loss = 0.0
    loss = -objective
    if config.lambda_pref > 0:
        pref_loss, pref_slopes = preference_terms(prepared, logps, params.beta)
        coefficients = [c + config.lambda_pref * p for c, p in zip(coefficients, pref_slopes)]
        loss += config.lambda_pref * pref_loss

    flat = np.concatenate(ratios) if ratios else np.zeros(0)
    return ObjectiveValue(
        loss=float(loss),
        trajectory_loss=float(-objective),
        preference_loss=float(pref_loss),
        grad=_accumulate(params, prepared, coefficients),
        mean_ratio=float(flat.mean()) if flat.size else 1.0,
        clip_fraction=float(np.mean(np.abs(flat - 1) > config.clip_epsilon)) if flat.size else 0.0,
        pair_count=sum(len(item.pairs) for item in prepared),
    )
