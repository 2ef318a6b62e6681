import logging
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import NonFiniteGradient
from .objective import pgpo_objective, prepare_batch

logger = logging.getLogger(__name__)


class Adam:
    def __init__(self, learning_rate=5e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, theta, grad) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_by_global_norm(grad, max_norm):
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm), norm
    return grad, norm


@dataclass
class UpdateDiagnostics:
    trajectory_loss: float
    preference_loss: float
    total_loss: float
    mean_ratio: float
    clip_fraction: float
    pair_count: int
    grad_norm: float
    trajectory_signals: int
    preference_signals: int

    def to_dict(self):
        return asdict(self)


def apply_update(prepared, params, config, optimizer=None):
    """One optimizer step on already prepared trajectories."""
    optimizer = optimizer or Adam(config.learning_rate)
    value = pgpo_objective(params, prepared, config)
    if not np.all(np.isfinite(value.grad)) or not np.isfinite(value.loss):
        raise NonFiniteGradient(f'non-finite gradient or loss ({value.loss}) on {len(prepared)} trajectories')
    grad, norm = clip_by_global_norm(value.grad, config.max_grad_norm)

    updated = params.copy()
    updated.theta = optimizer.step(params.theta, grad)
    diagnostics = UpdateDiagnostics(
        trajectory_loss=value.trajectory_loss,
        preference_loss=value.preference_loss,
        total_loss=value.loss,
        mean_ratio=value.mean_ratio,
        clip_fraction=value.clip_fraction,
        pair_count=value.pair_count,
        grad_norm=norm,
        trajectory_signals=len(prepared),
        preference_signals=value.pair_count,
    )
    logger.debug(f'update: loss={value.loss:.6f} pairs={value.pair_count} grad_norm={norm:.4f}')
    return updated, diagnostics


def pgpo_update(batch, params, reference, config, optimizer=None):
    """Prepare ``batch`` against ``reference`` and take one gradient step."""
    return apply_update(prepare_batch(batch, reference, config), params, config, optimizer)
