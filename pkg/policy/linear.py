"""
Linear-softmax edit policy.

Every candidate edit belongs to an action class (``replace:N``, ``delete``,
``append:phenyl``, ...). θ holds one weight column per class and a
candidate's logit is ``features @ θ[:, class] / τ``; candidates of the same
class share a logit.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .edits import REPLACEMENT_ELEMENTS, enumerate_edits, load_fragment_library
from .exceptions import CheckpointError, NoLegalEdits, PolicyError
from .features import NUM_FEATURES, featurize

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'polo-linear-policy'
CHECKPOINT_VERSION = 1

DEFAULT_BETA = 0.1
DEFAULT_TAU = 0.9


def action_classes(library=None):
    library = load_fragment_library() if library is None else library
    return (
        tuple(f'replace:{element}' for element in REPLACEMENT_ELEMENTS)
        + ('delete',)
        + tuple(f'append:{fragment_id}' for fragment_id in library.ids)
    )


@dataclass(eq=False)
class PolicyParams:
    theta: np.ndarray
    classes: tuple
    beta: float = DEFAULT_BETA
    tau: float = DEFAULT_TAU
    _class_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.classes = tuple(self.classes)
        if self.theta.ndim != 2 or self.theta.shape[1] != len(self.classes):
            raise PolicyError(f'theta shape {self.theta.shape} does not match {len(self.classes)} action classes')
        if not np.all(np.isfinite(self.theta)):
            raise PolicyError('theta has non-finite entries')
        if not self.tau > 0:
            raise PolicyError('sampling temperature must be positive')
        self._class_index = {name: column for column, name in enumerate(self.classes)}

    @classmethod
    def zeros(cls, classes=None, num_features=NUM_FEATURES, **kwargs):
        classes = classes or action_classes()
        return cls(np.zeros((num_features, len(classes))), classes, **kwargs)

    @classmethod
    def random(cls, rng, scale=0.1, classes=None, num_features=NUM_FEATURES, **kwargs):
        classes = classes or action_classes()
        return cls(rng.normal(0.0, scale, size=(num_features, len(classes))), classes, **kwargs)

    @property
    def shape(self):
        return self.theta.shape

    def copy(self):
        return PolicyParams(self.theta.copy(), self.classes, beta=self.beta, tau=self.tau)

    def with_temperature(self, tau):
        return PolicyParams(self.theta, self.classes, beta=self.beta, tau=tau)

    def column(self, action):
        try:
            return self._class_index[action.action_class]
        except KeyError:
            raise PolicyError(f'action class {action.action_class!r} is not in the policy')


class ReferencePolicy:
    """Frozen copy of a policy, used as π_ref."""

    def __init__(self, params):
        theta = params.theta.copy()
        theta.setflags(write=False)
        self.params = PolicyParams(theta, params.classes, beta=params.beta, tau=params.tau)

    def logprob(self, features, candidates, chosen):
        return action_logprobs(self.params, features, candidates)[chosen]


def snapshot_reference(params) -> ReferencePolicy:
    return ReferencePolicy(params)


def class_columns(params, candidates) -> np.ndarray:
    return np.array([params.column(action) for action in candidates], dtype=np.int64)


def action_logits(params, features, candidates, columns=None) -> np.ndarray:
    if not len(candidates):
        raise NoLegalEdits('no candidate actions')
    columns = class_columns(params, candidates) if columns is None else columns
    return (np.asarray(features) @ params.theta)[columns] / params.tau


def log_softmax(logits) -> np.ndarray:
    shifted = logits - np.max(logits)
    return shifted - np.log(np.sum(np.exp(shifted)))


def action_logprobs(params, features, candidates, columns=None) -> np.ndarray:
    return log_softmax(action_logits(params, features, candidates, columns))


def grad_logprob(params, features, candidates, chosen, columns=None) -> np.ndarray:
    """∇θ log π(chosen): column c gets (1[c = class(chosen)] − Σ_{a∈c} p_a) · features / τ."""
    columns = class_columns(params, candidates) if columns is None else columns
    probs = np.exp(action_logprobs(params, features, candidates, columns))
    weights = -np.bincount(columns, weights=probs, minlength=len(params.classes))
    weights[columns[chosen]] += 1.0
    return np.outer(np.asarray(features), weights) / params.tau


def psi(params, reference, features, candidates, chosen) -> float:
    """β-scaled log-ratio between the live and the reference policy."""
    live = action_logprobs(params, features, candidates)[chosen]
    return params.beta * float(live - reference.logprob(features, candidates, chosen))


@dataclass(frozen=True, eq=False)
class Decision:
    features: np.ndarray
    candidates: tuple
    columns: np.ndarray
    chosen: int
    logp: float

    @property
    def action(self):
        return self.candidates[self.chosen]


def decide(params, features, candidates, rng) -> Decision:
    columns = class_columns(params, candidates)
    logprobs = action_logprobs(params, features, candidates, columns)
    chosen = int(rng.choice(len(candidates), p=np.exp(logprobs)))
    return Decision(np.asarray(features), tuple(candidates), columns, chosen, float(logprobs[chosen]))


def sample_action(params, state, rng, library=None, cap=None):
    """Sample an edit for the state's current molecule; returns (EditAction, log-prob)."""
    candidates = enumerate_edits(state.current, library, cap)
    if not candidates:
        raise NoLegalEdits(f'no legal edits for {state.current_smiles}')
    decision = decide(params, featurize(state), candidates, rng)
    return decision.action, decision.logp


def checkpoint_payload(params) -> dict:
    return {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'shape': list(params.shape),
        'classes': list(params.classes),
        'beta': params.beta,
        'tau': params.tau,
        'theta': params.theta.tolist(),
    }


def params_from_payload(payload, source='checkpoint') -> PolicyParams:
    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise CheckpointError(f'{source} is not a policy checkpoint')
    if payload.get('version') != CHECKPOINT_VERSION:
        raise CheckpointError(f'unsupported checkpoint version {payload.get("version")}')
    theta = np.asarray(payload['theta'], dtype=np.float64)
    if list(theta.shape) != payload['shape'] or theta.shape[1] != len(payload['classes']):
        raise CheckpointError(f'checkpoint shape header {payload["shape"]} does not match its weights')
    try:
        return PolicyParams(theta, payload['classes'], beta=payload['beta'], tau=payload['tau'])
    except PolicyError as exc:
        raise CheckpointError(str(exc))


def save_checkpoint(params, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(checkpoint_payload(params), sort_keys=True) + '\n', encoding='utf-8')
    logger.info(f'Saved policy checkpoint {path} with shape {params.shape}')


def load_checkpoint(path) -> PolicyParams:
    try:
        payload = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, ValueError) as exc:
        raise CheckpointError(f'cannot read checkpoint {path}: {exc}')
    return params_from_payload(payload, path)
