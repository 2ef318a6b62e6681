"""
Agents turn an episode state into action text for ``MoleculeEnvironment.step``.

``LinearPolicyAgent`` wraps the built-in linear-softmax policy and keeps the
sampling decision so trainers can recompute log-probabilities and gradients.
``TextPolicyAgent`` wraps any ``prompt -> completion`` callable, such as an
external language model; it has no gradients and is used for inference only.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

from chemgraph.canonical import canonicalize
from environment.actions import format_action

from .edits import apply_edit, enumerate_edits, load_fragment_library
from .exceptions import IllegalEdit
from .features import featurize
from .linear import Decision, decide

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AgentStep:
    text: str
    decision: Optional[Decision] = None

    @property
    def logp(self):
        return None if self.decision is None else self.decision.logp


class LinearPolicyAgent:
    def __init__(self, params, library=None, cap=None):
        self.params = params
        self.library = load_fragment_library() if library is None else library
        self.cap = cap

    def with_temperature(self, tau):
        return LinearPolicyAgent(self.params.with_temperature(tau), self.library, self.cap)

    def act(self, env, state, rng) -> AgentStep:
        candidates = enumerate_edits(state.current, self.library, self.cap)
        if not candidates:
            logger.debug(f'no legal edits for {state.current_smiles}, ending episode')
            return AgentStep(format_action(done=True))
        decision = decide(self.params, featurize(state), candidates, rng)
        try:
            edited = apply_edit(state.current, decision.action, self.library)
        except IllegalEdit as exc:
            # no answer tag, so the environment scores it as an invalid proposal
            logger.warning(f'{state.current_smiles}: {exc}')
            return AgentStep(format_action(thought=str(exc)), decision)
        return AgentStep(format_action(canonicalize(edited), thought=decision.action.describe()), decision)


class TextPolicyAgent:
    def __init__(self, generate: Callable[[str], str]):
        self.generate = generate

    def with_temperature(self, tau):
        return self

    def act(self, env, state, rng) -> AgentStep:
        return AgentStep(self.generate(env.render_observation(state)))
