"""
Multi-turn lead optimization environment.

One episode starts from a lead molecule. Each step takes the agent's action
text, scores the proposal against the reward table, keeps the best molecule
seen so far and reverts to it after a failed turn when it is better than the
current molecule.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

from chemgraph.canonical import canonicalize
from chemgraph.exceptions import ChemGraphError
from chemgraph.fingerprint import DEFAULT_NBITS, DEFAULT_RADIUS, similarity
from chemgraph.graph import MolecularGraph
from chemgraph.smiles import parse_smiles
from oracle.exceptions import BudgetExhausted
from oracle.properties import MINIMIZE

from .actions import parse_action
from .exceptions import EpisodeFinished
from .guard import DEFAULT_MAX_CHAIN, structural_guard
from .rewards import Outcome, RewardTable, classify_change, compute_reward, weighted_change, weighted_objective
from .success import AUTO, SINGLE, check_success, resolve_mode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnvironmentSettings:
    gamma: float = 0.4
    horizon: int = 5
    rewards: RewardTable = field(default_factory=RewardTable)
    max_chain: Optional[int] = DEFAULT_MAX_CHAIN
    task_mode: str = AUTO
    radius: int = DEFAULT_RADIUS
    nbits: int = DEFAULT_NBITS


@dataclass
class Turn:
    index: int
    action: str
    outcome: Outcome
    reward: float
    feedback: str
    answer: Optional[str] = None
    smiles: Optional[str] = None
    similarity: Optional[float] = None
    scores: Optional[dict] = None
    change: Optional[float] = None
    success: bool = False
    reverted_to: Optional[int] = None
    done: bool = False

    def to_dict(self):
        data = asdict(self)
        data['outcome'] = self.outcome.value
        return data


@dataclass
class EpisodeState:
    lead: MolecularGraph
    lead_scores: dict
    specs: list
    settings: EnvironmentSettings
    current: MolecularGraph = None
    current_scores: dict = None
    current_step: int = 0
    best: MolecularGraph = None
    best_scores: dict = None
    best_step: int = 0
    t: int = 0
    done: bool = False
    last_reward: float = 0.0
    transcript: list = field(default_factory=list)

    def __post_init__(self):
        if self.current is None:
            self.current, self.current_scores = self.lead, dict(self.lead_scores)
        if self.best is None:
            self.best, self.best_scores = self.lead, dict(self.lead_scores)

    @property
    def horizon(self):
        return self.settings.horizon

    @property
    def gamma(self):
        return self.settings.gamma

    @property
    def lead_smiles(self):
        return canonicalize(self.lead)

    @property
    def current_smiles(self):
        return canonicalize(self.current)

    @property
    def best_smiles(self):
        return canonicalize(self.best)

    @property
    def best_value(self):
        return weighted_objective(self.specs, self.best_scores)

    @property
    def current_similarity(self):
        return similarity(self.lead, self.current, self.settings.radius, self.settings.nbits)

    @property
    def remaining(self):
        return self.horizon - self.t


class StepResult(NamedTuple):
    reward: float
    done: bool
    feedback: str


def _arrow(delta):
    return f'↑{abs(delta):.3f}' if delta >= 0 else f'↓{abs(delta):.3f}'


def describe_properties(specs, scores):
    return ', '.join(f'{spec.name}: {scores[spec.name]:.3f}' for spec in specs)


def task_instruction(specs, gamma):
    goals = ', '.join(
        f'{"decrease" if spec.direction == MINIMIZE else "increase"} {spec.name}' for spec in specs
    )
    return (
        f'Modify the given molecule to {goals} while keeping structural changes as minimal as possible. '
        f'The modified molecule should maintain a structural similarity of at least {gamma:.2f} '
        f'with the original molecule.'
    )


class MoleculeEnvironment:
    """
    Environment shared by every episode of a run.

    Episodes own their EpisodeState; the oracle ledger is shared and may be
    used from several threads at once.
    """

    def __init__(self, ledger, specs, settings=None):
        self.ledger = ledger
        self.specs = list(specs)
        self.settings = settings or EnvironmentSettings()
        self.mode = resolve_mode(self.specs, self.settings.task_mode)

    def reset(self, lead, start=None) -> EpisodeState:
        """
        Fresh episode on ``lead``. With ``start`` the episode edits that
        molecule instead while similarity and success stay measured
        against the lead.
        """
        graph = lead if isinstance(lead, MolecularGraph) else parse_smiles(lead)
        scores = self.ledger.query(graph, self.specs)
        logger.debug(f'reset on {canonicalize(graph)}: {describe_properties(self.specs, scores)}')
        state = EpisodeState(lead=graph, lead_scores=scores, specs=self.specs, settings=self.settings)
        if start is not None:
            start = start if isinstance(start, MolecularGraph) else parse_smiles(start)
            start_scores = self.ledger.query(start, self.specs)
            state.current, state.current_scores = start, dict(start_scores)
            state.best, state.best_scores = start, dict(start_scores)
        return state

    def similarity(self, first, second):
        return similarity(first, second, self.settings.radius, self.settings.nbits)

    def check_success(self, state, scores, sim):
        return check_success(self.specs, scores, state.lead_scores, sim, state.gamma, self.mode)

    def step(self, state: EpisodeState, action: str) -> StepResult:
        if state.done or state.t >= state.horizon:
            raise EpisodeFinished(f'episode already finished after {state.t} steps')
        state.t += 1
        turn = self._evaluate(state, action)

        if turn.reward < 0 and not turn.done:
            self._maybe_rollback(state, turn)
        if state.t >= state.horizon:
            turn.done = True

        state.done = turn.done
        state.last_reward = turn.reward
        state.transcript.append(turn)
        logger.debug(f'step {state.t}/{state.horizon} {turn.outcome.value} reward={turn.reward:.3f}')
        return StepResult(turn.reward, turn.done, turn.feedback)

    def _evaluate(self, state, action):
        table = self.settings.rewards
        parsed = parse_action(action)
        if parsed.done:
            return Turn(state.t, action, Outcome.DONE, 0.0, 'Episode ended by the agent.', done=True)
        if parsed.answer is None:
            return self._invalid(state, action, None, 'Invalid SMILES: no <answer> tag found.')
        try:
            graph = parse_smiles(parsed.answer)
        except ChemGraphError as exc:
            return self._invalid(state, action, parsed.answer, f'Invalid SMILES: {exc}')

        violation = structural_guard(graph, self.settings.max_chain)
        if violation is not None:
            return self._invalid(state, action, parsed.answer, violation.message)

        smiles = canonicalize(graph)
        if smiles == state.current_smiles:
            return Turn(
                state.t, action, Outcome.UNCHANGED, compute_reward(Outcome.UNCHANGED, table),
                'No modification: proposal is identical to the current molecule.',
                answer=parsed.answer, smiles=smiles,
            )

        sim = self.similarity(state.lead, graph)
        if sim < state.gamma:
            return Turn(
                state.t, action, Outcome.LOW_SIMILARITY,
                compute_reward(Outcome.LOW_SIMILARITY, table, gamma=state.gamma, similarity=sim),
                f'Similarity too low: {sim:.3f} < required {state.gamma:.3f}',
                answer=parsed.answer, smiles=smiles, similarity=sim,
            )

        try:
            scores = self.ledger.query(graph, self.specs)
        except BudgetExhausted:
            return Turn(
                state.t, action, Outcome.BUDGET_EXHAUSTED, 0.0, 'Oracle budget exhausted.',
                answer=parsed.answer, smiles=smiles, similarity=sim, done=True,
            )

        previous = state.current_scores
        change = weighted_change(self.specs, scores, previous)
        outcome = classify_change(change)
        reward = compute_reward(outcome, table, change=change)
        report = self.check_success(state, scores, sim)
        if report.success and outcome == Outcome.IMPROVED:
            reward += table.success_bonus

        state.current, state.current_scores, state.current_step = graph, scores, state.t
        if weighted_objective(self.specs, scores) > state.best_value:
            state.best, state.best_scores, state.best_step = graph, scores, state.t

        feedback = self._property_feedback(state, scores, previous, sim, outcome, report)
        return Turn(
            state.t, action, outcome, reward, feedback,
            answer=parsed.answer, smiles=smiles, similarity=sim, scores=dict(scores),
            change=change, success=report.success, done=report.success,
        )

    def _invalid(self, state, action, answer, feedback):
        return Turn(state.t, action, Outcome.INVALID, compute_reward(Outcome.INVALID, self.settings.rewards),
                    feedback, answer=answer)

    def _progress(self, spec, value, state):
        if self.mode == SINGLE:
            comparison = '≥' if spec.sign > 0 else '≤'
            return f'{value:.3f} {comparison} {spec.threshold:g}'
        gained = spec.improvement(value, state.lead_scores[spec.name])
        return f'{gained:+.3f} ≥ {spec.delta:g}'

    def _property_feedback(self, state, scores, previous, sim, outcome, report):
        deltas = ', '.join(
            f'{spec.name}: {scores[spec.name]:.3f} ({_arrow(scores[spec.name] - previous[spec.name])})'
            for spec in self.specs
        )
        lines = [f'Similarity: {sim:.3f}, {deltas}']
        if report.success:
            bonus = self.settings.rewards.success_bonus
            lines.append('OUTSTANDING! All targets achieved!' + (f' Success bonus: +{bonus:g}' if bonus else ''))
        for spec in self.specs:
            moved = spec.improvement(scores[spec.name], previous[spec.name])
            met = report.per_property[spec.name]
            progress = self._progress(spec, scores[spec.name], state)
            if moved > 0 and met:
                lines.append(f'Great {spec.name} improvement! Threshold achieved ({progress})!')
            elif moved > 0:
                lines.append(f'Great {spec.name} improvement!')
            elif met:
                lines.append(f'{spec.name} threshold achieved ({progress})!')
            elif moved < 0 and outcome == Outcome.IMPROVED:
                lines.append(f'However, {spec.name} decreased. Try to improve {spec.name}.')
            elif moved < 0:
                lines.append(f'{spec.name} decreased. Try to improve {spec.name}.')
        return '\n'.join(lines)

    def _maybe_rollback(self, state, turn):
        if state.best_smiles == state.current_smiles:
            return
        if state.best_value <= weighted_objective(self.specs, state.current_scores):
            return
        state.current, state.current_scores, state.current_step = state.best, dict(state.best_scores), state.best_step
        turn.reverted_to = state.best_step
        turn.feedback += f'\nEnvironment reverted to best molecule (step {state.best_step})'
        logger.debug(f'reverted to best molecule from step {state.best_step}')

    def render_observation(self, state: EpisodeState) -> str:
        """Plain-text observation for text policies."""
        if not state.transcript:
            lines = [
                task_instruction(self.specs, state.gamma),
                f'Original Molecule: {state.lead_smiles}',
                f'Original properties: {describe_properties(self.specs, state.lead_scores)}',
            ]
            if state.current_smiles != state.lead_smiles:
                lines.append(f'Starting Molecule: {state.current_smiles}')
                lines.append(f'Starting properties: {describe_properties(self.specs, state.current_scores)}')
            lines.append(f'You have {state.remaining} actions left.')
            return '\n'.join(lines)
        last = state.transcript[-1]
        return '\n'.join([
            f'State: Step {state.t} of {state.horizon}',
            f'Current Molecule: {state.current_smiles}',
            f'Current properties: {describe_properties(self.specs, state.current_scores)}',
            last.feedback,
            f'Reward: {last.reward:.3f}',
            f'You have {state.remaining} actions left.',
        ])

    def replay(self, lead, actions):
        """Run a fixed action sequence from a fresh reset."""
        state = self.reset(lead)
        for action in actions:
            if state.done:
                break
            self.step(state, action)
        return state


def write_transcript(state, handle):
    """One JSON object per turn, keys sorted."""
    for turn in state.transcript:
        handle.write(json.dumps(turn.to_dict(), sort_keys=True, ensure_ascii=False) + '\n')
