import io
import json
import math

from django.test import SimpleTestCase

from chemgraph.canonical import canonicalize
from chemgraph.exceptions import ChemGraphError, UnbalancedBracket
from chemgraph.fingerprint import morgan_fingerprint, tanimoto
from chemgraph.smiles import parse_smiles
from oracle.exceptions import BudgetExhausted
from oracle.ledger import OracleLedger
from oracle.properties import PropertySpec, property_spec
from oracle.table import TableOracle

from .actions import extract_answer, format_action, parse_action
from .env import EnvironmentSettings, MoleculeEnvironment, write_transcript
from .exceptions import EpisodeFinished, NoAnswerTag
from .guard import longest_carbon_chain, structural_guard
from .rewards import Outcome, RewardTable, compute_reward
from .success import check_success

SCORE = PropertySpec('score', threshold=100.0, delta=100.0)


def table(values):
    return TableOracle(lookup_table(values))


def make_env(scores, specs=(SCORE,), budget=None, **settings):
    """``scores`` maps property name -> {SMILES: value}."""
    ledger = OracleLedger(budget=budget, oracles={name: table(values) for name, values in scores.items()})
    return MoleculeEnvironment(ledger, list(specs), EnvironmentSettings(**settings))


def lookup_table(values):
    return {canonicalize(parse_smiles(smiles)): score for smiles, score in values.items()}


def fixture_env(scores, specs, gamma):
    # molecules missing from a fixture score 0
    oracles = {}
    for spec in specs:
        known = lookup_table(scores.get(spec.name, {}))
        oracles[spec.name] = lambda graph, known=known: known.get(canonicalize(graph), 0.0)
    return MoleculeEnvironment(OracleLedger(oracles=oracles), specs, EnvironmentSettings(gamma=gamma))


def answer(smiles):
    return format_action(smiles, thought='edit')


# (lead, action text, gamma, specs, {property: {SMILES: score}})
REWARD_CASES = [
    ('CCO', answer('C('), 0.4, [SCORE], {}),
    ('CCO', answer('C1CC'), 0.4, [SCORE], {}),
    ('CCO', answer('CC.O'), 0.4, [SCORE], {}),
    ('CCO', answer('[Xe]'), 0.4, [SCORE], {}),
    ('CCO', 'no tags here', 0.4, [SCORE], {}),
    ('CCO', answer('CCCCCCCCCCC'), 0.0, [SCORE], {}),
    ('CCO', answer('OCC'), 0.4, [SCORE], {}),
    ('CCO', answer('C(C)O'), 0.4, [SCORE], {}),
    ('c1ccccc1', answer('C1=CC=CC=C1'), 0.4, [SCORE], {}),
    ('CC(=O)O', '<answer>CC(O)=O</answer><think>same</think>', 0.4, [SCORE], {}),
    ('CCCCCCCCO', answer('c1ccccc1'), 0.4, [SCORE], {}),
    ('CCO', answer('CCN'), 0.95, [SCORE], {}),
    ('CC(C)CCO', answer('c1ccncc1'), 0.6, [SCORE], {}),
    ('CCO', answer('CCCO'), 0.0, [SCORE], {'score': {'CCO': 0.5, 'CCCO': 0.6}}),
    ('CCO', answer('CCN'), 0.0, [SCORE], {'score': {'CCO': 0.5, 'CCN': 0.2}}),
    ('CCO', answer('CC(C)O'), 0.0, [SCORE], {'score': {'CCO': 0.5, 'CC(C)O': 0.5}}),
    ('CCO', answer('CCOC'), 0.0, [SCORE], {'score': {'CCO': -1.25, 'CCOC': 3.5}}),
    ('CCO', answer('CCS'), 0.0, [SCORE.with_overrides(direction='minimize')],
     {'score': {'CCO': 2.0, 'CCS': 1.5}}),
    ('CCO', answer('CCCl'), 0.0, [SCORE.with_overrides(direction='minimize')],
     {'score': {'CCO': 2.0, 'CCCl': 2.75}}),
    ('CCO', answer('CC(N)O'), 0.0, [SCORE.with_overrides(weight=2.5)],
     {'score': {'CCO': 0.1, 'CC(N)O': 0.3}}),
    ('CCO', answer('OCCO'), 0.0,
     [SCORE, PropertySpec('other', direction='minimize', weight=0.5)],
     {'score': {'CCO': 0.2, 'OCCO': 0.1}, 'other': {'CCO': 1.0, 'OCCO': 0.2}}),
    ('CCO', answer('CCOCC'), 0.0,
     [SCORE, PropertySpec('other', weight=3.0)],
     {'score': {'CCO': 0.2, 'CCOCC': 0.9}, 'other': {'CCO': 1.0, 'CCOCC': 0.7}}),
    ('CCO', '<answer>CC</answer> then <answer>CCC=O</answer>', 0.0, [SCORE],
     {'score': {'CCO': 0.4, 'CC': 9.0, 'CCC=O': 0.1}}),
    ('c1ccccc1', answer('Cc1ccccc1'), 0.0, [SCORE], {'score': {'c1ccccc1': 1.0, 'Cc1ccccc1': 1.0625}}),
]


def score_of(scores, name, graph):
    return lookup_table(scores.get(name, {})).get(canonicalize(graph), 0.0)


def expected_reward(lead, action, gamma, specs, scores):
    """Reward table evaluated directly from its formulas."""
    try:
        proposal = parse_smiles(extract_answer(action))
    except (NoAnswerTag, ChemGraphError):
        return Outcome.INVALID, -0.5
    if longest_carbon_chain(proposal) > 10:
        return Outcome.INVALID, -0.5
    lead_graph = parse_smiles(lead)
    if canonicalize(proposal) == canonicalize(lead_graph):
        return Outcome.UNCHANGED, -0.3
    sim = tanimoto(morgan_fingerprint(lead_graph), morgan_fingerprint(proposal))
    if sim < gamma:
        return Outcome.LOW_SIMILARITY, -2 * (gamma - sim)
    change = math.fsum(
        spec.weight * spec.sign * (score_of(scores, spec.name, proposal) - score_of(scores, spec.name, lead_graph))
        for spec in specs
    )
    if change > 0:
        return Outcome.IMPROVED, 5 * abs(change)
    return Outcome.DEGRADED, -abs(change)


class RewardTableTests(SimpleTestCase):
    def test_fixture_matches_table_formulas(self):
        covered = set()
        for lead, action, gamma, specs, scores in REWARD_CASES:
            with self.subTest(lead=lead, action=action):
                env = fixture_env(scores, specs, gamma)
                state = env.reset(lead)
                reward, _, _ = env.step(state, action)
                outcome, expected = expected_reward(lead, action, gamma, specs, scores)
                self.assertAlmostEqual(reward, expected, delta=1e-12)
                self.assertEqual(state.transcript[-1].outcome, outcome)
                covered.add(outcome)
        self.assertEqual(covered, {
            Outcome.INVALID, Outcome.UNCHANGED, Outcome.LOW_SIMILARITY, Outcome.DEGRADED, Outcome.IMPROVED,
        })
        self.assertGreaterEqual(len(REWARD_CASES), 20)

    def test_closed_form_values(self):
        self.assertAlmostEqual(compute_reward(Outcome.LOW_SIMILARITY, gamma=0.4, similarity=0.3), -0.2, places=12)
        self.assertAlmostEqual(compute_reward(Outcome.IMPROVED, change=0.1), 0.5, places=12)
        self.assertEqual(compute_reward(Outcome.INVALID), -0.5)
        self.assertEqual(compute_reward(Outcome.UNCHANGED), -0.3)
        self.assertAlmostEqual(compute_reward(Outcome.DEGRADED, change=-0.25), -0.25, places=12)
        self.assertEqual(compute_reward(Outcome.DONE), 0.0)

    def test_table_constants_are_configurable(self):
        custom = RewardTable(invalid=-1.0, amplification=2.0)
        self.assertEqual(compute_reward(Outcome.INVALID, custom), -1.0)
        self.assertAlmostEqual(compute_reward(Outcome.IMPROVED, custom, change=0.5), 1.0)
        self.assertEqual(RewardTable.from_dict({'unchanged': -0.1, 'unknown': 3}).unchanged, -0.1)


class ExtractAnswerTests(SimpleTestCase):
    def test_single_answer(self):
        self.assertEqual(extract_answer('<think>x</think><answer>CCO</answer>'), 'CCO')

    def test_last_answer_wins(self):
        self.assertEqual(extract_answer('<answer>A</answer><answer>B</answer>'), 'B')

    def test_missing_tag(self):
        with self.assertRaises(NoAnswerTag):
            extract_answer('no tags here')

    def test_answer_is_trimmed_and_done_reported(self):
        parsed = parse_action('<answer>\n  CCO \n</answer> [DONE]')
        self.assertEqual(parsed.answer, 'CCO')
        self.assertTrue(parsed.done)
        self.assertFalse(parse_action('<answer>CCO</answer>').done)


class StructuralGuardTests(SimpleTestCase):
    def test_long_chain_is_rejected(self):
        violation = structural_guard(parse_smiles('C' * 11))
        self.assertIsNotNone(violation)
        self.assertEqual(violation.message, 'Carbon chain too long: 11 atoms (limit ≤ 10)')

    def test_boundary_chain_passes(self):
        self.assertIsNone(structural_guard(parse_smiles('C' * 10)))

    def test_rings_are_exempt(self):
        self.assertIsNone(structural_guard(parse_smiles('c1ccccc1')))
        self.assertEqual(longest_carbon_chain(parse_smiles('c1ccccc1')), 0)

    def test_branched_chain_counts_longest_path(self):
        self.assertEqual(longest_carbon_chain(parse_smiles('CC(CCC)CCCC')), 8)
        self.assertEqual(longest_carbon_chain(parse_smiles('CCCCCOCCCCC')), 5)

    def test_guard_can_be_switched_off(self):
        self.assertIsNone(structural_guard(parse_smiles('C' * 14), max_chain=None))


class SuccessCriteriaTests(SimpleTestCase):
    def test_single_property_threshold(self):
        qed = property_spec('qed_proxy')
        report = check_success([qed], {'qed_proxy': 0.92}, {'qed_proxy': 0.7}, similarity=0.5, gamma=0.4)
        self.assertTrue(report.success)

    def test_multi_property_needs_every_delta(self):
        specs = [property_spec('qed_proxy'), property_spec('logp_proxy')]
        report = check_success(
            specs, {'qed_proxy': 0.75, 'logp_proxy': 1.5}, {'qed_proxy': 0.6, 'logp_proxy': 1.0},
            similarity=0.6, gamma=0.4,
        )
        self.assertTrue(report.per_property['qed_proxy'])
        self.assertFalse(report.per_property['logp_proxy'])
        self.assertFalse(report.success)

    def test_similarity_gate(self):
        qed = property_spec('qed_proxy')
        report = check_success([qed], {'qed_proxy': 0.99}, {'qed_proxy': 0.1}, similarity=0.39, gamma=0.4)
        self.assertFalse(report.success)

    def test_minimized_property_threshold(self):
        sa = property_spec('sa_proxy')
        self.assertTrue(check_success([sa], {'sa_proxy': 2.0}, {'sa_proxy': 4.0}, 1.0, 0.4).success)
        self.assertTrue(check_success([sa], {'sa_proxy': 3.0}, {'sa_proxy': 4.0}, 1.0, 0.4, mode='multi').success)
        self.assertFalse(check_success([sa], {'sa_proxy': 3.8}, {'sa_proxy': 4.0}, 1.0, 0.4, mode='multi').success)


class EpisodeTests(SimpleTestCase):
    scores = {'score': {'CCO': 0.5, 'CCCO': 0.7, 'CCCCO': 0.6, 'CCCCCO': 0.75, 'CCN': 0.1}}

    def test_reset(self):
        env = make_env(self.scores)
        state = env.reset('CCO')
        self.assertEqual(state.t, 0)
        self.assertEqual(state.current_similarity, 1.0)
        self.assertEqual(state.current_smiles, 'CCO')
        self.assertEqual(env.ledger.calls, 1)

    def test_reset_from_a_starting_molecule(self):
        env = make_env(self.scores, gamma=0.0)
        state = env.reset('CCO', start='CCCO')
        self.assertEqual((state.lead_smiles, state.current_smiles, state.best_smiles), ('CCO', 'CCCO', 'CCCO'))
        self.assertEqual(state.lead_scores, {'score': 0.5})
        self.assertEqual(state.current_scores, {'score': 0.7})
        self.assertLess(state.current_similarity, 1.0)
        opening = env.render_observation(state)
        self.assertIn('Original Molecule: CCO', opening)
        self.assertIn('Starting Molecule: CCCO', opening)
        self.assertEqual(env.ledger.calls, 2)

    def test_reset_rejects_bad_lead(self):
        with self.assertRaises(UnbalancedBracket):
            make_env(self.scores).reset('C(')

    def test_reset_with_exhausted_ledger(self):
        with self.assertRaises(BudgetExhausted):
            make_env(self.scores, budget=0).reset('CCO')

    def test_rollback_after_degradation(self):
        env = make_env(self.scores, gamma=0.0)
        state = env.reset('CCO')
        env.step(state, answer('CCCO'))
        reward, done, feedback = env.step(state, answer('CCCCO'))
        self.assertAlmostEqual(reward, -0.1, places=12)
        self.assertFalse(done)
        self.assertIn('Environment reverted to best molecule (step 1)', feedback)
        self.assertEqual(state.current_smiles, canonicalize(parse_smiles('CCCO')))
        self.assertEqual(state.transcript[-1].reverted_to, 1)

        # the next change is measured against the restored molecule
        reward, _, _ = env.step(state, answer('CCCCCO'))
        self.assertAlmostEqual(reward, 5 * (0.75 - 0.7), places=12)

    def test_no_rollback_when_current_is_best(self):
        env = make_env(self.scores, gamma=0.0)
        state = env.reset('CCO')
        _, _, feedback = env.step(state, answer('C('))
        self.assertNotIn('reverted', feedback)
        self.assertIsNone(state.transcript[-1].reverted_to)

    def test_best_score_never_decreases(self):
        env = make_env(self.scores, gamma=0.0, horizon=8)
        state = env.reset('CCO')
        best = state.best_value
        for smiles in ['CCN', 'CCCO', 'X', 'CCCCO', 'CCO', 'CCCCCO', 'CCCCO', 'CCCO']:
            if state.done:
                break
            env.step(state, answer(smiles))
            self.assertGreaterEqual(state.best_value, best)
            best = state.best_value
        self.assertLessEqual(len(state.transcript), 8)

    def test_horizon_ends_episode(self):
        env = make_env(self.scores, gamma=0.0, horizon=2)
        state = env.reset('CCO')
        self.assertFalse(env.step(state, answer('C('))[1])
        self.assertTrue(env.step(state, answer('C('))[1])
        with self.assertRaises(EpisodeFinished):
            env.step(state, answer('CCCO'))

    def test_done_sentinel(self):
        env = make_env(self.scores)
        state = env.reset('CCO')
        reward, done, _ = env.step(state, '<think>enough</think>[DONE]<answer>CCCO</answer>')
        self.assertEqual((reward, done), (0.0, True))
        self.assertEqual(env.ledger.calls, 1)

    def test_success_ends_episode(self):
        spec = SCORE.with_overrides(threshold=0.65)
        env = make_env(self.scores, specs=[spec], gamma=0.0)
        state = env.reset('CCO')
        reward, done, feedback = env.step(state, answer('CCCO'))
        self.assertTrue(done)
        self.assertTrue(state.transcript[-1].success)
        self.assertIn('Great score improvement! Threshold achieved (0.700 ≥ 0.65)!', feedback)

    def test_success_bonus(self):
        spec = SCORE.with_overrides(threshold=0.65)
        env = make_env(self.scores, specs=[spec], gamma=0.0, rewards=RewardTable(success_bonus=11.0))
        state = env.reset('CCO')
        reward, _, feedback = env.step(state, answer('CCCO'))
        self.assertAlmostEqual(reward, 5 * 0.2 + 11.0, places=12)
        self.assertIn('Success bonus: +11', feedback)

    def test_budget_exhaustion_ends_episode(self):
        env = make_env(self.scores, budget=1, gamma=0.0)
        state = env.reset('CCO')
        reward, done, feedback = env.step(state, answer('CCCO'))
        self.assertEqual((reward, done, feedback), (0.0, True, 'Oracle budget exhausted.'))

    def test_rejected_proposals_do_not_charge(self):
        env = make_env({'score': {'CCCCCCCCO': 0.1}}, budget=1, gamma=0.4)
        state = env.reset('CCCCCCCCO')
        env.step(state, answer('c1ccccc1'))
        env.step(state, answer('CCCCCCCCO'))
        env.step(state, answer('C('))
        self.assertEqual(env.ledger.calls, 1)

    def test_mixed_direction_feedback(self):
        specs = [SCORE, PropertySpec('other', threshold=100.0, delta=100.0)]
        scores = {'score': {'CCO': 0.2, 'CCCO': 0.9}, 'other': {'CCO': 1.0, 'CCCO': 0.8}}
        env = make_env(scores, specs=specs, gamma=0.0)
        state = env.reset('CCO')
        _, _, feedback = env.step(state, answer('CCCO'))
        self.assertIn('score: 0.900 (↑0.700), other: 0.800 (↓0.200)', feedback)
        self.assertIn('However, other decreased. Try to improve other.', feedback)

    def test_replay_reproduces_rewards(self):
        actions = [answer(s) for s in ('CCN', 'CCCO', 'CCCCO', 'CCCCCO', 'CCCO')]
        first = make_env(self.scores, gamma=0.0).replay('CCO', actions)
        second = make_env(self.scores, gamma=0.0).replay('CCO', actions)
        self.assertEqual([t.reward for t in first.transcript], [t.reward for t in second.transcript])

    def test_observation_text(self):
        env = make_env(self.scores, gamma=0.0)
        state = env.reset('CCO')
        opening = env.render_observation(state)
        self.assertIn('Original Molecule: CCO', opening)
        self.assertIn('You have 5 actions left.', opening)
        env.step(state, answer('CCCO'))
        self.assertIn('State: Step 1 of 5', env.render_observation(state))

    def test_transcript_is_line_delimited_json(self):
        env = make_env(self.scores, gamma=0.0)
        state = env.replay('CCO', [answer('CCCO'), answer('C(')])
        handle = io.StringIO()
        write_transcript(state, handle)
        lines = handle.getvalue().splitlines()
        self.assertEqual(len(lines), 2)
        records = [json.loads(line) for line in lines]
        self.assertEqual(records[0]['outcome'], 'improved')
        self.assertEqual(records[1]['reward'], -0.5)
        self.assertEqual(list(records[0]), sorted(records[0]))
