import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from chemgraph.canonical import canonicalize
from chemgraph.smiles import parse_smiles
from environment.actions import parse_action
from environment.env import EnvironmentSettings, MoleculeEnvironment
from environment.rewards import Outcome
from oracle.ledger import OracleLedger
from oracle.properties import property_spec

from .agents import LinearPolicyAgent, TextPolicyAgent
from .edits import DONE, EditAction, EditKind, FragmentLibrary, apply_edit, enumerate_edits, load_fragment_library
from .exceptions import CheckpointError, IllegalEdit, NoLegalEdits
from .features import FEATURE_NAMES, NUM_FEATURES, featurize
from .linear import (
    PolicyParams, action_classes, action_logits, action_logprobs, decide, grad_logprob, load_checkpoint, psi,
    sample_action, save_checkpoint, snapshot_reference,
)

LEADS = ['CCO', 'c1ccccc1O', 'CC(=O)Nc1ccccc1', 'Cc1ccncc1', 'CC(C)CC#N', 'OCC(N)C(=O)O']

SMALL_CLASSES = ('replace:N', 'replace:O', 'delete', 'append:methyl')


def small_candidates():
    # two deletes share one column
    return [
        EditAction(EditKind.REPLACE, atom=0, element='N'),
        EditAction(EditKind.DELETE, atom=0),
        EditAction(EditKind.REPLACE, atom=1, element='O'),
        EditAction(EditKind.DELETE, atom=2),
        EditAction(EditKind.APPEND, atom=1, fragment='methyl'),
    ]


def distinct_candidates(count):
    elements = ['N', 'O', 'S', 'F', 'Cl', 'C']
    return [EditAction(EditKind.REPLACE, atom=1, element=element) for element in elements[:count]]


def make_env(gamma=0.4, horizon=5):
    specs = [property_spec('qed_proxy'), property_spec('logp_proxy')]
    return MoleculeEnvironment(OracleLedger(), specs, EnvironmentSettings(gamma=gamma, horizon=horizon))


def reference_logprobs(theta, features, columns, tau):
    logits = (features @ theta)[columns] / tau
    return logits - (np.max(logits) + np.log(np.sum(np.exp(logits - np.max(logits)))))


class ActionLogitsTests(SimpleTestCase):
    def test_zero_weights_give_uniform_distribution(self):
        params = PolicyParams.zeros()
        candidates = enumerate_edits(parse_smiles('CCO'))
        logprobs = action_logprobs(params, np.ones(NUM_FEATURES), candidates)
        np.testing.assert_allclose(logprobs, -math.log(len(candidates)), rtol=0, atol=1e-12)

    def test_doubling_temperature_halves_logits(self):
        rng = np.random.default_rng(3)
        params = PolicyParams.random(rng, scale=1.0)
        features = rng.normal(size=NUM_FEATURES)
        candidates = enumerate_edits(parse_smiles('CC(=O)Nc1ccccc1'))
        logits = action_logits(params, features, candidates)
        hotter = action_logits(params.with_temperature(2 * params.tau), features, candidates)
        np.testing.assert_allclose(hotter, logits / 2, rtol=1e-12)
        self.assertEqual(np.argmax(hotter), np.argmax(logits))

    def test_doubling_a_class_weight_raises_its_probability(self):
        rng = np.random.default_rng(5)
        features = rng.normal(size=6)
        theta = rng.normal(scale=0.3, size=(6, len(SMALL_CLASSES)))
        theta[:, 2] = 0.2 * features
        params = PolicyParams(theta, SMALL_CLASSES)
        candidates = small_candidates()
        before = np.exp(action_logprobs(params, features, candidates))[1]
        theta = theta.copy()
        theta[:, 2] *= 2
        after = np.exp(action_logprobs(PolicyParams(theta, SMALL_CLASSES), features, candidates))[1]
        self.assertGreater(after, before)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            params = PolicyParams.random(rng, scale=2.0)
            features = rng.normal(size=NUM_FEATURES)
            logprobs = action_logprobs(params, features, enumerate_edits(parse_smiles('c1ccccc1O')))
            self.assertTrue(np.all(np.isfinite(logprobs)))
            self.assertTrue(np.all(logprobs <= 0))
            self.assertAlmostEqual(float(np.sum(np.exp(logprobs))), 1.0, delta=1e-12)

    def test_empty_candidate_set(self):
        with self.assertRaises(NoLegalEdits):
            action_logits(PolicyParams.zeros(), np.ones(NUM_FEATURES), [])


class SamplingTests(SimpleTestCase):
    def test_fixed_seed_is_reproducible(self):
        env = make_env()
        params = PolicyParams.random(np.random.default_rng(0), scale=0.5)
        runs = []
        for _ in range(2):
            rng = np.random.default_rng(42)
            state = env.reset('CC(=O)Nc1ccccc1')
            runs.append([sample_action(params, state, rng) for _ in range(10)])
        self.assertEqual(runs[0], runs[1])

    def test_uniform_policy_over_four_actions(self):
        classes = tuple(action.action_class for action in distinct_candidates(4))
        params = PolicyParams.zeros(classes=classes, num_features=3)
        decision = decide(params, np.ones(3), distinct_candidates(4), np.random.default_rng(1))
        self.assertAlmostEqual(decision.logp, -math.log(4), delta=1e-12)

    def test_empirical_frequencies_match_probabilities(self):
        rng = np.random.default_rng(11)
        candidates = distinct_candidates(4)
        classes = tuple(action.action_class for action in candidates)
        params = PolicyParams(rng.normal(size=(3, 4)), classes, tau=1.0)
        features = np.array([1.0, 0.5, -0.25])
        probs = np.exp(action_logprobs(params, features, candidates))
        draws = 100_000
        counts = np.zeros(4)
        for _ in range(draws):
            counts[decide(params, features, candidates, rng).chosen] += 1
        sigma = np.sqrt(draws * probs * (1 - probs))
        self.assertTrue(np.all(np.abs(counts - draws * probs) < 4 * sigma), (counts, draws * probs))

    def test_no_legal_edits(self):
        state = make_env().reset('[NH4+]')
        with self.assertRaises(NoLegalEdits):
            sample_action(PolicyParams.zeros(), state, np.random.default_rng(0), library=FragmentLibrary([]))


class GradLogprobTests(SimpleTestCase):
    def test_uniform_two_action_closed_form(self):
        candidates = distinct_candidates(2)
        classes = tuple(action.action_class for action in candidates)
        params = PolicyParams.zeros(classes=classes, num_features=3, tau=0.9)
        features = np.array([1.0, 2.0, -1.0])
        grad = grad_logprob(params, features, candidates, 0)
        np.testing.assert_allclose(grad[:, 0], 0.5 * features / 0.9, rtol=1e-12)
        np.testing.assert_allclose(grad[:, 1], -0.5 * features / 0.9, rtol=1e-12)

    def test_expected_gradient_is_zero(self):
        rng = np.random.default_rng(2)
        params = PolicyParams(rng.normal(size=(6, len(SMALL_CLASSES))), SMALL_CLASSES)
        features = rng.normal(size=6)
        candidates = small_candidates()
        probs = np.exp(action_logprobs(params, features, candidates))
        total = sum(p * grad_logprob(params, features, candidates, index) for index, p in enumerate(probs))
        np.testing.assert_allclose(total, 0.0, atol=1e-12)

    def test_matches_central_finite_differences(self):
        rng = np.random.default_rng(7)
        candidates = small_candidates()
        step = 1e-5
        for _ in range(100):
            theta = rng.normal(size=(6, len(SMALL_CLASSES)))
            features = rng.normal(size=6)
            chosen = int(rng.integers(len(candidates)))
            tau = float(rng.uniform(0.5, 2.0))
            params = PolicyParams(theta, SMALL_CLASSES, tau=tau)
            analytic = grad_logprob(params, features, candidates, chosen)
            numeric = np.zeros_like(theta)
            for index in np.ndindex(theta.shape):
                plus, minus = theta.copy(), theta.copy()
                plus[index] += step
                minus[index] -= step
                up = action_logprobs(PolicyParams(plus, SMALL_CLASSES, tau=tau), features, candidates)[chosen]
                down = action_logprobs(PolicyParams(minus, SMALL_CLASSES, tau=tau), features, candidates)[chosen]
                numeric[index] = (up - down) / (2 * step)
            error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic), 1e-12)
            self.assertLess(error, 1e-6)


class ApplyEditTests(SimpleTestCase):
    def test_append_methyl_to_terminal_carbon(self):
        edited = apply_edit(parse_smiles('CCO'), EditAction(EditKind.APPEND, atom=0, fragment='methyl'))
        self.assertEqual(canonicalize(edited), canonicalize(parse_smiles('CCCO')))

    def test_delete_on_single_atom(self):
        with self.assertRaises(IllegalEdit):
            apply_edit(parse_smiles('C'), EditAction(EditKind.DELETE, atom=0))

    def test_replace_carbon_with_nitrogen(self):
        edited = apply_edit(parse_smiles('CC'), EditAction(EditKind.REPLACE, atom=0, element='N'))
        self.assertEqual(canonicalize(edited), canonicalize(parse_smiles('CN')))

    def test_delete_terminal_atom(self):
        edited = apply_edit(parse_smiles('CCO'), EditAction(EditKind.DELETE, atom=2))
        self.assertEqual(canonicalize(edited), 'CC')

    def test_aromatic_replacement_stays_aromatic(self):
        edited = apply_edit(parse_smiles('c1ccccc1'), EditAction(EditKind.REPLACE, atom=0, element='N'))
        self.assertEqual(canonicalize(edited), canonicalize(parse_smiles('c1ccncc1')))

    def test_illegal_edits(self):
        graph = parse_smiles('CC(C)(C)C')
        with self.assertRaises(IllegalEdit):
            apply_edit(graph, EditAction(EditKind.APPEND, atom=1, fragment='methyl'))
        with self.assertRaises(IllegalEdit):
            apply_edit(graph, EditAction(EditKind.DELETE, atom=1))
        with self.assertRaises(IllegalEdit):
            apply_edit(graph, EditAction(EditKind.REPLACE, atom=1, element='O'))
        with self.assertRaises(IllegalEdit):
            apply_edit(graph, EditAction(EditKind.APPEND, atom=0, fragment='unobtainium'))
        with self.assertRaises(IllegalEdit):
            apply_edit(graph, EditAction(EditKind.DELETE, atom=9))

    def test_done_leaves_graph_untouched(self):
        graph = parse_smiles('CCO')
        self.assertIs(apply_edit(graph, DONE), graph)

    def test_input_graph_is_not_modified(self):
        graph = parse_smiles('CCO')
        apply_edit(graph, EditAction(EditKind.APPEND, atom=2, fragment='phenyl'))
        self.assertEqual(canonicalize(graph), 'CCO')

    def test_every_enumerated_edit_yields_a_valid_molecule(self):
        for lead in LEADS:
            graph = parse_smiles(lead)
            for action in enumerate_edits(graph):
                smiles = canonicalize(apply_edit(graph, action))
                self.assertEqual(canonicalize(parse_smiles(smiles)), smiles, (lead, action))


class EnumerateEditsTests(SimpleTestCase):
    def test_cap(self):
        for lead in LEADS:
            self.assertLessEqual(len(enumerate_edits(parse_smiles(lead))), 64)
        self.assertEqual(len(enumerate_edits(parse_smiles('CC(=O)Nc1ccccc1'))), 64)

    def test_capped_edits_follow_kind_then_atom_order(self):
        priority = {EditKind.REPLACE: 0, EditKind.DELETE: 1, EditKind.APPEND: 2}
        graph = parse_smiles('CC(=O)Nc1ccc(OCC(=O)NCCO)cc1C(F)(F)F')
        everything = enumerate_edits(graph, cap=10 ** 6)
        self.assertGreater(len(everything), 64)
        keys = [(priority[action.kind], action.atom) for action in everything]
        self.assertEqual(keys, sorted(keys))
        capped = enumerate_edits(graph)
        self.assertEqual(capped, everything[:64])
        self.assertEqual(capped[0].kind, EditKind.REPLACE)

    def test_small_molecule_keeps_every_kind(self):
        edits = enumerate_edits(parse_smiles('CCO'))
        kinds = [action.kind for action in edits]
        self.assertEqual(sorted(set(kinds), key=kinds.index), [EditKind.REPLACE, EditKind.DELETE, EditKind.APPEND])
        self.assertEqual([action.kind for action in enumerate_edits(parse_smiles('CCO'), cap=3)], [EditKind.REPLACE] * 3)

    def test_enumeration_is_deterministic(self):
        graph = parse_smiles('Cc1ccncc1')
        self.assertEqual(enumerate_edits(graph), enumerate_edits(graph))

    def test_every_class_is_known_to_the_policy(self):
        classes = set(action_classes())
        for lead in LEADS:
            for action in enumerate_edits(parse_smiles(lead)):
                self.assertIn(action.action_class, classes)

    def test_shipped_library(self):
        library = load_fragment_library()
        self.assertGreaterEqual(len(library), 20)
        self.assertIn('methyl', library.ids)
        with self.assertRaises(IllegalEdit):
            library['unobtainium']


class FeaturizeTests(SimpleTestCase):
    def test_fresh_state_headroom(self):
        state = make_env(gamma=0.4).reset('CCO')
        features = featurize(state)
        self.assertAlmostEqual(features[FEATURE_NAMES.index('similarity_headroom')], 0.6, delta=1e-12)
        self.assertEqual(features[FEATURE_NAMES.index('turn_0')], 1.0)

    def test_isomorphic_states_have_identical_features(self):
        env = make_env()
        np.testing.assert_allclose(featurize(env.reset('CCO')), featurize(env.reset('OCC')), rtol=0, atol=1e-12)
        np.testing.assert_allclose(
            featurize(env.reset('Oc1ccccc1')), featurize(env.reset('c1ccc(O)cc1')), rtol=0, atol=1e-12,
        )

    def test_length_is_constant_across_states(self):
        env = make_env(gamma=0.0)
        agent = LinearPolicyAgent(PolicyParams.random(np.random.default_rng(4), scale=0.5))
        rng = np.random.default_rng(9)
        seen = 0
        for lead in LEADS:
            state = env.reset(lead)
            while not state.done and seen < 50:
                self.assertEqual(featurize(state).shape, (NUM_FEATURES,))
                seen += 1
                env.step(state, agent.act(env, state, rng).text)
        self.assertGreaterEqual(seen, len(LEADS))


class ReferencePolicyTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(12)
        self.params = PolicyParams(rng.normal(size=(6, len(SMALL_CLASSES))), SMALL_CLASSES, beta=0.1)
        self.features = rng.normal(size=6)
        self.candidates = small_candidates()

    def test_psi_is_zero_after_snapshot(self):
        reference = snapshot_reference(self.params)
        for chosen in range(len(self.candidates)):
            self.assertEqual(psi(self.params, reference, self.features, self.candidates, chosen), 0.0)

    def test_snapshot_ignores_live_updates(self):
        reference = snapshot_reference(self.params)
        before = reference.logprob(self.features, self.candidates, 1)
        self.params.theta += 1.5
        self.assertEqual(reference.logprob(self.features, self.candidates, 1), before)
        with self.assertRaises(ValueError):
            reference.params.theta[0, 0] = 1.0

    def test_psi_matches_independent_log_probs(self):
        reference = snapshot_reference(self.params)
        original = self.params.theta.copy()
        self.params.theta += np.random.default_rng(1).normal(scale=0.5, size=original.shape)
        columns = np.array([SMALL_CLASSES.index(action.action_class) for action in self.candidates])
        live = reference_logprobs(self.params.theta, self.features, columns, self.params.tau)
        frozen = reference_logprobs(original, self.features, columns, self.params.tau)
        for chosen in range(len(self.candidates)):
            expected = 0.1 * (live[chosen] - frozen[chosen])
            self.assertAlmostEqual(psi(self.params, reference, self.features, self.candidates, chosen), expected,
                                   delta=1e-12)


class CheckpointTests(SimpleTestCase):
    def test_round_trip(self):
        params = PolicyParams.random(np.random.default_rng(6), beta=0.2, tau=1.3)
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'nested' / 'policy.json'
            save_checkpoint(params, path)
            loaded = load_checkpoint(path)
        np.testing.assert_array_equal(loaded.theta, params.theta)
        self.assertEqual(loaded.classes, params.classes)
        self.assertEqual((loaded.beta, loaded.tau), (0.2, 1.3))

    def test_bad_header(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'policy.json'
            path.write_text(json.dumps({'format': 'something-else'}))
            with self.assertRaises(CheckpointError):
                load_checkpoint(path)
            params = PolicyParams.zeros(classes=SMALL_CLASSES, num_features=2)
            save_checkpoint(params, path)
            payload = json.loads(path.read_text())
            payload['shape'] = [3, 4]
            path.write_text(json.dumps(payload))
            with self.assertRaises(CheckpointError):
                load_checkpoint(path)
            with self.assertRaises(CheckpointError):
                load_checkpoint(Path(directory) / 'missing.json')


class AgentTests(SimpleTestCase):
    def test_linear_agent_proposes_parseable_edits(self):
        env = make_env(gamma=0.0)
        agent = LinearPolicyAgent(PolicyParams.zeros())
        state = env.reset('CCO')
        step = agent.act(env, state, np.random.default_rng(0))
        parsed = parse_action(step.text)
        self.assertFalse(parsed.done)
        self.assertEqual(parsed.answer, canonicalize(apply_edit(state.current, step.decision.action)))
        self.assertAlmostEqual(step.logp, step.decision.logp)
        env.step(state, step.text)
        self.assertEqual(state.t, 1)

    def test_linear_agent_stops_without_legal_edits(self):
        env = make_env()
        agent = LinearPolicyAgent(PolicyParams.zeros(), library=FragmentLibrary([]))
        step = agent.act(env, env.reset('[NH4+]'), np.random.default_rng(0))
        self.assertTrue(parse_action(step.text).done)
        self.assertIsNone(step.decision)

    def test_illegal_edit_becomes_an_invalid_proposal(self):
        class RetiredFragments(FragmentLibrary):
            def __getitem__(self, fragment_id):
                raise IllegalEdit(f'fragment {fragment_id!r} was retired')

        env = make_env()
        agent = LinearPolicyAgent(PolicyParams.zeros(), library=RetiredFragments(load_fragment_library()))
        appends = 0
        with self.assertLogs('policy.agents', level='WARNING'):
            for seed in range(60):
                state = env.reset('CC')
                step = agent.act(env, state, np.random.default_rng(seed))
                if step.decision.action.kind != EditKind.APPEND:
                    continue
                appends += 1
                self.assertIsNone(parse_action(step.text).answer)
                self.assertIn('retired', step.text)
                result = env.step(state, step.text)
                self.assertEqual(result.reward, -0.5)
                self.assertEqual(state.transcript[-1].outcome, Outcome.INVALID)
        self.assertGreater(appends, 0)

    def test_temperature_copy(self):
        agent = LinearPolicyAgent(PolicyParams.zeros(tau=0.9))
        self.assertEqual(agent.with_temperature(1.3).params.tau, 1.3)
        self.assertEqual(agent.params.tau, 0.9)

    def test_text_agent_sees_the_observation(self):
        prompts = []

        def generate(prompt):
            prompts.append(prompt)
            return '<think>add nitrogen</think><answer>CCN</answer>'

        env = make_env()
        step = TextPolicyAgent(generate).act(env, env.reset('CCO'), None)
        self.assertIn('Original Molecule: CCO', prompts[0])
        self.assertEqual(parse_action(step.text).answer, 'CCN')
        self.assertIsNone(step.logp)
