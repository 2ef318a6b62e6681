import io
import json
import math

import numpy as np
from django.test import SimpleTestCase

from environment.env import EnvironmentSettings, MoleculeEnvironment
from oracle.ledger import OracleLedger
from oracle.properties import property_spec
from policy.agents import LinearPolicyAgent
from policy.edits import EditAction, EditKind
from policy.linear import PolicyParams, decide, snapshot_reference

from .advantages import batch_advantages, compute_gae, returns_to_go, turn_baselines
from .config import PGPOConfig
from .exceptions import LengthMismatch, NonFiniteGradient, PGPOError
from .objective import pgpo_objective, ppo_surrogate, prepare_batch, trajectory_gradient
from .preference import (
    PreferencePair, gain, lambda_weight, pair_loss, preference_loss, select_pairs, signal_count, turn_ranks,
)
from .trainer import PGPOTrainer, TrainingSettings
from .trajectory import Trajectory, TrajectoryBatch, TurnRecord, collect_trajectory
from .update import Adam, clip_by_global_norm, pgpo_update

CLASSES = ('replace:N', 'replace:O', 'delete', 'append:methyl')

CANDIDATES = (
    EditAction(EditKind.REPLACE, atom=0, element='N'),
    EditAction(EditKind.DELETE, atom=0),
    EditAction(EditKind.REPLACE, atom=1, element='O'),
    EditAction(EditKind.DELETE, atom=2),
    EditAction(EditKind.APPEND, atom=1, fragment='methyl'),
)


def gae_bruteforce(rewards, values, discount, gae_lambda):
    deltas = [rewards[t] + discount * values[t + 1] - values[t] for t in range(len(rewards))]
    return np.array([
        sum((discount * gae_lambda) ** k * deltas[t + k] for k in range(len(rewards) - t))
        for t in range(len(rewards))
    ])


def toy_trajectory(rng, sampler, trajectory_id, lead_id=0, turns=5, num_features=6, rewards=None):
    trajectory = Trajectory(trajectory_id, lead_id, 'CCO')
    for t in range(turns):
        features = rng.normal(size=num_features)
        decision = decide(sampler, features, CANDIDATES, rng)
        reward = rewards[t] if rewards is not None else float(rng.normal())
        trajectory.turns.append(TurnRecord.from_decision(decision, reward))
    return trajectory


def toy_batch(rng, sampler, count=2, turns=5, num_features=6):
    return [toy_trajectory(rng, sampler, index, index % 2, turns, num_features) for index in range(count)]


def reward_trajectory(rewards, trajectory_id=0, lead_id=0):
    trajectory = Trajectory(trajectory_id, lead_id, 'CCO')
    for reward in rewards:
        trajectory.turns.append(
            TurnRecord(np.ones(2), CANDIDATES[:1], np.zeros(1, dtype=np.int64), 0, 0.0, float(reward))
        )
    return trajectory


def numeric_gradient(loss, theta, step=1e-6):
    grad = np.zeros_like(theta)
    for index in np.ndindex(theta.shape):
        plus, minus = theta.copy(), theta.copy()
        plus[index] += step
        minus[index] -= step
        grad[index] = (loss(plus) - loss(minus)) / (2 * step)
    return grad


class ComputeGaeTests(SimpleTestCase):
    def test_monte_carlo_returns(self):
        advantages, returns = compute_gae([0.0, 1.0], [0.0, 0.0, 0.0], 1.0, 1.0)
        np.testing.assert_allclose(advantages, [1.0, 1.0])
        np.testing.assert_allclose(returns, [1.0, 1.0])

    def test_zero_lambda_is_one_step_td(self):
        rewards, values = [0.5, -1.0, 2.0], [0.1, 0.2, -0.3, 0.0]
        advantages, _ = compute_gae(rewards, values, 0.9, 0.0)
        deltas = [rewards[t] + 0.9 * values[t + 1] - values[t] for t in range(3)]
        np.testing.assert_allclose(advantages, deltas, rtol=0, atol=1e-15)

    def test_constant_rewards_against_double_sum(self):
        advantages, _ = compute_gae([1.0, 1.0, 1.0], [0.0] * 4, 0.99, 0.95)
        np.testing.assert_allclose(advantages, gae_bruteforce([1.0] * 3, [0.0] * 4, 0.99, 0.95), rtol=0, atol=1e-12)

    def test_matches_brute_force_on_short_trajectories(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            length = int(rng.integers(1, 7))
            rewards = rng.normal(size=length)
            values = rng.normal(size=length + 1)
            discount, gae_lambda = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)
            advantages, returns = compute_gae(rewards, values, discount, gae_lambda)
            np.testing.assert_allclose(
                advantages, gae_bruteforce(rewards, values, discount, gae_lambda), rtol=0, atol=1e-10,
            )
            np.testing.assert_allclose(returns, advantages + values[:-1], rtol=0, atol=1e-12)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            compute_gae([1.0, 2.0], [0.0, 0.0], 0.99, 0.95)

    def test_batch_baseline(self):
        first, second = reward_trajectory([1.0, 0.0]), reward_trajectory([3.0])
        baselines = turn_baselines([first, second], 1.0)
        np.testing.assert_allclose(baselines, [2.0, 0.0])
        np.testing.assert_allclose(returns_to_go([1.0, 0.0], 1.0), [1.0, 0.0])
        advantages = batch_advantages([first, second], 1.0, 1.0)
        np.testing.assert_allclose(advantages[0], [-1.0, 0.0])
        np.testing.assert_allclose(advantages[1], [1.0])


class PpoSurrogateTests(SimpleTestCase):
    def test_unit_ratio(self):
        self.assertAlmostEqual(float(ppo_surrogate(0.0, 0.0, 1.0, 0.2)), 1.0)

    def test_clipped_above(self):
        self.assertAlmostEqual(float(ppo_surrogate(0.0, math.log(1.5), 1.0, 0.2)), 1.2)

    def test_pessimistic_branch_for_negative_advantage(self):
        self.assertAlmostEqual(float(ppo_surrogate(0.0, math.log(0.5), -1.0, 0.2)), -0.8)


class SelectPairsTests(SimpleTestCase):
    def test_keep_ratio_and_cap(self):
        pairs = select_pairs([0.1, 0.5, -0.3, 0.9, 0.2])
        self.assertEqual(len(pairs), 6)
        self.assertEqual((pairs[0].i, pairs[0].j), (2, 3))
        rewards = [0.1, 0.5, -0.3, 0.9, 0.2]
        gaps = [rewards[pair.j] - rewards[pair.i] for pair in pairs]
        self.assertEqual(gaps, sorted(gaps, reverse=True))
        for pair in pairs:
            self.assertGreater(rewards[pair.j], rewards[pair.i])

    def test_equal_rewards(self):
        self.assertEqual(select_pairs([0.3, 0.3, 0.3]), [])

    def test_two_turns(self):
        pairs = select_pairs([0.0, 1.0])
        self.assertEqual(len(pairs), 1)
        self.assertEqual((pairs[0].i, pairs[0].j, pairs[0].rank_i, pairs[0].rank_j), (0, 1, 2, 1))
        self.assertAlmostEqual(pairs[0].weight, 0.5325, delta=1e-4)

    def test_keep_ratio_rounds_down_with_floor_of_one(self):
        self.assertEqual(len(select_pairs([0.0, 1.0, 2.0])), 2)
        self.assertEqual(len(select_pairs([0.0, 1.0, 1.0])), 1)

    def test_trajectory_input_carries_id(self):
        pairs = select_pairs(reward_trajectory([0.0, -1.0, 2.0], trajectory_id=7))
        self.assertTrue(all(pair.trajectory_id == 7 for pair in pairs))

    def test_ranks_form_a_permutation(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            rewards = rng.integers(-2, 3, size=int(rng.integers(1, 8))).astype(float)
            self.assertEqual(sorted(turn_ranks(rewards)), list(range(1, len(rewards) + 1)))

    def test_rank_ties_favour_later_turn(self):
        self.assertEqual(list(turn_ranks([1.0, 1.0, 0.0])), [2, 1, 3])


class LambdaWeightTests(SimpleTestCase):
    def test_reference_value(self):
        self.assertAlmostEqual(lambda_weight(0.0, 1.0, 2, 1), abs(1 / math.log(3) - 1 / math.log(2)), delta=1e-12)
        self.assertAlmostEqual(lambda_weight(0.0, 1.0, 2, 1), 0.5325, delta=1e-4)

    def test_huge_rewards_stay_finite(self):
        for reward in (1023.0, 1100.0, 5000.0):
            with self.subTest(reward=reward):
                weight = lambda_weight(0.0, reward, 2, 1)
                self.assertTrue(math.isfinite(weight))
                self.assertGreater(weight, 0.0)
        self.assertEqual(gain(5000.0), gain(1000.0))
        self.assertEqual(gain(-5000.0), -1.0)
        self.assertEqual(gain(3.0), 7.0)

    def test_equal_rewards_weigh_nothing(self):
        self.assertEqual(lambda_weight(0.4, 0.4, 1, 3), 0.0)

    def test_symmetric_and_non_negative(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            r_i, r_j = rng.normal(size=2)
            rank_i, rank_j = rng.integers(1, 6, size=2)
            weight = lambda_weight(r_i, r_j, rank_i, rank_j)
            self.assertGreaterEqual(weight, 0.0)
            self.assertEqual(weight, lambda_weight(r_j, r_i, rank_j, rank_i))


class PreferenceLossTests(SimpleTestCase):
    def test_zero_gap(self):
        pairs = [PreferencePair(None, 0, 1, 2, 1, 1.0)]
        loss, _ = preference_loss(pairs, [0.25, 0.25])
        self.assertAlmostEqual(loss, math.log(2), delta=1e-12)

    def test_closed_form_gap(self):
        self.assertAlmostEqual(float(pair_loss(math.log(3))), math.log(4 / 3), delta=1e-12)

    def test_large_gap_vanishes(self):
        self.assertLess(float(pair_loss(40.0)), 1e-6)

    def test_strictly_decreasing_in_gap(self):
        losses = pair_loss(np.linspace(-10, 10, 100))
        self.assertTrue(np.all(np.diff(losses) < 0))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        pairs = select_pairs([0.1, 0.5, -0.3, 0.9, 0.2])
        psi = rng.normal(size=5)
        _, grad = preference_loss(pairs, psi)
        numeric = numeric_gradient(lambda value: preference_loss(pairs, value)[0], psi)
        np.testing.assert_allclose(grad, numeric, rtol=1e-6, atol=1e-9)


class SignalCountTests(SimpleTestCase):
    def test_cap_binds_at_five_turns(self):
        rng = np.random.default_rng(2)
        batch = [reward_trajectory(rng.permutation(5).astype(float), index) for index in range(4)]
        trajectory_signals, preference_signals = signal_count(batch)
        self.assertEqual((trajectory_signals, preference_signals), (4, 24))
        self.assertEqual(trajectory_signals + preference_signals, 4 + 6 * 4)

    def test_two_turns(self):
        batch = [reward_trajectory([0.0, float(index)], index) for index in range(3)]
        self.assertLessEqual(signal_count(batch)[1], 3)

    def test_equal_rewards(self):
        batch = [reward_trajectory([0.5] * 5, index) for index in range(3)]
        self.assertEqual(signal_count(batch), (3, 0))


class ObjectiveTests(SimpleTestCase):
    def check_gradient(self, num_features, classes, draws, seed):
        rng = np.random.default_rng(seed)
        candidates = [action for action in CANDIDATES if action.action_class in classes]
        for _ in range(draws):
            theta = rng.normal(size=(num_features, len(classes)))
            sampler = PolicyParams(theta + rng.normal(scale=0.3, size=theta.shape), classes)
            reference = snapshot_reference(PolicyParams(theta + rng.normal(scale=0.3, size=theta.shape), classes))
            batch = []
            for index in range(2):
                trajectory = Trajectory(index, index, 'CCO')
                for _ in range(5):
                    features = rng.normal(size=num_features)
                    decision = decide(sampler, features, candidates, rng)
                    trajectory.turns.append(TurnRecord.from_decision(decision, float(rng.normal())))
                batch.append(trajectory)
            config = PGPOConfig(lambda_pref=float(rng.uniform(0.1, 1.0)))
            prepared = prepare_batch(batch, reference, config)
            params = PolicyParams(theta, classes, beta=0.5)
            analytic = pgpo_objective(params, prepared, config).grad
            numeric = numeric_gradient(
                lambda value: pgpo_objective(PolicyParams(value, classes, beta=0.5), prepared, config).loss, theta,
            )
            error = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-8)
            self.assertLess(error, 1e-5)

    def test_gradient_matches_finite_differences(self):
        self.check_gradient(6, CLASSES, 100, seed=10)

    def test_gradient_on_ten_parameter_policy(self):
        self.check_gradient(5, ('replace:N', 'delete'), 20, seed=11)

    def test_zero_lambda_reduces_to_ppo(self):
        rng = np.random.default_rng(5)
        sampler = PolicyParams(rng.normal(size=(6, 4)), CLASSES)
        params = PolicyParams(rng.normal(size=(6, 4)), CLASSES)
        config = PGPOConfig(lambda_pref=0.0)
        prepared = prepare_batch(toy_batch(rng, sampler, count=4), snapshot_reference(sampler), config)
        value = pgpo_objective(params, prepared, config)
        np.testing.assert_array_equal(value.grad, trajectory_gradient(params, prepared, config.clip_epsilon))
        self.assertEqual(value.preference_loss, 0.0)
        self.assertGreater(value.pair_count, 0)

    def test_loss_components(self):
        rng = np.random.default_rng(6)
        params = PolicyParams(rng.normal(size=(6, 4)), CLASSES)
        config = PGPOConfig(lambda_pref=0.3)
        prepared = prepare_batch(toy_batch(rng, params, count=3), snapshot_reference(params), config)
        value = pgpo_objective(params, prepared, config)
        self.assertAlmostEqual(value.loss, value.trajectory_loss + 0.3 * value.preference_loss, delta=1e-12)
        # sampler equals live params, so every ratio is one
        self.assertAlmostEqual(value.mean_ratio, 1.0, delta=1e-12)
        self.assertEqual(value.clip_fraction, 0.0)
        # ψ is zero everywhere: every pair costs Λ·ln 2
        expected = sum(pair.weight for item in prepared for pair in item.pairs) * math.log(2) / 3
        self.assertAlmostEqual(value.preference_loss, expected, delta=1e-12)


class PgpoUpdateTests(SimpleTestCase):
    def test_zero_advantages_and_no_pairs_leave_params_unchanged(self):
        batch = [reward_trajectory([0.0] * 3, index) for index in range(4)]
        params = PolicyParams.zeros(classes=CLASSES[:1], num_features=2)
        params.theta[:] = 0.75
        updated, diagnostics = pgpo_update(batch, params, snapshot_reference(params), PGPOConfig())
        np.testing.assert_array_equal(updated.theta, params.theta)
        self.assertEqual(diagnostics.pair_count, 0)
        self.assertEqual(diagnostics.grad_norm, 0.0)

    def test_update_moves_params_and_reports(self):
        rng = np.random.default_rng(7)
        params = PolicyParams(rng.normal(size=(6, 4)), CLASSES)
        batch = toy_batch(rng, params, count=4)
        config = PGPOConfig(learning_rate=0.01)
        updated, diagnostics = pgpo_update(batch, params, snapshot_reference(params), config)
        self.assertFalse(np.array_equal(updated.theta, params.theta))
        self.assertLessEqual(np.max(np.abs(updated.theta - params.theta)), 0.01 + 1e-9)
        self.assertEqual(diagnostics.trajectory_signals, 4)
        self.assertEqual(diagnostics.preference_signals, signal_count(batch)[1])
        self.assertEqual(set(diagnostics.to_dict()), {
            'trajectory_loss', 'preference_loss', 'total_loss', 'mean_ratio', 'clip_fraction', 'pair_count',
            'grad_norm', 'trajectory_signals', 'preference_signals',
        })

    def test_non_finite_gradient_aborts(self):
        trajectory = reward_trajectory([0.0, 1.0])
        trajectory.turns[0].features = np.array([np.nan, 1.0])
        params = PolicyParams.zeros(classes=CLASSES[:1], num_features=2)
        with self.assertRaises(NonFiniteGradient):
            pgpo_update([trajectory], params, snapshot_reference(params), PGPOConfig())


class OptimizerTests(SimpleTestCase):
    def test_first_adam_step_is_learning_rate_sized(self):
        optimizer = Adam(learning_rate=0.1)
        theta = optimizer.step(np.zeros(3), np.array([2.0, -0.5, 0.0]))
        np.testing.assert_allclose(theta, [-0.1, 0.1, 0.0], rtol=1e-6)

    def test_global_norm_clip(self):
        grad, norm = clip_by_global_norm(np.array([3.0, 4.0]), 1.0)
        self.assertEqual(norm, 5.0)
        np.testing.assert_allclose(grad, [0.6, 0.8])
        grad, norm = clip_by_global_norm(np.array([0.3, 0.4]), 1.0)
        np.testing.assert_allclose(grad, [0.3, 0.4])


class PgpoConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = PGPOConfig()
        self.assertEqual((config.clip_epsilon, config.lambda_pref, config.max_pairs), (0.2, 0.3, 6))
        self.assertEqual((config.learning_rate, config.minibatch_size), (5e-5, 32))

    def test_validation(self):
        for bad in ({'clip_epsilon': 1.0}, {'lambda_pref': -0.1}, {'pair_keep_ratio': 0.0}, {'minibatch_size': 0}):
            with self.assertRaises(PGPOError):
                PGPOConfig(**bad)
        with self.assertRaises(PGPOError):
            PGPOConfig.from_dict({'clip': 0.2})
        self.assertEqual(PGPOConfig.from_dict({'lambda_pref': 0.0}).lambda_pref, 0.0)


def training_env():
    specs = [property_spec('heavyatoms')]
    return MoleculeEnvironment(OracleLedger(), specs, EnvironmentSettings(gamma=0.3, horizon=3))


class TrajectoryTests(SimpleTestCase):
    def test_collect_records_every_sampled_turn(self):
        env = training_env()
        agent = LinearPolicyAgent(PolicyParams.zeros())
        trajectory = collect_trajectory(env, agent, 'CCO', np.random.default_rng(0), trajectory_id=3, lead_id=1)
        self.assertEqual((trajectory.id, trajectory.lead_id, trajectory.lead), (3, 1, 'CCO'))
        self.assertGreaterEqual(len(trajectory), 1)
        self.assertLessEqual(len(trajectory), 3)
        self.assertEqual(trajectory.total_reward, math.fsum(trajectory.rewards))
        self.assertTrue(np.all(trajectory.old_logps <= 0))

    def test_batch_groups_by_lead(self):
        batch = TrajectoryBatch([reward_trajectory([1.0], 0, 2), reward_trajectory([1.0], 1, 0),
                                 reward_trajectory([1.0], 2, 2)])
        self.assertEqual({lead: [t.id for t in members] for lead, members in batch.by_lead().items()},
                         {2: [0, 2], 0: [1]})
        self.assertEqual(batch.turn_count, 3)


class TrainerTests(SimpleTestCase):
    LEADS = ['CCO', 'CCN', 'c1ccccc1O', 'CC(C)O']

    def run_trainer(self, workers):
        handle = io.StringIO()
        settings = TrainingSettings(iterations=2, rollouts_per_lead=4, workers=workers, seed=5)
        params = PolicyParams.zeros()
        trainer = PGPOTrainer(training_env(), params, PGPOConfig(learning_rate=0.01, minibatch_size=4),
                              settings, diagnostics=handle)
        return trainer.train(self.LEADS), handle.getvalue()

    def test_diagnostics_are_written(self):
        params, text = self.run_trainer(workers=1)
        records = [json.loads(line) for line in text.splitlines()]
        self.assertTrue(records)
        self.assertEqual({record['iteration'] for record in records}, {0, 1})
        for record in records:
            self.assertLessEqual(record['retention'], 1.0)
            self.assertIn('preference_signals', record)
        self.assertTrue(np.all(np.isfinite(params.theta)))

    def test_worker_count_does_not_change_results(self):
        single_params, single_text = self.run_trainer(workers=1)
        pooled_params, pooled_text = self.run_trainer(workers=4)
        self.assertEqual(single_text, pooled_text)
        np.testing.assert_array_equal(single_params.theta, pooled_params.theta)
