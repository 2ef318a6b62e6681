import io
import json

import numpy as np
from django.test import SimpleTestCase

from chemgraph.smiles import parse_smiles
from environment.actions import format_action
from environment.env import EnvironmentSettings, MoleculeEnvironment
from oracle.ledger import OracleLedger
from oracle.properties import property_spec
from policy.agents import AgentStep, LinearPolicyAgent
from policy.linear import PolicyParams

from .config import INDEPENDENT, EvolveConfig, temperature_at
from .engine import run_evolution
from .exceptions import EvolutionError
from .fitness import DIFFICULTY_WEIGHTS, fitness
from .pool import ElitePool, PoolEntry, elite_insert

LEAD = 'CC(=O)Nc1ccccc1'


def entry(smiles, value, similarity=0.8):
    return PoolEntry(smiles, value, similarity)


def heavyatom_env(budget):
    return MoleculeEnvironment(OracleLedger(budget=budget), [property_spec('heavyatoms')], EnvironmentSettings())


def small_config(**overrides):
    settings = {'budget': 100, 'generations': 4, 'rollouts_per_parent': 6, 'horizon': 3}
    settings.update(overrides)
    return EvolveConfig(**settings)


def evolve(budget, seed=0, **overrides):
    env = heavyatom_env(budget)
    agent = LinearPolicyAgent(PolicyParams.random(np.random.default_rng(11)))
    handle = io.StringIO()
    run = run_evolution(agent, LEAD, small_config(budget=budget, **overrides), env, seed=seed, log=handle)
    return run, env.ledger, handle.getvalue()


class DoneAgent:
    def with_temperature(self, tau):
        return self

    def act(self, env, state, rng):
        return AgentStep(format_action(done=True))


class TemperatureTests(SimpleTestCase):
    def test_schedule(self):
        config = EvolveConfig()
        self.assertEqual(temperature_at(1, config), 0.9)
        self.assertEqual(temperature_at(5, config), 1.3)
        self.assertEqual(temperature_at(12, config), 2.0)
        self.assertEqual(temperature_at(20, config), 2.0)

    def test_generation_numbering(self):
        with self.assertRaises(EvolutionError):
            temperature_at(0, EvolveConfig())


class FitnessTests(SimpleTestCase):
    def test_weighted_sum(self):
        specs = [property_spec('qed_proxy'), property_spec('logp_proxy')]
        value = fitness({'qed_proxy': 0.6, 'logp_proxy': 2.0}, {'qed_proxy': 0.5, 'logp_proxy': 1.0}, specs)
        self.assertAlmostEqual(value, 2.0, places=12)

    def test_lead_scores_zero(self):
        specs = [property_spec('qed_proxy'), property_spec('sa_proxy')]
        scores = {'qed_proxy': 0.4, 'sa_proxy': 3.1}
        self.assertEqual(fitness(scores, scores, specs), 0.0)

    def test_minimized_property_counts_as_improvement(self):
        specs = [property_spec('sa_proxy')]
        self.assertAlmostEqual(fitness({'sa_proxy': 2.5}, {'sa_proxy': 3.0}, specs), 1.0, places=12)

    def test_unweighted_property_counts_once(self):
        specs = [property_spec('heavyatoms')]
        self.assertEqual(fitness({'heavyatoms': 12.0}, {'heavyatoms': 10.0}, specs), 2.0)
        self.assertNotIn('heavyatoms', DIFFICULTY_WEIGHTS)


class ElitePoolTests(SimpleTestCase):
    def full_pool(self):
        pool = ElitePool(capacity=5, gamma=0.4)
        for index, value in enumerate([1.0, 2.0, 3.0, 4.0, 5.0]):
            pool.insert(entry(f'C{"C" * index}', value))
        return pool

    def test_insert_into_empty_pool(self):
        pool = elite_insert(ElitePool(), entry('CCO', 0.3))
        self.assertEqual([member.smiles for member in pool], ['CCO'])

    def test_sorted_best_first(self):
        self.assertEqual([member.fitness for member in self.full_pool()], [5.0, 4.0, 3.0, 2.0, 1.0])

    def test_replaces_worst(self):
        pool = self.full_pool()
        self.assertTrue(pool.insert(entry('CCN', 3.5)))
        self.assertEqual([member.fitness for member in pool], [5.0, 4.0, 3.5, 3.0, 2.0])

    def test_rejects_weaker_candidate_when_full(self):
        pool = self.full_pool()
        self.assertFalse(pool.insert(entry('CCN', 1.0)))
        self.assertNotIn('CCN', pool)

    def test_similarity_gate(self):
        pool = ElitePool(gamma=0.4)
        self.assertFalse(pool.insert(entry('CCN', 9.0, similarity=0.39)))
        self.assertEqual(len(pool), 0)

    def test_duplicates_rejected(self):
        pool = ElitePool()
        pool.insert(entry('CCO', 1.0))
        self.assertFalse(pool.insert(entry('CCO', 2.0)))
        self.assertEqual(pool.best.fitness, 1.0)

    def test_ties_keep_insertion_order(self):
        pool = ElitePool()
        for smiles in ('CCO', 'CCN', 'CCC'):
            pool.insert(entry(smiles, 1.0))
        self.assertEqual([member.smiles for member in pool], ['CCO', 'CCN', 'CCC'])


class EvolveConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = EvolveConfig()
        self.assertEqual((config.budget, config.generations, config.rollouts_per_parent), (500, 10, 32))
        self.assertEqual(config.weights['jnk3'], 12.0)

    def test_validation(self):
        for bad in ({'budget': 0}, {'tau_base': 2.5}, {'elite_gamma': 1.5}, {'strategy': 'random'}):
            with self.assertRaises(EvolutionError):
                EvolveConfig(**bad)
        with self.assertRaises(EvolutionError):
            EvolveConfig.from_dict({'population': 10})

    def test_weight_overrides_merge(self):
        config = EvolveConfig.from_dict({'weights': {'heavyatoms': 3.0}})
        self.assertEqual(config.weights['heavyatoms'], 3.0)
        self.assertEqual(config.weights['qed_proxy'], 10.0)


class RunEvolutionTests(SimpleTestCase):
    def test_single_call_budget_keeps_only_the_lead(self):
        run, ledger, text = evolve(budget=1)
        self.assertEqual(ledger.calls, 1)
        self.assertEqual([member.smiles for member in run.pool], [run.lead])
        self.assertEqual(run.generations, 0)
        self.assertEqual(text, '')

    def test_done_agent_leaves_pool_unchanged(self):
        env = heavyatom_env(50)
        config = EvolveConfig(budget=50, generations=3, rollouts_per_parent=1, horizon=1)
        run = run_evolution(DoneAgent(), LEAD, config, env, seed=0)
        self.assertEqual(run.generations, 3)
        self.assertEqual([member.smiles for member in run.pool], [run.lead])
        self.assertEqual([record['candidates'] for record in run.log], [0, 0, 0])
        self.assertEqual(env.ledger.calls, 1)

    def test_best_fitness_never_drops(self):
        run, _, _ = evolve(budget=100, seed=2)
        best = [record['best_fitness'] for record in run.log]
        self.assertTrue(best)
        self.assertEqual(best, sorted(best))
        self.assertGreaterEqual(run.best.fitness, 0.0)

    def test_budget_is_respected(self):
        for budget in (1, 10, 100, 500):
            with self.subTest(budget=budget):
                run, ledger, _ = evolve(budget=budget, seed=budget)
                self.assertLessEqual(ledger.calls, budget)
                self.assertLessEqual(len(run.pool), 5)
                for member in run.pool:
                    self.assertGreaterEqual(member.similarity, 0.4)
                for record in run.log:
                    self.assertLessEqual(record['calls'], budget)
                    self.assertTrue(all(item['similarity'] >= 0.4 for item in record['pool']))

    def test_budget_holds_across_seeds(self):
        agent = LinearPolicyAgent(PolicyParams.random(np.random.default_rng(11)))
        for budget in (1, 10, 25):
            config = EvolveConfig(budget=budget, generations=10, rollouts_per_parent=4, horizon=2)
            for seed in range(200):
                env = heavyatom_env(budget)
                run = run_evolution(agent, LEAD, config, env, seed=seed)
                self.assertLessEqual(env.ledger.calls, budget, (budget, seed))
                self.assertTrue(all(record['calls'] <= budget for record in run.log), (budget, seed))

    def test_repeated_molecules_are_not_charged_again(self):
        run, ledger, _ = evolve(budget=30, seed=5)
        stats = ledger.stats()
        for member in run.pool:
            ledger.query(parse_smiles(member.smiles), [property_spec('heavyatoms')])
        self.assertEqual(ledger.calls, stats['calls'])
        self.assertEqual(ledger.cache_hits, stats['cache_hits'] + len(run.pool))
        self.assertEqual(run.stats, stats)
        lookups = stats['calls'] + stats['cache_hits']
        self.assertAlmostEqual(stats['hit_rate'], stats['cache_hits'] / lookups, places=12)
        self.assertGreater(stats['cache_hits'], 0)

    def test_lead_meeting_the_target_is_not_a_success(self):
        spec = property_spec('heavyatoms', threshold=5.0)
        env = MoleculeEnvironment(OracleLedger(budget=20), [spec], EnvironmentSettings())
        config = EvolveConfig(budget=20, generations=2, rollouts_per_parent=1, horizon=1)
        run = run_evolution(DoneAgent(), LEAD, config, env, seed=0)
        self.assertEqual([member.smiles for member in run.pool], [run.lead])
        self.assertFalse(run.pool.best.success)
        self.assertIsNone(run.best_success)
        self.assertIsNone(run.first_success_call)

    def test_same_seed_same_log(self):
        first = evolve(budget=60, seed=7)
        second = evolve(budget=60, seed=7)
        self.assertEqual(first[2], second[2])
        self.assertEqual(first[0].log, second[0].log)

    def test_log_is_line_delimited_json(self):
        run, _, text = evolve(budget=40, seed=1)
        records = [json.loads(line) for line in text.splitlines()]
        self.assertEqual(len(records), run.generations)
        self.assertEqual([record['generation'] for record in records], list(range(1, run.generations + 1)))
        self.assertEqual(records[0]['temperature'], 0.9)

    def test_independent_rollouts_start_from_the_lead(self):
        run, ledger, _ = evolve(budget=60, seed=3, strategy=INDEPENDENT)
        self.assertTrue(run.log)
        self.assertTrue(all(record['parent'] == run.lead for record in run.log))
        self.assertTrue(all(record['temperature'] == 0.9 for record in run.log))
        self.assertLessEqual(ledger.calls, 60)

    def test_first_success_is_a_ledger_call(self):
        run, ledger, _ = evolve(budget=100, seed=4)
        if run.first_success_call is not None:
            self.assertGreaterEqual(run.first_success_call, 1)
            self.assertLessEqual(run.first_success_call, ledger.calls)
        success = run.best_success
        self.assertTrue(success is None or success.success)
