import io
import json
import tempfile
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from chemgraph.canonical import canonicalize
from chemgraph.smiles import parse_smiles
from environment.env import EnvironmentSettings, MoleculeEnvironment
from environment.success import MULTI, check_success
from evolve.config import EvolveConfig
from evolve.pool import PoolEntry
from oracle.ledger import OracleLedger
from oracle.properties import property_spec

from .baseline import ga_baseline
from .compare import ARMS, arm_config, ordering_checks
from .config import build_config, flag_overrides, load_config, parse_assignment
from .exceptions import ConfigError, EmptyResults
from .leads import load_leads, split_leads
from .metrics import avg_similarity, relative_improvement, success_curve, success_rate, summarize
from .models import ExperimentRun
from .results import OptimizationResult, read_results, select_result, write_results
from .runner import lead_seed, optimize_leads, run_experiment
from .tasks import optimize_lead

DIRECTIONS = {'logp_proxy': 'maximize', 'sa_proxy': 'minimize'}

GA_LEADS = ['CC(=O)Nc1ccc(O)cc1', 'CC(C)c1ccc(CCC(=O)O)cc1', 'CNC(=O)c1ccc2ccccc2c1', 'COc1ccc(NC(=O)C)cc1']

DATA_DIR = Path(__file__).resolve().parent / 'data'
SHIPPED_LEADS = DATA_DIR / 'leads.smi'
SHIPPED_CONFIGS = sorted((DATA_DIR / 'configs').glob('*.json'))


def result(success, similarity=1.0, lead_scores=None, scores=None, **extra):
    return OptimizationResult(
        lead='CCO', optimized='CCCO' if success else None, success=success, similarity=similarity,
        lead_scores=lead_scores or {}, scores=scores or {}, directions=dict(DIRECTIONS), **extra,
    )


def fixture_results():
    return [
        result(True, 0.5, {'logp_proxy': -2.0, 'sa_proxy': 4.0}, {'logp_proxy': -1.0, 'sa_proxy': 3.0}),
        result(True, 0.6, {'logp_proxy': 2.0, 'sa_proxy': 2.0}, {'logp_proxy': 3.0, 'sa_proxy': 2.5}),
        result(False, 0.3, {'logp_proxy': 1.0, 'sa_proxy': 3.0}, {'logp_proxy': 1.0, 'sa_proxy': 3.0}),
        result(False),
        result(True, 0.42, {'logp_proxy': 0.0, 'sa_proxy': 5.0}, {'logp_proxy': 1.0, 'sa_proxy': 4.0}),
        result(True, 0.9, {'logp_proxy': 1.0, 'sa_proxy': 3.0}, {'logp_proxy': 1.5, 'sa_proxy': 3.0}),
    ]


def tiny_config(leads_file, **sections):
    data = {
        'name': 'tiny',
        'seed': 3,
        'leads': {'file': str(leads_file), 'train': 3, 'test': 3},
        'task': {'properties': ['heavyatoms'], 'mode': 'multi', 'budget': 12, 'horizon': 2},
        'training': {'iterations': 1, 'rollouts_per_lead': 2, 'pgpo': {'learning_rate': 0.01, 'minibatch_size': 4}},
        'inference': {'generations': 2, 'rollouts_per_parent': 2},
    }
    for name, values in sections.items():
        data[name] = {**data.get(name, {}), **values} if isinstance(values, dict) else values
    return data


def write_leads(directory, leads=GA_LEADS + ['Cc1ccc(O)cc1', 'Clc1ccc(CCO)cc1']):
    path = Path(directory) / 'leads.smi'
    path.write_text('\n'.join(leads) + '\n', encoding='utf-8')
    return path


class MetricsTests(SimpleTestCase):
    def test_fixture_values(self):
        results = fixture_results()
        self.assertAlmostEqual(success_rate(results), 200.0 / 3.0, places=12)
        self.assertAlmostEqual(avg_similarity(results), (0.5 + 0.6 + 1.0 + 1.0 + 0.42 + 0.9) / 6, places=12)
        expected = (0.375 + 0.125 + 0.0 + 0.0 + 0.2 + 0.25) / 6
        with self.assertLogs('bench.metrics', level='WARNING'):
            self.assertAlmostEqual(relative_improvement(results), expected, places=12)

    def test_summary_counts_skipped_terms(self):
        with self.assertLogs('bench.metrics', level='WARNING'):
            summary = summarize(fixture_results())
        self.assertEqual(summary['count'], 6)
        self.assertEqual(summary['successes'], 4)
        self.assertEqual(summary['zero_baseline_terms'], 1)

    def test_single_property_examples(self):
        plogp = result(True, 0.5, {'logp_proxy': -2.0}, {'logp_proxy': -1.0})
        self.assertEqual(relative_improvement([plogp], ['logp_proxy']), 0.5)
        sa = result(True, 0.5, {'sa_proxy': 4.0}, {'sa_proxy': 3.0})
        self.assertEqual(relative_improvement([sa], [property_spec('sa_proxy')]), 0.25)
        self.assertEqual(relative_improvement([result(False)], ['logp_proxy']), 0.0)

    def test_rates(self):
        self.assertEqual(success_rate([result(True, 0.5), result(False), result(True, 0.5), result(False)]), 50.0)
        self.assertEqual(success_rate([result(False)] * 3), 0.0)
        self.assertEqual(success_rate([result(True, 0.5)] * 182 + [result(False)] * 18), 91.0)
        self.assertEqual(avg_similarity([result(False)] * 3), 1.0)
        self.assertEqual(avg_similarity([result(True, 0.42)]), 0.42)
        self.assertAlmostEqual(
            avg_similarity([result(True, 0.5), result(True, 0.6), result(False), result(False)]), 0.775, places=12,
        )

    def test_permutation_invariance(self):
        results = fixture_results()
        with self.assertLogs('bench.metrics', level='WARNING'):
            forward = summarize(results)
            backward = summarize(results[::-1])
        for key in ('success_rate', 'avg_similarity', 'relative_improvement'):
            self.assertAlmostEqual(forward[key], backward[key], places=12)
        self.assertEqual(forward['success_rate'] * len(results) / 100, round(forward['success_rate'] * len(results) / 100))

    def test_empty(self):
        for metric in (success_rate, avg_similarity, relative_improvement):
            with self.assertRaises(EmptyResults):
                metric([])

    def test_success_curve(self):
        results = [result(True, 0.5, first_success_call=5), result(True, 0.5, first_success_call=20),
                   result(False), result(True, 0.5, first_success_call=50)]
        curve = success_curve(results, budget=100, points=100)
        rates = dict(zip(curve['calls'], curve['success_rate']))
        self.assertEqual(rates[1], 0.0)
        self.assertEqual(rates[10], 25.0)
        self.assertEqual(rates[100], 75.0)
        self.assertEqual(list(curve['success_rate']), sorted(curve['success_rate']))

    def test_reloaded_results_give_the_same_summary(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'results.jsonl'
            write_results(fixture_results(), path)
            with self.assertLogs('bench.metrics', level='WARNING'):
                self.assertEqual(summarize(read_results(path)), summarize(fixture_results()))


class ConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = build_config({})
        self.assertEqual([spec.name for spec in config.specs], ['logp_proxy'])
        self.assertEqual((config.task['budget'], config.task['horizon'], config.task['gamma']), (500, 5, 0.4))
        self.assertEqual((config.inference.budget, config.inference.horizon), (500, 5))
        self.assertEqual(config.pgpo.lambda_pref, 0.3)
        self.assertEqual((config.training.iterations, config.training.rollouts_per_lead), (100, 16))
        self.assertEqual((config.leads['train'], config.leads['test']), (128, 64))

    def test_unknown_keys_are_rejected_at_every_level(self):
        for data in ({'colour': 'red'}, {'task': {'beam': 3}}, {'training': {'pgpo': {'kl': 0.1}}}):
            with self.subTest(data=data):
                with self.assertRaises(ConfigError):
                    build_config(data)

    def test_invalid_values(self):
        for data in ({'version': 2}, {'task': {'budget': 0}}, {'inference': {'tau_base': 3.0}},
                     {'task': {'properties': ['drd2']}}, {'task': {'properties': ['nonsense']}},
                     {'training': {'pgpo': {'clip_epsilon': 1.5}}}):
            with self.subTest(data=data):
                with self.assertRaises(ConfigError):
                    build_config(data)

    def test_property_overrides(self):
        config = build_config({'task': {'properties': [{'name': 'qed_proxy', 'threshold': 0.8}, 'sa_proxy']}})
        self.assertEqual(config.specs[0].threshold, 0.8)
        self.assertEqual(config.specs[1].direction, 'minimize')

    def test_overrides(self):
        self.assertEqual(parse_assignment('task.horizon=1'), ('task.horizon', 1))
        self.assertEqual(parse_assignment('inference.strategy=independent'), ('inference.strategy', 'independent'))
        with self.assertRaises(ConfigError):
            parse_assignment('no-equals-sign')
        self.assertEqual(flag_overrides({'seed': 3, 'lambda_pref': None, 'horizon': 1}),
                         [('seed', 3), ('task.horizon', 1)])
        config = build_config({'training': {'iterations': 5}}, [('training.pgpo.lambda_pref', 0.0)])
        self.assertEqual((config.training.iterations, config.pgpo.lambda_pref), (5, 0.0))

    def test_ablation_configs(self):
        no_preference = build_config({}, [('training.pgpo.lambda_pref', 0.0)])
        self.assertEqual(no_preference.pgpo.lambda_pref, 0.0)
        single_turn = build_config({}, [('task.horizon', 1)])
        self.assertEqual((single_turn.environment_settings().horizon, single_turn.inference.horizon), (1, 1))
        independent = build_config({}, [('inference.strategy', 'independent')])
        self.assertEqual(independent.inference.strategy, 'independent')
        untrained = build_config({}, [('training.iterations', 0)])
        self.assertEqual(untrained.training.iterations, 0)

    def test_shipped_configs_validate(self):
        self.assertGreaterEqual(len(SHIPPED_CONFIGS), 7)
        for path in SHIPPED_CONFIGS:
            with self.subTest(config=path.name):
                self.assertTrue(load_config(path).name)

    def test_environment_uses_the_task(self):
        config = build_config({'task': {'properties': ['heavyatoms'], 'gamma': 0.3}})
        env = config.environment(budget=7)
        self.assertEqual(env.ledger.budget, 7)
        self.assertEqual(env.settings.gamma, 0.3)
        self.assertIsNone(config.environment().ledger.budget)


class LeadsTests(SimpleTestCase):
    def test_shipped_leads(self):
        leads = load_leads(SHIPPED_LEADS)
        self.assertEqual(len(leads), 200)
        self.assertEqual(len(leads), len(set(leads)))
        train, test = split_leads(leads, seed=0)
        self.assertEqual((len(train), len(test)), (128, 64))

    def test_no_shipped_lead_starts_out_successful(self):
        leads = [parse_smiles(lead) for lead in load_leads(SHIPPED_LEADS)]
        for path in SHIPPED_CONFIGS:
            config = load_config(path)
            env = config.environment()
            for lead in leads:
                scores = env.ledger.query(lead, config.specs)
                report = check_success(config.specs, scores, scores, 1.0, env.settings.gamma, env.mode)
                self.assertFalse(report.success, f'{path.name}: {canonicalize(lead)} {scores}')

    def test_lead_is_never_the_optimized_molecule(self):
        spec = property_spec('logp_proxy')
        lead = PoolEntry('CCCCCC', 0.0, 1.0, {'logp_proxy': 2.9}, success=True)
        other = PoolEntry('CCCCCO', -0.5, 0.5, {'logp_proxy': 2.1}, success=True)
        stats = {'calls': 2, 'cache_hits': 0}
        self.assertFalse(select_result('CCCCCC', lead.scores, [lead], [spec], stats).success)
        chosen = select_result('CCCCCC', lead.scores, [lead, other], [spec], stats)
        self.assertEqual((chosen.success, chosen.optimized), (True, 'CCCCCO'))

    def test_split_is_disjoint_and_seeded(self):
        leads = [f'C{"C" * index}O' for index in range(30)]
        train, test = split_leads(leads, seed=0, train=20, test=10)
        self.assertEqual((len(train), len(test)), (20, 10))
        self.assertFalse(set(train) & set(test))
        self.assertEqual(split_leads(leads, seed=0, train=20, test=10), (train, test))
        self.assertNotEqual(split_leads(leads, seed=1, train=20, test=10)[1], test)
        self.assertEqual(split_leads(leads, seed=0, train=5, test=10)[1], test)

    def test_short_lead_list(self):
        with self.assertLogs('bench.leads', level='WARNING'):
            train, test = split_leads(['CCO', 'CCN', 'CCC'], seed=0, train=4, test=2)
        self.assertEqual((len(train), len(test)), (1, 2))


class GaBaselineTests(SimpleTestCase):
    def env(self, budget):
        settings = EnvironmentSettings(task_mode=MULTI)
        return MoleculeEnvironment(OracleLedger(budget=budget), [property_spec('heavyatoms')], settings)

    def test_single_call_returns_the_lead(self):
        env = self.env(1)
        outcome = ga_baseline(GA_LEADS[0], env, EvolveConfig(budget=1), seed=0)
        self.assertFalse(outcome.success)
        self.assertIsNone(outcome.optimized)
        self.assertEqual(outcome.similarity, 1.0)
        self.assertEqual(env.ledger.calls, 1)

    def test_seeded_runs_repeat(self):
        first = ga_baseline(GA_LEADS[1], self.env(40), EvolveConfig(budget=40), seed=5)
        second = ga_baseline(GA_LEADS[1], self.env(40), EvolveConfig(budget=40), seed=5)
        self.assertEqual(first.to_dict(), second.to_dict())
        self.assertEqual(first.method, 'ga')

    def test_heavy_atoms_improve(self):
        improved = 0
        for index, lead in enumerate(GA_LEADS):
            env = self.env(100)
            outcome = ga_baseline(lead, env, EvolveConfig(budget=100), seed=index)
            self.assertLessEqual(outcome.calls, 100)
            improved += outcome.success and outcome.fitness > 0
        self.assertGreaterEqual(improved, 3)

    def test_heavy_atom_target_on_fifty_leads(self):
        leads = load_leads(SHIPPED_LEADS)[-50:]
        improved = 0
        for index, lead in enumerate(leads):
            outcome = ga_baseline(lead, self.env(500), EvolveConfig(budget=500), seed=index)
            self.assertLessEqual(outcome.calls, 500)
            improved += outcome.success and outcome.fitness > 0
        self.assertGreaterEqual(improved, 45)


class RunnerTests(SimpleTestCase):
    def test_lead_seed(self):
        self.assertEqual(lead_seed(0, 1), lead_seed(0, 1))
        self.assertNotEqual(lead_seed(0, 1), lead_seed(0, 2))

    def test_failed_lead_becomes_an_error_record(self):
        with tempfile.TemporaryDirectory() as directory:
            config = build_config(tiny_config(write_leads(directory)))
            reply = optimize_lead({'config': config.to_dict(), 'checkpoint': None, 'lead': 'C(', 'index': 4})
        self.assertEqual(reply['log'], [])
        self.assertEqual(reply['result']['index'], 4)
        self.assertTrue(reply['result']['error'])
        self.assertFalse(reply['result']['success'])

    def test_bad_config_becomes_an_error_record(self):
        reply = optimize_lead({'config': {'task': {'beam': 3}}, 'checkpoint': None, 'lead': 'CCO', 'index': 1})
        self.assertEqual(reply['log'], [])
        self.assertEqual(reply['result']['index'], 1)
        self.assertEqual(reply['result']['method'], 'pgpo')
        self.assertTrue(reply['result']['error'])

    def test_worker_count_does_not_change_results(self):
        with tempfile.TemporaryDirectory() as directory:
            leads_file = write_leads(directory)
            texts = []
            for workers in (1, 4):
                config = build_config(tiny_config(leads_file, workers=workers))
                output = Path(directory) / f'workers-{workers}'
                results, _ = optimize_leads(config, config.initial_params(), GA_LEADS, output)
                self.assertTrue(all(item.calls <= 12 for item in results))
                texts.append((output / 'results.jsonl').read_text() + (output / 'evolution.jsonl').read_text())
            self.assertEqual(texts[0], texts[1])

    def test_experiment_files_repeat_and_match_metrics(self):
        with tempfile.TemporaryDirectory() as directory:
            leads_file = write_leads(directory)
            outputs = []
            for run in ('a', 'b'):
                output = Path(directory) / run
                run_experiment(build_config(tiny_config(leads_file)), output)
                outputs.append(output)
            for name in ('results.jsonl', 'metrics.json', 'summary.csv', 'policy.json', 'diagnostics.jsonl'):
                self.assertEqual((outputs[0] / name).read_text(), (outputs[1] / name).read_text(), name)
            config = build_config(tiny_config(leads_file))
            metrics = json.loads((outputs[0] / 'metrics.json').read_text())
            self.assertEqual(summarize(read_results(outputs[0] / 'results.jsonl'), config.specs), metrics)
            self.assertEqual(metrics['count'], 3)

    def test_untrained_and_baseline_arms_run(self):
        with tempfile.TemporaryDirectory() as directory:
            leads_file = write_leads(directory)
            for name, data in (('untrained', tiny_config(leads_file, training={'iterations': 0})),
                               ('ga', tiny_config(leads_file, method='ga')),
                               ('independent', tiny_config(leads_file, inference={'strategy': 'independent'}))):
                with self.subTest(arm=name):
                    summary = run_experiment(build_config(data), Path(directory) / name)
                    self.assertEqual(summary['count'], 3)
                    self.assertLessEqual(summary['max_calls'], 12)


class CompareTests(SimpleTestCase):
    def test_arm_configs(self):
        with tempfile.TemporaryDirectory() as directory:
            config = build_config(tiny_config(write_leads(directory)))
            arms = {arm: arm_config(config, arm, 7) for arm in ARMS}
        self.assertEqual(sorted(arms), ['ga', 'pgpo', 'ppo', 'untrained'])
        self.assertTrue(all(arm.seed == 7 for arm in arms.values()))
        self.assertEqual(arms['pgpo'].pgpo.lambda_pref, config.pgpo.lambda_pref)
        self.assertEqual(arms['ppo'].pgpo.lambda_pref, 0.0)
        self.assertEqual(arms['untrained'].training.iterations, 0)
        self.assertEqual(arms['ga'].method, 'ga')
        self.assertEqual(arms['ppo'].name, 'tiny-ppo')

    def test_ordering_checks(self):
        medians = {'pgpo': 40.0, 'ppo': 30.0, 'untrained': 30.0, 'ga': 35.0}
        self.assertEqual(ordering_checks(medians), {
            'pgpo_at_least_ppo': True, 'ppo_at_least_untrained': True, 'pgpo_ahead_of_ga': True,
        })
        self.assertFalse(ordering_checks({**medians, 'ga': 36.0})['pgpo_ahead_of_ga'])
        self.assertTrue(ordering_checks({**medians, 'ga': 36.0}, margin=4.0)['pgpo_ahead_of_ga'])
        self.assertFalse(ordering_checks({**medians, 'untrained': 31.0})['ppo_at_least_untrained'])
        self.assertFalse(ordering_checks({**medians, 'ppo': 41.0})['pgpo_at_least_ppo'])

    def test_untrained_config_skips_training(self):
        config = load_config(DATA_DIR / 'configs' / 'untrained.json')
        self.assertEqual(config.training.iterations, 0)
        self.assertEqual(config.method, 'pgpo')


class ExperimentRunTests(TestCase):
    def test_status_moves_through_declared_choices(self):
        declared = [value for value, _ in ExperimentRun.STATUS_CHOICES]
        self.assertEqual(declared, ['running', 'finished', 'failed'])
        run = ExperimentRun.objects.create(command='optimize', name='tiny')
        self.assertEqual(run.status, 'running')
        run.mark_finished({'success_rate': 50.0})
        run.refresh_from_db()
        self.assertEqual(run.status, 'finished')
        self.assertEqual(run.metrics, {'success_rate': 50.0})
        self.assertIsNotNone(run.finished_at)
        run.mark_failed(ValueError('boom'))
        run.refresh_from_db()
        self.assertIn(run.status, declared)
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.error, 'boom')
        run.full_clean()


class CommandTests(TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.root = Path(self.directory.name)
        self.config_path = self.root / 'config.json'
        self.config_path.write_text(json.dumps(tiny_config(write_leads(self.root))))

    def test_bad_config_exits_with_one(self):
        with self.assertRaises(CommandError) as caught:
            call_command('optimize', config=str(self.config_path), assignments=['task.beam=3'], stdout=io.StringIO())
        self.assertEqual(caught.exception.returncode, 1)

    def test_missing_checkpoint_exits_with_two(self):
        with self.assertRaises(CommandError) as caught:
            call_command('optimize', config=str(self.config_path), output=str(self.root / 'out'),
                         checkpoint=str(self.root / 'missing.json'), stdout=io.StringIO())
        self.assertEqual(caught.exception.returncode, 2)
        self.assertEqual(ExperimentRun.objects.get().status, 'failed')

    def test_every_lead_failing_exits_with_two(self):
        table = self.root / 'drd2.tsv'
        table.write_text('CCCCCCCCCC\t0.9\n', encoding='utf-8')
        self.config_path.write_text(json.dumps(tiny_config(
            write_leads(self.root), task={'properties': ['drd2'], 'tables': {'drd2': str(table)}},
        )))
        with self.assertRaises(CommandError) as caught:
            call_command('optimize', config=str(self.config_path), output=str(self.root / 'out'), stdout=io.StringIO())
        self.assertEqual(caught.exception.returncode, 2)
        self.assertEqual(ExperimentRun.objects.get().status, 'failed')
        results = read_results(self.root / 'out' / 'results.jsonl')
        self.assertEqual(len(results), 3)
        self.assertTrue(all(item.error for item in results))

    def test_compare_reports_every_arm(self):
        output = self.root / 'compare'
        out = io.StringIO()
        call_command('experiment', config=str(self.config_path), output=str(output), compare=True, seeds=2, stdout=out)
        report = json.loads((output / 'comparison.json').read_text())
        self.assertEqual(report['seeds'], [3, 4])
        self.assertEqual(sorted(report['median_success_rate']), ['ga', 'pgpo', 'ppo', 'untrained'])
        self.assertEqual(sorted(report['checks']), ['pgpo_ahead_of_ga', 'pgpo_at_least_ppo', 'ppo_at_least_untrained'])
        self.assertEqual(report['ordering_holds'], all(report['checks'].values()))
        self.assertTrue(all(0.0 <= rate <= 100.0 for rate in report['median_success_rate'].values()))

        rows = (output / 'comparison.csv').read_text().splitlines()
        self.assertEqual(len(rows), 1 + 2 * 4)
        self.assertTrue(rows[0].startswith('arm,seed,'))
        for arm in ARMS:
            self.assertTrue((output / arm / 'seed-4' / 'results.jsonl').exists())
        self.assertFalse((output / 'ga' / 'seed-3' / 'policy.json').exists())
        self.assertTrue((output / 'untrained' / 'seed-3' / 'policy.json').exists())
        run = ExperimentRun.objects.get()
        self.assertEqual((run.command, run.status), ('compare', 'finished'))
        self.assertEqual(run.metrics, report)

    def test_compare_needs_a_seed(self):
        with self.assertRaises(CommandError) as caught:
            call_command('experiment', config=str(self.config_path), compare=True, seeds=0, stdout=io.StringIO())
        self.assertEqual(caught.exception.returncode, 1)

    def test_train_optimize_eval_plot(self):
        train_dir, optimize_dir = self.root / 'train', self.root / 'optimize'
        call_command('train', config=str(self.config_path), output=str(train_dir), stdout=io.StringIO())
        self.assertTrue((train_dir / 'policy.json').exists())

        call_command('optimize', config=str(self.config_path), output=str(optimize_dir), budget=10,
                     checkpoint=str(train_dir / 'policy.json'), stdout=io.StringIO())
        results = read_results(optimize_dir / 'results.jsonl')
        self.assertEqual(len(results), 3)
        self.assertTrue(all(item.calls <= 10 for item in results))
        self.assertEqual(
            list(ExperimentRun.objects.order_by('created_at', 'id').values_list('command', 'status')),
            [('train', 'finished'), ('optimize', 'finished')],
        )

        out = io.StringIO()
        call_command('eval', str(optimize_dir / 'results.jsonl'), stdout=out)
        self.assertEqual(json.loads(out.getvalue())['count'], 3)

        curves = self.root / 'curves.csv'
        call_command('plot_data', str(optimize_dir / 'results.jsonl'), budget=10, output=str(curves),
                     stdout=io.StringIO())
        header = curves.read_text().splitlines()[0]
        self.assertEqual(header, 'label,calls,success_rate')
