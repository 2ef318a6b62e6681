import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from chemgraph.exceptions import ChemGraphError
from chemgraph.graph import Bond, MolecularGraph
from chemgraph.smiles import parse_smiles

from .exceptions import BudgetExhausted, MissingKey, NonFiniteScore, OracleError, TableParseError, UnknownProperty
from .ledger import OracleLedger
from .properties import PropertySpec, property_spec, resolve_specs
from .proxies import BUILTIN_PROPERTIES, builtin_property
from .table import load_table_oracle

FRAGMENTS = ['C', 'C', 'N', 'O', 'S', 'F', 'Cl', 'C(C)', 'C(=O)', 'c1ccccc1', 'C1CCNCC1', 'C(O)', 'N(C)', 'c1ccncc1']


def random_molecules(count, seed=0):
    rng = np.random.default_rng(seed)
    found = []
    for _ in range(20 * count):
        text = ''.join(rng.choice(FRAGMENTS, size=int(rng.integers(1, 8))))
        try:
            found.append(parse_smiles(text))
        except ChemGraphError:
            continue
        if len(found) == count:
            break
    return found


def shuffled(graph, seed):
    order = np.random.default_rng(seed).permutation(len(graph.atoms))
    new_index = {int(old): new for new, old in enumerate(order)}
    return MolecularGraph(
        [graph.atoms[int(old)] for old in order],
        [Bond(new_index[b.begin], new_index[b.end], b.order, b.stereo) for b in graph.bonds],
    )


def write_table(directory, text):
    path = Path(directory) / 'scores.tsv'
    path.write_text(text, encoding='utf-8')
    return path


class BuiltinPropertyTests(SimpleTestCase):
    def test_heavy_atom_count(self):
        self.assertEqual(builtin_property('heavyatoms', parse_smiles('CCO')), 3.0)

    def test_hydrocarbon_is_more_lipophilic_than_water(self):
        hexane = builtin_property('logp_proxy', parse_smiles('CCCCCC'))
        water = builtin_property('logp_proxy', parse_smiles('O'))
        self.assertGreater(hexane, water)

    def test_ring_count(self):
        self.assertEqual(builtin_property('ringcount', parse_smiles('c1ccc2ccccc2c1')), 2.0)
        self.assertEqual(builtin_property('ringcount', parse_smiles('CCO')), 0.0)

    def test_qed_proxy_is_bounded(self):
        molecules = random_molecules(100)
        self.assertEqual(len(molecules), 100)
        for graph in molecules:
            value = builtin_property('qed_proxy', graph)
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0)

    def test_sa_proxy_prefers_small_simple_molecules(self):
        simple = builtin_property('sa_proxy', parse_smiles('CCO'))
        crowded = builtin_property('sa_proxy', parse_smiles('CC(C)(C)C1CC2(CCC1)CCC(C)(C)C2'))
        self.assertLess(simple, crowded)
        self.assertGreaterEqual(simple, 1.0)
        self.assertLessEqual(crowded, 10.0)

    def test_scores_ignore_atom_order(self):
        for graph in random_molecules(25, seed=4):
            for name in BUILTIN_PROPERTIES:
                self.assertEqual(builtin_property(name, shuffled(graph, 1)), builtin_property(name, graph))

    def test_unknown_property(self):
        with self.assertRaises(UnknownProperty):
            builtin_property('solubility', parse_smiles('C'))


class PropertySpecTests(SimpleTestCase):
    def test_registry_thresholds(self):
        qed = property_spec('qed_proxy')
        self.assertEqual((qed.direction, qed.threshold, qed.delta), ('maximize', 0.9, 0.1))
        sa = property_spec('sa_proxy')
        self.assertTrue(sa.meets_threshold(2.4))
        self.assertFalse(sa.meets_threshold(2.6))
        self.assertTrue(sa.meets_improvement(2.0, 2.5))
        self.assertFalse(sa.meets_improvement(2.4, 2.5))

    def test_signed_improvement(self):
        self.assertAlmostEqual(property_spec('sa_proxy').improvement(3.0, 3.5), 0.5)
        self.assertAlmostEqual(property_spec('qed_proxy').improvement(0.6, 0.5), 0.1)

    def test_validation(self):
        with self.assertRaises(OracleError):
            PropertySpec('x', direction='sideways')
        with self.assertRaises(OracleError):
            PropertySpec('x', weight=math.inf)
        with self.assertRaises(OracleError):
            PropertySpec('x', delta=-1.0)
        with self.assertRaises(UnknownProperty):
            property_spec('nope')

    def test_resolve_mixed_entries(self):
        specs = resolve_specs(['qed_proxy', {'name': 'sa_proxy', 'weight': 2.0},
                               {'name': 'custom', 'direction': 'minimize', 'threshold': 1.0}])
        self.assertEqual([spec.name for spec in specs], ['qed_proxy', 'sa_proxy', 'custom'])
        self.assertEqual(specs[1].weight, 2.0)
        self.assertEqual(specs[1].direction, 'minimize')
        self.assertEqual(specs[2].sign, -1.0)


class OracleLedgerTests(SimpleTestCase):
    specs = ['qed_proxy', 'logp_proxy']

    def test_repeat_query_is_free(self):
        ledger = OracleLedger(budget=10)
        graph = parse_smiles('CC(=O)Nc1ccc(O)cc1')
        first = ledger.query(graph, self.specs)
        second = ledger.query(graph, self.specs)
        self.assertEqual(first, second)
        self.assertEqual(ledger.calls, 1)
        self.assertEqual(ledger.cache_hits, 1)

    def test_budget_boundary(self):
        ledger = OracleLedger(budget=1)
        ledger.query(parse_smiles('CCO'), self.specs)
        with self.assertRaises(BudgetExhausted):
            ledger.query(parse_smiles('CCN'), self.specs)
        self.assertEqual(ledger.calls, 1)
        ledger.query(parse_smiles('OCC'), self.specs)
        self.assertEqual(ledger.calls, 1)

    def test_zero_budget(self):
        with self.assertRaises(BudgetExhausted):
            OracleLedger(budget=0).query(parse_smiles('C'), self.specs)

    def test_equivalent_smiles_share_one_call(self):
        ledger = OracleLedger(budget=5)
        ledger.query(parse_smiles('OCC'), self.specs)
        ledger.query(parse_smiles('CCO'), self.specs)
        self.assertEqual(ledger.calls, 1)
        self.assertEqual(ledger.call_index('CCO'), 1)

    def test_calls_count_distinct_molecules(self):
        ledger = OracleLedger(budget=None)
        molecules = random_molecules(40, seed=9)
        for graph in molecules + molecules[:10]:
            ledger.query(graph, self.specs)
        distinct = {ledger_key for ledger_key in ledger._cache}
        self.assertEqual(ledger.calls, len(distinct))
        self.assertIsNone(ledger.remaining)
        self.assertFalse(ledger.exhausted)

    def test_extra_properties_do_not_charge(self):
        ledger = OracleLedger(budget=2)
        graph = parse_smiles('c1ccccc1O')
        ledger.query(graph, ['qed_proxy'])
        scores = ledger.query(graph, ['qed_proxy', 'ringcount'])
        self.assertEqual(scores['ringcount'], 1.0)
        self.assertEqual(ledger.calls, 1)

    def test_non_finite_scores_are_rejected(self):
        ledger = OracleLedger(budget=3, oracles={'broken': lambda graph: float('nan')})
        with self.assertRaises(NonFiniteScore):
            ledger.query(parse_smiles('C'), ['broken'])
        self.assertEqual(ledger.calls, 0)
        self.assertFalse(ledger.is_cached(parse_smiles('C')))

    def test_concurrent_queries_charge_once_per_molecule(self):
        ledger = OracleLedger(budget=100)
        molecules = random_molecules(30, seed=2)
        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(lambda graph: ledger.query(graph, self.specs), molecules * 4))
        self.assertEqual(ledger.calls, len(ledger._cache))
        self.assertLessEqual(ledger.calls, 30)
        self.assertEqual(ledger.calls + ledger.cache_hits, len(molecules) * 4)

    def test_stats(self):
        ledger = OracleLedger(budget=4)
        graph = parse_smiles('CCO')
        ledger.query(graph, self.specs)
        ledger.query(graph, self.specs)
        self.assertEqual(ledger.stats(), {'calls': 1, 'budget': 4, 'cache_hits': 1, 'hit_rate': 0.5})


class TableOracleTests(SimpleTestCase):
    def test_lookup_is_canonical(self):
        with tempfile.TemporaryDirectory() as directory:
            oracle = load_table_oracle(write_table(directory, 'CCO\t0.5\nc1ccccc1\t0.25\n'))
        self.assertEqual(oracle(parse_smiles('OCC')), 0.5)
        self.assertEqual(oracle(parse_smiles('C1=CC=CC=C1')), 0.25)
        self.assertEqual(oracle.name, 'scores')

    def test_empty_file_misses_everything(self):
        with tempfile.TemporaryDirectory() as directory:
            oracle = load_table_oracle(write_table(directory, ''))
        with self.assertRaises(MissingKey):
            oracle(parse_smiles('C'))

    def test_space_separated_line(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(TableParseError) as caught:
                load_table_oracle(write_table(directory, 'CCO 0.5\n'))
        self.assertEqual(caught.exception.line_number, 1)

    def test_error_reports_line_number(self):
        with tempfile.TemporaryDirectory() as directory:
            for text in ('CCO\t0.5\nCCN\tabc\n', 'CCO\t0.5\nC(\t0.1\n', 'CCO\t0.5\nCC\tnan\n'):
                with self.subTest(text=text):
                    with self.assertRaises(TableParseError) as caught:
                        load_table_oracle(write_table(directory, text))
                    self.assertEqual(caught.exception.line_number, 2)

    def test_plugs_into_ledger(self):
        with tempfile.TemporaryDirectory() as directory:
            oracle = load_table_oracle(write_table(directory, 'CCO\t0.7\n'), name='drd2')
        ledger = OracleLedger(budget=2, oracles={'drd2': oracle})
        self.assertEqual(ledger.query(parse_smiles('OCC'), ['drd2', 'heavyatoms']), {'drd2': 0.7, 'heavyatoms': 3.0})
        with self.assertRaises(MissingKey):
            ledger.query(parse_smiles('CCN'), ['drd2'])
        self.assertEqual(ledger.calls, 1)
