import numpy as np
from django.test import TestCase

from .canonical import canonical_ranks, canonicalize
from .exceptions import (
    BadValence,
    ChemGraphError,
    LengthMismatch,
    MultiFragment,
    SmilesSyntaxError,
    UnbalancedBracket,
    UnclosedRing,
    UnsupportedElement,
)
from .fingerprint import Fingerprint, morgan_fingerprint, tanimoto
from .graph import Atom, Bond, BondOrder, MolecularGraph
from .smiles import parse_smiles, write_smiles

SAMPLE_SMILES = [
    'CCO',
    'CC(C)O',
    'OC(=O)c1ccccc1',
    'c1ccc2ccccc2c1',
    'c1ccncc1',
    'c1cc[nH]c1',
    'CC(=O)Nc1ccc(O)cc1',
    'C1CCCCC1',
    'CN1CCOCC1',
    'FC(F)(F)c1ccccc1Cl',
    'C[N+](C)(C)C',
    'N#Cc1ccoc1',
    'CC(C)(C)OC(=O)N1CCC(CC1)C(=O)O',
]


def permuted(graph, seed):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(graph.atoms))
    new_index = {int(old): new for new, old in enumerate(order)}
    atoms = [graph.atoms[int(old)] for old in order]
    bonds = [Bond(new_index[b.begin], new_index[b.end], b.order, b.stereo) for b in graph.bonds]
    return MolecularGraph(atoms, bonds)


class ParseSmilesTests(TestCase):
    def test_single_carbon_has_four_hydrogens(self):
        graph = parse_smiles('C')
        self.assertEqual(len(graph), 1)
        self.assertEqual(graph.atoms[0].element, 'C')
        self.assertEqual(graph.atoms[0].hydrogens, 4)
        self.assertEqual(graph.bonds, ())

    def test_open_branch_is_unbalanced(self):
        with self.assertRaises(UnbalancedBracket):
            parse_smiles('C(')

    def test_benzene_ring_flags(self):
        graph = parse_smiles('c1ccccc1')
        self.assertEqual(len(graph.atoms), 6)
        self.assertEqual(len(graph.bonds), 6)
        self.assertEqual(graph.ring_count, 1)
        self.assertTrue(all(graph.ring_atoms))
        self.assertTrue(all(atom.aromatic for atom in graph.atoms))
        self.assertTrue(all(atom.hydrogens == 1 for atom in graph.atoms))
        self.assertTrue(all(bond.order == BondOrder.AROMATIC for bond in graph.bonds))

    def test_error_kinds(self):
        cases = {
            'CC.O': MultiFragment,
            'C1CC': UnclosedRing,
            '[Xe]': UnsupportedElement,
            '[Na+]': UnsupportedElement,
            'CX': UnsupportedElement,
            'C(C)(C)(C)(C)C': BadValence,
            '[CH5]': BadValence,
            'C]': UnbalancedBracket,
            '[CH4': UnbalancedBracket,
            'C)': UnbalancedBracket,
            '': SmilesSyntaxError,
            '=C': SmilesSyntaxError,
            'CC=': SmilesSyntaxError,
            'C()C': SmilesSyntaxError,
            'C11': SmilesSyntaxError,
        }
        for text, error in cases.items():
            with self.subTest(text=text):
                with self.assertRaises(error):
                    parse_smiles(text)

    def test_bracket_atoms(self):
        graph = parse_smiles('[NH4+]')
        self.assertEqual(graph.atoms[0].charge, 1)
        self.assertEqual(graph.atoms[0].hydrogens, 4)
        graph = parse_smiles('C[O-]')
        self.assertEqual(graph.atoms[1].charge, -1)
        self.assertEqual(graph.atoms[1].hydrogens, 0)

    def test_ring_atoms_exclude_substituents(self):
        graph = parse_smiles('Cc1ccccc1')
        self.assertFalse(graph.in_ring(0))
        self.assertTrue(all(graph.in_ring(i) for i in range(1, 7)))

    def test_random_bytes_only_raise_structured_errors(self):
        rng = np.random.default_rng(7)
        alphabet = list('CNOSPFIBrcnos()[]=#-+@%123456789.H/\\:') + ['\x00', 'é', ' ']
        for _ in range(2000):
            length = int(rng.integers(1, 24))
            if rng.random() < 0.5:
                text = ''.join(rng.choice(alphabet, size=length))
            else:
                text = bytes(rng.integers(0, 256, size=length, dtype=np.uint8)).decode('latin-1')
            try:
                graph = parse_smiles(text)
            except ChemGraphError:
                continue
            for index, atom in enumerate(graph.atoms):
                self.assertGreaterEqual(atom.hydrogens, 0)
            self.assertEqual(canonicalize(parse_smiles(canonicalize(graph))), canonicalize(graph))


class CanonicalizeTests(TestCase):
    def test_atom_order_does_not_matter(self):
        self.assertEqual(canonicalize(parse_smiles('OCC')), canonicalize(parse_smiles('CCO')))
        self.assertEqual(canonicalize(parse_smiles('CCO')), 'CCO')
        self.assertEqual(
            canonicalize(parse_smiles('OC(=O)c1ccccc1')),
            canonicalize(parse_smiles('c1ccc(cc1)C(=O)O')),
        )

    def test_single_atom(self):
        self.assertEqual(canonicalize(parse_smiles('C')), 'C')

    def test_kekule_and_aromatic_forms_agree(self):
        pairs = [
            ('C1=CC=CC=C1', 'c1ccccc1'),
            ('C1=CC=NC=C1', 'c1ccncc1'),
            ('C1=CNC=C1', 'c1cc[nH]c1'),
            ('C1=COC=C1', 'c1ccoc1'),
            ('C1=CC=C2C=CC=CC2=C1', 'c1ccc2ccccc2c1'),
            ('OC1=CC=CC=C1', 'Oc1ccccc1'),
        ]
        for kekule, aromatic in pairs:
            with self.subTest(kekule=kekule):
                self.assertEqual(canonicalize(parse_smiles(kekule)), canonicalize(parse_smiles(aromatic)))

    def test_non_aromatic_rings_stay_kekule(self):
        graph = parse_smiles('C1=CCCCC1')
        self.assertFalse(any(atom.aromatic for atom in graph.atoms))

    def test_canonical_form_is_a_fixed_point(self):
        for text in SAMPLE_SMILES:
            with self.subTest(smiles=text):
                once = canonicalize(parse_smiles(text))
                self.assertEqual(canonicalize(parse_smiles(once)), once)

    def test_invariant_under_atom_permutation(self):
        for text in SAMPLE_SMILES:
            graph = parse_smiles(text)
            expected = canonicalize(graph)
            for seed in range(5):
                with self.subTest(smiles=text, seed=seed):
                    self.assertEqual(canonicalize(permuted(graph, seed)), expected)

    def test_ranks_are_a_permutation(self):
        graph = parse_smiles('CC(C)Cc1ccc(cc1)C(C)C(=O)O')
        self.assertEqual(sorted(canonical_ranks(graph)), list(range(len(graph.atoms))))


class WriteSmilesTests(TestCase):
    def test_single_nitrogen(self):
        graph = MolecularGraph([Atom('N', hydrogens=3)], [])
        self.assertEqual(write_smiles(graph), 'N')

    def test_ethanol_round_trip(self):
        graph = MolecularGraph(
            [Atom('C', hydrogens=3), Atom('C', hydrogens=2), Atom('O', hydrogens=1)],
            [Bond(0, 1), Bond(1, 2)],
        )
        parsed = parse_smiles(write_smiles(graph))
        self.assertEqual(sorted(atom.element for atom in parsed.atoms), ['C', 'C', 'O'])
        self.assertEqual(len(parsed.bonds), 2)

    def test_round_trip_preserves_structure(self):
        for text in SAMPLE_SMILES:
            with self.subTest(smiles=text):
                graph = parse_smiles(text)
                again = parse_smiles(write_smiles(graph))
                self.assertEqual(canonicalize(again), canonicalize(graph))

    def test_long_chains_are_written(self):
        for text in ('C' * 10 + 'O' + 'C' * 1490, 'c1ccccc1' + 'C' * 1600 + 'N', 'C1CC1' + 'CC(C)' * 600 + 'O'):
            with self.subTest(length=len(text)):
                graph = parse_smiles(text)
                canonical = canonicalize(graph)
                again = parse_smiles(canonical)
                self.assertEqual(len(again.atoms), len(graph.atoms))
                self.assertEqual(canonicalize(again), canonical)

    def test_stereo_annotations_survive(self):
        written = write_smiles(parse_smiles('C[C@H](O)N'))
        self.assertIn('@', written)
        self.assertIn('/', write_smiles(parse_smiles('F/C=C/F')))

    def test_biaryl_single_bond_is_explicit(self):
        graph = parse_smiles('c1ccccc1-c1ccccc1')
        self.assertIn('-', write_smiles(graph))
        self.assertEqual(len(parse_smiles(write_smiles(graph)).bonds), 13)


class GraphInvariantTests(TestCase):
    def test_rejects_bad_bonds(self):
        from .exceptions import GraphError

        carbon = Atom('C', hydrogens=3)
        with self.assertRaises(GraphError):
            MolecularGraph([carbon], [Bond(0, 0)])
        with self.assertRaises(GraphError):
            MolecularGraph([carbon, carbon], [Bond(0, 1), Bond(1, 0)])
        with self.assertRaises(GraphError):
            MolecularGraph([carbon, carbon], [Bond(0, 2)])
        with self.assertRaises(GraphError):
            MolecularGraph([Atom('C', hydrogens=4), Atom('C', hydrogens=4)], [])

    def test_rejects_overfull_valence(self):
        with self.assertRaises(BadValence):
            MolecularGraph([Atom('O', hydrogens=2), Atom('C', hydrogens=3)], [Bond(0, 1)])


class FingerprintTests(TestCase):
    def test_radius_zero_single_atom(self):
        fingerprint = morgan_fingerprint(parse_smiles('C'), radius=0)
        self.assertEqual(fingerprint.popcount, 1)
        self.assertEqual(fingerprint.nbits, 2048)

    def test_atom_order_does_not_change_bits(self):
        self.assertEqual(morgan_fingerprint(parse_smiles('OCC')), morgan_fingerprint(parse_smiles('CCO')))
        for text in SAMPLE_SMILES:
            graph = parse_smiles(text)
            self.assertEqual(morgan_fingerprint(permuted(graph, 3)), morgan_fingerprint(graph))

    def test_different_heteroatom_changes_bits(self):
        self.assertNotEqual(morgan_fingerprint(parse_smiles('CCO')), morgan_fingerprint(parse_smiles('CCN')))

    def test_every_molecule_sets_a_bit(self):
        for text in SAMPLE_SMILES + ['C', 'O', '[H][H]']:
            self.assertGreaterEqual(morgan_fingerprint(parse_smiles(text)).popcount, 1)

    def test_rejects_bad_parameters(self):
        graph = parse_smiles('CC')
        with self.assertRaises(ChemGraphError):
            morgan_fingerprint(graph, nbits=1000)
        with self.assertRaises(ChemGraphError):
            morgan_fingerprint(graph, radius=-1)


class TanimotoTests(TestCase):
    def test_identity(self):
        fingerprint = morgan_fingerprint(parse_smiles('CC(=O)Nc1ccc(O)cc1'))
        self.assertEqual(tanimoto(fingerprint, fingerprint), 1.0)

    def test_set_arithmetic(self):
        first = Fingerprint.from_on_bits(2048, [1, 2])
        second = Fingerprint.from_on_bits(2048, [2, 3])
        self.assertAlmostEqual(tanimoto(first, second), 1 / 3, places=12)

    def test_methane_against_ethanol(self):
        value = tanimoto(morgan_fingerprint(parse_smiles('C')), morgan_fingerprint(parse_smiles('CCO')))
        self.assertGreater(value, 0.0)
        self.assertLess(value, 1.0)

    def test_empty_vectors(self):
        empty = Fingerprint.from_on_bits(64, [])
        self.assertEqual(tanimoto(empty, empty), 1.0)

    def test_length_mismatch(self):
        with self.assertRaises(LengthMismatch):
            tanimoto(Fingerprint.from_on_bits(64, [1]), Fingerprint.from_on_bits(128, [1]))

    def test_symmetric_and_bounded(self):
        prints = [morgan_fingerprint(parse_smiles(text)) for text in SAMPLE_SMILES]
        for first in prints:
            for second in prints:
                value = tanimoto(first, second)
                self.assertEqual(value, tanimoto(second, first))
                self.assertGreaterEqual(value, 0.0)
                self.assertLessEqual(value, 1.0)
                self.assertEqual(value == 1.0, first == second)
