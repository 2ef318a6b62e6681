"""
Discrete molecular edits: replace an atom, delete a terminal atom, or append
a fragment from the shipped library at an atom that carries a hydrogen.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import chain, islice
from pathlib import Path
from typing import Optional

from django.conf import settings

from chemgraph.aromaticity import perceive_aromaticity
from chemgraph.elements import implicit_hydrogens
from chemgraph.exceptions import ChemGraphError
from chemgraph.graph import Bond, BondOrder, MolecularGraph
from chemgraph.smiles import parse_smiles

from .exceptions import IllegalEdit, PolicyError

logger = logging.getLogger(__name__)

DEFAULT_LIBRARY_PATH = Path(__file__).resolve().parent / 'data' / 'fragments.smi'
DEFAULT_EDIT_CAP = 64

REPLACEMENT_ELEMENTS = ('C', 'N', 'O', 'S', 'F', 'Cl')
AROMATIC_REPLACEMENTS = ('C', 'N')


class EditKind(str, Enum):
    REPLACE = 'replace_atom'
    DELETE = 'delete_terminal'
    APPEND = 'append_fragment'
    DONE = 'done'


@dataclass(frozen=True)
class EditAction:
    kind: EditKind
    atom: Optional[int] = None
    element: Optional[str] = None
    fragment: Optional[str] = None

    @property
    def action_class(self):
        if self.kind == EditKind.REPLACE:
            return f'replace:{self.element}'
        if self.kind == EditKind.APPEND:
            return f'append:{self.fragment}'
        if self.kind == EditKind.DELETE:
            return 'delete'
        return 'done'

    def describe(self):
        if self.kind == EditKind.REPLACE:
            return f'replace atom {self.atom} with {self.element}'
        if self.kind == EditKind.DELETE:
            return f'delete terminal atom {self.atom}'
        if self.kind == EditKind.APPEND:
            return f'append {self.fragment} at atom {self.atom}'
        return 'stop editing'


DONE = EditAction(EditKind.DONE)


@dataclass(frozen=True)
class Fragment:
    id: str
    smiles: str
    graph: MolecularGraph


class FragmentLibrary:
    def __init__(self, fragments):
        self.fragments = tuple(fragments)
        self._by_id = {fragment.id: fragment for fragment in self.fragments}

    def __iter__(self):
        return iter(self.fragments)

    def __len__(self):
        return len(self.fragments)

    def __getitem__(self, fragment_id):
        try:
            return self._by_id[fragment_id]
        except KeyError:
            raise IllegalEdit(f'unknown fragment {fragment_id!r}')

    @property
    def ids(self):
        return tuple(fragment.id for fragment in self.fragments)


@lru_cache(maxsize=8)
def _load_library(path):
    fragments = []
    with open(path, encoding='utf-8') as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            fields = line.split('\t')
            if len(fields) != 2:
                raise PolicyError(f'{path}:{line_number}: expected "id<TAB>SMILES"')
            fragment_id, smiles = fields
            try:
                graph = parse_smiles(smiles)
            except ChemGraphError as exc:
                raise PolicyError(f'{path}:{line_number}: bad fragment {smiles!r}: {exc}')
            if graph.atoms[0].hydrogens < 1:
                raise PolicyError(f'{path}:{line_number}: attachment atom of {fragment_id} has no hydrogen')
            fragments.append(Fragment(fragment_id, smiles, graph))
    logger.debug(f'Loaded {len(fragments)} fragments from {path}')
    return FragmentLibrary(fragments)


def load_fragment_library(path=None) -> FragmentLibrary:
    path = path or getattr(settings, 'POLO_FRAGMENT_LIBRARY', None) or DEFAULT_LIBRARY_PATH
    return _load_library(str(path))


def _is_heavy(graph, index):
    return graph.atoms[index].element != 'H'


def _replacement_hydrogens(graph, index, element):
    atom = graph.atoms[index]
    if atom.charge != 0 or atom.element == element or not _is_heavy(graph, index):
        return None
    if atom.aromatic:
        if atom.element not in AROMATIC_REPLACEMENTS or element not in AROMATIC_REPLACEMENTS:
            return None
        # pyrrole-type nitrogen donates two electrons; carbon cannot stand in
        if atom.element == 'N' and atom.hydrogens > 0:
            return None
    return implicit_hydrogens(
        element, graph.bond_order_sum(index), aromatic=atom.aromatic,
        exocyclic_double=graph.has_exocyclic_double(index),
    )


def _can_delete(graph, index):
    return _is_heavy(graph, index) and graph.heavy_atom_count > 1 and graph.degree(index) == 1


def _can_append(graph, index):
    return _is_heavy(graph, index) and graph.atoms[index].hydrogens >= 1


def is_legal(graph, action, library) -> bool:
    count = len(graph.atoms)
    if action.kind == EditKind.DONE:
        return True
    if action.atom is None or not 0 <= action.atom < count:
        return False
    if action.kind == EditKind.REPLACE:
        return _replacement_hydrogens(graph, action.atom, action.element) is not None
    if action.kind == EditKind.DELETE:
        return _can_delete(graph, action.atom)
    return action.fragment in library.ids and _can_append(graph, action.atom)


def _replace(graph, action):
    hydrogens = _replacement_hydrogens(graph, action.atom, action.element)
    if hydrogens is None:
        raise IllegalEdit(f'cannot {action.describe()}')
    atoms = list(graph.atoms)
    atoms[action.atom] = atoms[action.atom].evolve(
        element=action.element, hydrogens=hydrogens, chirality=None, isotope=None,
    )
    edited = MolecularGraph(atoms, graph.bonds)
    return perceive_aromaticity(edited) if graph.in_ring(action.atom) else edited


def _delete(graph, action):
    if not _can_delete(graph, action.atom):
        raise IllegalEdit(f'cannot {action.describe()}')
    (neighbor, bond), = graph.neighbors(action.atom)
    atoms = list(graph.atoms)
    atoms[neighbor] = atoms[neighbor].evolve(hydrogens=atoms[neighbor].hydrogens + bond.order.valence)
    remap = {}
    kept = []
    for index, atom in enumerate(atoms):
        if index != action.atom:
            remap[index] = len(kept)
            kept.append(atom)
    bonds = [
        Bond(remap[b.begin], remap[b.end], b.order, b.stereo)
        for b in graph.bonds if action.atom not in (b.begin, b.end)
    ]
    return MolecularGraph(kept, bonds)


def _append(graph, action, library):
    fragment = library[action.fragment]
    if not _can_append(graph, action.atom):
        raise IllegalEdit(f'cannot {action.describe()}: atom has no hydrogen')
    offset = len(graph.atoms)
    atoms = list(graph.atoms)
    atoms[action.atom] = atoms[action.atom].evolve(hydrogens=atoms[action.atom].hydrogens - 1)
    added = list(fragment.graph.atoms)
    added[0] = added[0].evolve(hydrogens=added[0].hydrogens - 1)
    bonds = list(graph.bonds)
    bonds.extend(Bond(b.begin + offset, b.end + offset, b.order, b.stereo) for b in fragment.graph.bonds)
    bonds.append(Bond(action.atom, offset, BondOrder.SINGLE))
    return MolecularGraph(atoms + added, bonds)


def apply_edit(graph, action, library=None) -> MolecularGraph:
    """Edited copy of ``graph``; the input is left untouched."""
    library = load_fragment_library() if library is None else library
    if action.kind == EditKind.DONE:
        return graph
    if action.atom is None or not 0 <= action.atom < len(graph.atoms):
        raise IllegalEdit(f'atom index {action.atom} out of range')
    try:
        if action.kind == EditKind.REPLACE:
            return _replace(graph, action)
        if action.kind == EditKind.DELETE:
            return _delete(graph, action)
        return _append(graph, action, library)
    except ChemGraphError as exc:
        raise IllegalEdit(f'cannot {action.describe()}: {exc}')


def _replace_candidates(graph):
    for index in range(len(graph.atoms)):
        for element in REPLACEMENT_ELEMENTS:
            if _replacement_hydrogens(graph, index, element) is not None:
                yield EditAction(EditKind.REPLACE, atom=index, element=element)


def _delete_candidates(graph):
    for index in range(len(graph.atoms)):
        if _can_delete(graph, index):
            yield EditAction(EditKind.DELETE, atom=index)


def _append_candidates(graph, library):
    for index in range(len(graph.atoms)):
        if _can_append(graph, index):
            for fragment in library:
                yield EditAction(EditKind.APPEND, atom=index, fragment=fragment.id)


def enumerate_edits(graph, library=None, cap=None) -> list:
    """
    Legal edits for ``graph``, at most ``cap`` of them: every replacement,
    then every deletion, then every append, each kind in atom-index order.
    """
    library = load_fragment_library() if library is None else library
    cap = cap or getattr(settings, 'POLO_EDIT_CAP', DEFAULT_EDIT_CAP)
    streams = chain(_replace_candidates(graph), _delete_candidates(graph), _append_candidates(graph, library))
    return list(islice(streams, cap))
