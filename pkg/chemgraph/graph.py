"""
Immutable molecular graph: atoms, bonds and the ring information derived from them.
"""
from dataclasses import dataclass, replace
from enum import IntEnum
from functools import cached_property
from typing import Optional

import networkx as nx

from .elements import SUPPORTED_ELEMENTS, implicit_hydrogens, max_valence
from .exceptions import BadValence, GraphError, UnsupportedElement


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self):
        return 1 if self is BondOrder.AROMATIC else int(self)


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    hydrogens: int = 0
    aromatic: bool = False
    # Opaque annotations carried through reading and writing.
    chirality: Optional[str] = None
    isotope: Optional[int] = None

    def evolve(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    stereo: Optional[str] = None

    def other(self, index):
        return self.end if index == self.begin else self.begin

    @property
    def key(self):
        return frozenset((self.begin, self.end))


class MolecularGraph:
    """
    A single connected, valence-checked molecule.

    Instances are treated as immutable; edits build a new graph. Derived
    values (ring membership, canonical SMILES, fingerprints) are cached on
    the instance.
    """

    def __init__(self, atoms, bonds):
        self.atoms = tuple(atoms)
        self.bonds = tuple(bonds)
        self._adjacency = [[] for _ in self.atoms]
        self._bond_index = {}
        self._cache = {}
        self._validate()

    def _validate(self):
        if not self.atoms:
            raise GraphError('molecule has no atoms')
        for atom in self.atoms:
            if atom.element not in SUPPORTED_ELEMENTS:
                raise UnsupportedElement(f'unsupported element {atom.element!r}')
            if atom.hydrogens < 0:
                raise GraphError(f'negative hydrogen count on {atom.element}')

        count = len(self.atoms)
        for bond in self.bonds:
            if not (0 <= bond.begin < count and 0 <= bond.end < count):
                raise GraphError(f'bond {bond.begin}-{bond.end} references a missing atom')
            if bond.begin == bond.end:
                raise GraphError(f'self bond on atom {bond.begin}')
            if bond.key in self._bond_index:
                raise GraphError(f'duplicate bond {bond.begin}-{bond.end}')
            self._bond_index[bond.key] = bond
            self._adjacency[bond.begin].append((bond.end, bond))
            self._adjacency[bond.end].append((bond.begin, bond))

        for index, atom in enumerate(self.atoms):
            used = self.bond_order_sum(index) + atom.hydrogens
            if used > max_valence(atom.element, atom.charge):
                raise BadValence(
                    f'atom {index} ({atom.element}, charge {atom.charge}) has valence {used}'
                )

        if count > 1 and not nx.is_connected(self.nx_graph):
            raise GraphError('molecule is not connected')

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        from .smiles import write_smiles

        return f'MolecularGraph({write_smiles(self)!r})'

    @cached_property
    def nx_graph(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.atoms)))
        for bond in self.bonds:
            graph.add_edge(bond.begin, bond.end, order=bond.order)
        return graph

    @cached_property
    def ring_bonds(self):
        bridges = {frozenset(edge) for edge in nx.bridges(self.nx_graph)}
        return frozenset(bond.key for bond in self.bonds if bond.key not in bridges)

    @cached_property
    def ring_atoms(self):
        flags = [False] * len(self.atoms)
        for key in self.ring_bonds:
            for index in key:
                flags[index] = True
        return tuple(flags)

    @property
    def ring_count(self):
        return len(self.bonds) - len(self.atoms) + 1

    def neighbors(self, index):
        return self._adjacency[index]

    def degree(self, index):
        return len(self._adjacency[index])

    def heavy_degree(self, index):
        return sum(1 for other, _ in self._adjacency[index] if self.atoms[other].element != 'H')

    def bond_between(self, first, second):
        return self._bond_index.get(frozenset((first, second)))

    def bond_order_sum(self, index):
        return sum(bond.order.valence for _, bond in self._adjacency[index])

    def has_exocyclic_double(self, index):
        return any(bond.order == BondOrder.DOUBLE for _, bond in self._adjacency[index])

    def in_ring(self, index):
        return self.ring_atoms[index]

    def implicit_hydrogens(self, index):
        """Hydrogens an unbracketed writing of this atom would imply."""
        atom = self.atoms[index]
        return implicit_hydrogens(
            atom.element,
            self.bond_order_sum(index),
            aromatic=atom.aromatic,
            exocyclic_double=self.has_exocyclic_double(index),
            charge=atom.charge,
        )

    @property
    def heavy_atom_count(self):
        return sum(1 for atom in self.atoms if atom.element != 'H')
