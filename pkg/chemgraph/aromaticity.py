"""
Aromaticity perception for kekulized input.

Rings of five to seven atoms are tested one at a time with a Hückel count;
a ring that passes has its atoms and ring bonds switched to the aromatic
form. Passes repeat so fused systems resolve once a neighbouring ring has
been marked.
"""
import networkx as nx

from .elements import AROMATIC_SYMBOLS
from .graph import Bond, BondOrder, MolecularGraph

RING_SIZES = range(5, 8)
AROMATIC_ELEMENTS = frozenset(AROMATIC_SYMBOLS.values())
_LONE_PAIR_DONORS = {'N', 'O', 'S', 'P'}


def _ring_edges(graph, ring):
    members = set(ring)
    return [bond for bond in graph.bonds if bond.begin in members and bond.end in members]


def _pi_electrons(graph, atoms, bonds, index, ring_keys, marked):
    atom = atoms[index]
    if atom.element not in AROMATIC_ELEMENTS:
        return None
    ring_double = False
    other_double = False
    for other, bond in graph.neighbors(index):
        current = bonds[bond.key]
        if current.order == BondOrder.DOUBLE:
            if bond.key in ring_keys:
                ring_double = True
            else:
                other_double = True
        elif current.order == BondOrder.TRIPLE:
            return None
    if ring_double:
        return 1
    if index in marked or atom.aromatic:
        return 1
    if other_double:
        return None
    if atom.element in _LONE_PAIR_DONORS and atom.charge == 0:
        return 2
    if atom.element == 'C' and atom.charge == -1:
        return 2
    return None


def perceive_aromaticity(graph: MolecularGraph) -> MolecularGraph:
    """Return a graph with Hückel-aromatic rings in aromatic form."""
    if graph.ring_count == 0:
        return graph

    rings = [
        tuple(sorted(ring)) for ring in nx.minimum_cycle_basis(graph.nx_graph)
        if len(ring) in RING_SIZES
    ]
    rings.sort(key=lambda ring: (len(ring), ring))

    atoms = list(graph.atoms)
    bonds = {bond.key: bond for bond in graph.bonds}
    marked = set()
    pending = [ring for ring in rings if not all(atoms[i].aromatic for i in ring)]

    changed = True
    while changed and pending:
        changed = False
        for ring in list(pending):
            edges = _ring_edges(graph, ring)
            ring_keys = {bond.key for bond in edges}
            electrons = 0
            for index in ring:
                count = _pi_electrons(graph, atoms, bonds, index, ring_keys, marked)
                if count is None:
                    break
                electrons += count
            else:
                if electrons >= 2 and (electrons - 2) % 4 == 0:
                    for index in ring:
                        atoms[index] = atoms[index].evolve(aromatic=True)
                        marked.add(index)
                    for bond in edges:
                        bonds[bond.key] = Bond(bond.begin, bond.end, BondOrder.AROMATIC)
                    pending.remove(ring)
                    changed = True

    if not marked:
        return graph
    return MolecularGraph(atoms, [bonds[bond.key] for bond in graph.bonds])
