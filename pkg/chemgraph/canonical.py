"""
Canonical atom ranking and canonical SMILES.

Atoms start from the invariant (atomic number, charge, degree, hydrogen
count, aromatic, ring member, isotope) and are refined by their sorted
neighbour ranks until the partition stops splitting. Remaining ties are
broken at the lowest tied rank by its lowest-index atom, then refined again.
Stereo annotations take no part in ranking.
"""
from collections import Counter

from .elements import ATOMIC_NUMBERS
from .graph import MolecularGraph
from .smiles import write_graph


def _dense_rank(keys):
    ordered = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [ordered[key] for key in keys]


def _refine(graph, ranks):
    classes = len(set(ranks))
    while True:
        signatures = [
            (ranks[index], tuple(sorted((int(bond.order), ranks[other]) for other, bond in graph.neighbors(index))))
            for index in range(len(graph.atoms))
        ]
        refined = _dense_rank(signatures)
        refined_classes = len(set(refined))
        if refined_classes == classes:
            return refined
        ranks, classes = refined, refined_classes


def atom_invariant(graph, index):
    atom = graph.atoms[index]
    return (
        ATOMIC_NUMBERS[atom.element],
        atom.charge,
        graph.degree(index),
        atom.hydrogens,
        atom.aromatic,
        graph.in_ring(index),
        atom.isotope or 0,
    )


def canonical_ranks(graph: MolecularGraph) -> list[int]:
    count = len(graph.atoms)
    ranks = _refine(graph, _dense_rank([atom_invariant(graph, i) for i in range(count)]))
    while len(set(ranks)) < count:
        tallies = Counter(ranks)
        tied = min(rank for rank, seen in tallies.items() if seen > 1)
        chosen = min(index for index in range(count) if ranks[index] == tied)
        split = [(rank, 0 if index == chosen or rank != tied else 1) for index, rank in enumerate(ranks)]
        ranks = _refine(graph, _dense_rank(split))
    return ranks


def canonicalize(graph: MolecularGraph) -> str:
    cached = graph._cache.get('canonical')
    if cached is None:
        cached = write_graph(graph, canonical_ranks(graph))
        graph._cache['canonical'] = cached
    return cached
