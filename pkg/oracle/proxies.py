"""
Built-in proxy oracles computed from graph structure alone.

Parameters live in ``data/proxy_tables.json``. Sums go through ``math.fsum``
so scores do not depend on atom order.
"""
import json
import math
from functools import lru_cache
from pathlib import Path

import networkx as nx

from chemgraph.elements import ATOMIC_MASSES

from .exceptions import UnknownProperty

TABLES_PATH = Path(__file__).resolve().parent / 'data' / 'proxy_tables.json'


@lru_cache(maxsize=None)
def proxy_tables():
    with open(TABLES_PATH, encoding='utf-8') as handle:
        return json.load(handle)


def _logp_key_candidates(atom):
    kind = 'ar' if atom.aromatic else 'al'
    return (
        f'{atom.element}.{kind}.H{min(atom.hydrogens, 3)}',
        f'{atom.element}.{kind}',
        atom.element,
    )


def logp_proxy(graph):
    table = proxy_tables()['logp']
    contributions = table['contributions']
    values = []
    for atom in graph.atoms:
        for key in _logp_key_candidates(atom):
            if key in contributions:
                values.append(contributions[key])
                break
        else:
            values.append(0.0)
        if atom.charge:
            values.append(table['charge_penalty'] * abs(atom.charge))
    return math.fsum(values)


def _ring_sizes(graph):
    if graph.ring_count == 0:
        return []
    return [len(ring) for ring in nx.minimum_cycle_basis(graph.nx_graph)]


def sa_proxy(graph):
    """Synthetic-accessibility stand-in: higher means harder to make."""
    table = proxy_tables()['sa']
    heavy = graph.heavy_atom_count
    branch_points = 0
    quaternary = 0
    bridgeheads = 0
    for index in range(len(graph.atoms)):
        degree = graph.heavy_degree(index)
        if degree >= 3:
            branch_points += 1
        if degree >= 4:
            quaternary += 1
        ring_bonds = sum(1 for _, bond in graph.neighbors(index) if bond.key in graph.ring_bonds)
        if ring_bonds >= 3:
            bridgeheads += 1
    macrocycles = sum(1 for size in _ring_sizes(graph) if size > table['macrocycle_size'])
    stereo = sum(1 for atom in graph.atoms if atom.chirality)
    stereo += sum(1 for bond in graph.bonds if bond.stereo)

    score = math.fsum([
        table['base'],
        table['size'] * math.log1p(heavy),
        table['branch'] * branch_points,
        table['quaternary'] * quaternary,
        table['ring'] * graph.ring_count,
        table['bridgehead'] * bridgeheads,
        table['macrocycle'] * macrocycles,
        table['stereo'] * stereo,
    ])
    return min(max(score, table['minimum']), table['maximum'])


def molecular_weight(graph):
    hydrogen = proxy_tables()['qed']['hydrogen_mass']
    return math.fsum(ATOMIC_MASSES[atom.element] + hydrogen * atom.hydrogens for atom in graph.atoms)


def hetero_fraction(graph):
    heavy = [atom for atom in graph.atoms if atom.element != 'H']
    if not heavy:
        return 0.0
    return sum(1 for atom in heavy if atom.element != 'C') / len(heavy)


def _desirability(value, mean, sigma, floor):
    score = math.exp(-((value - mean) ** 2) / (2.0 * sigma ** 2))
    return min(max(score, floor), 1.0)


def qed_proxy(graph):
    """Drug-likeness stand-in in [0, 1]: product of Gaussian desirabilities."""
    table = proxy_tables()['qed']
    descriptors = {
        'weight': molecular_weight(graph),
        'logp': logp_proxy(graph),
        'rings': float(graph.ring_count),
        'hetero_fraction': hetero_fraction(graph),
    }
    score = 1.0
    for name, term in table['terms'].items():
        score *= _desirability(descriptors[name], term['mean'], term['sigma'], table['floor'])
    return score


def ringcount(graph):
    return float(graph.ring_count)


def heavyatoms(graph):
    return float(graph.heavy_atom_count)


BUILTIN_PROPERTIES = {
    'logp_proxy': logp_proxy,
    'sa_proxy': sa_proxy,
    'qed_proxy': qed_proxy,
    'ringcount': ringcount,
    'heavyatoms': heavyatoms,
}


def builtin_property(name, graph) -> float:
    try:
        function = BUILTIN_PROPERTIES[name]
    except KeyError:
        raise UnknownProperty(f'no built-in property named {name!r}')
    return float(function(graph))
