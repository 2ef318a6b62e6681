"""
Structural sanity guard run on every parsed proposal.
"""
from dataclasses import dataclass
from typing import Optional

import networkx as nx

DEFAULT_MAX_CHAIN = 10


@dataclass(frozen=True)
class GuardViolation:
    kind: str
    value: int
    limit: int

    @property
    def message(self):
        return f'Carbon chain too long: {self.value} atoms (limit ≤ {self.limit})'


def longest_carbon_chain(graph) -> int:
    """Atoms on the longest path through acyclic carbons."""
    carbons = [
        index for index, atom in enumerate(graph.atoms)
        if atom.element == 'C' and not graph.in_ring(index)
    ]
    if not carbons:
        return 0
    subgraph = graph.nx_graph.subgraph(carbons)
    longest = 0
    for component in nx.connected_components(subgraph):
        tree = subgraph.subgraph(component)
        # acyclic atoms form trees, so two sweeps find the diameter
        start = next(iter(component))
        far, _ = max(nx.single_source_shortest_path_length(tree, start).items(), key=lambda item: item[1])
        _, edges = max(nx.single_source_shortest_path_length(tree, far).items(), key=lambda item: item[1])
        longest = max(longest, edges + 1)
    return longest


def structural_guard(graph, max_chain=DEFAULT_MAX_CHAIN) -> Optional[GuardViolation]:
    """None when the graph passes; ``max_chain=None`` switches the guard off."""
    if max_chain is None:
        return None
    length = longest_carbon_chain(graph)
    if length > max_chain:
        return GuardViolation(kind='carbon_chain', value=length, limit=max_chain)
    return None
