"""
Fixed-length state features for the linear policy.
"""
import numpy as np

from oracle.proxies import logp_proxy, qed_proxy, sa_proxy

COUNTED_ELEMENTS = ('C', 'N', 'O', 'S', 'F', 'Cl', 'Br')
TURN_SLOTS = 8

FEATURE_NAMES = (
    ('bias', 'heavy_atoms')
    + tuple(f'count_{element}' for element in COUNTED_ELEMENTS)
    + ('count_other', 'rings', 'aromatic_fraction', 'logp_proxy', 'sa_proxy', 'qed_proxy',
       'last_reward', 'similarity_headroom')
    + tuple(f'turn_{slot}' for slot in range(TURN_SLOTS))
)
NUM_FEATURES = len(FEATURE_NAMES)


def molecule_features(graph):
    heavy = [atom for atom in graph.atoms if atom.element != 'H']
    counts = [sum(1 for atom in heavy if atom.element == element) / 10.0 for element in COUNTED_ELEMENTS]
    other = sum(1 for atom in heavy if atom.element not in COUNTED_ELEMENTS) / 10.0
    aromatic = sum(1 for atom in heavy if atom.aromatic) / max(len(heavy), 1)
    return [
        len(heavy) / 10.0,
        *counts,
        other,
        graph.ring_count / 3.0,
        aromatic,
        logp_proxy(graph) / 5.0,
        sa_proxy(graph) / 10.0,
        qed_proxy(graph),
    ]


def featurize(state) -> np.ndarray:
    turn = np.zeros(TURN_SLOTS)
    turn[min(state.t, TURN_SLOTS - 1)] = 1.0
    vector = np.concatenate([
        [1.0],
        molecule_features(state.current),
        [float(np.clip(state.last_reward, -5.0, 5.0)) / 5.0, state.current_similarity - state.gamma],
        turn,
    ])
    return vector.astype(np.float64)
