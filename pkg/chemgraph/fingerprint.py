"""
Morgan-style circular fingerprints folded into a fixed bit vector.

Atom identifiers are hashed with the splitmix64 finalizer seeded at 0, so
bit vectors are identical on every platform. Bits are not meant to match
other toolkits.
"""
from dataclasses import dataclass

import numpy as np

from .elements import ATOMIC_NUMBERS
from .exceptions import ChemGraphError, LengthMismatch

DEFAULT_RADIUS = 2
DEFAULT_NBITS = 2048

MASK64 = (1 << 64) - 1


def mix64(value):
    value = (value + 0x9E3779B97F4A7C15) & MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & MASK64
    return value ^ (value >> 31)


def hash_sequence(values, seed=0):
    state = mix64(seed)
    for value in values:
        state = mix64(state ^ (value & MASK64))
    return state


@dataclass(frozen=True, eq=False)
class Fingerprint:
    bits: np.ndarray
    radius: int = DEFAULT_RADIUS

    @classmethod
    def from_on_bits(cls, nbits, on_bits, radius=DEFAULT_RADIUS):
        bits = np.zeros(nbits, dtype=bool)
        bits[list(on_bits)] = True
        return cls(bits=bits, radius=radius)

    @property
    def nbits(self):
        return int(self.bits.shape[0])

    @property
    def popcount(self):
        return int(np.count_nonzero(self.bits))

    def on_bits(self):
        return [int(bit) for bit in np.flatnonzero(self.bits)]

    def __eq__(self, other):
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.nbits == other.nbits and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.nbits, tuple(self.on_bits())))


def _initial_identifier(graph, index):
    atom = graph.atoms[index]
    return hash_sequence([
        ATOMIC_NUMBERS[atom.element],
        atom.charge,
        int(atom.aromatic),
        int(graph.in_ring(index)),
    ])


def morgan_fingerprint(graph, radius=DEFAULT_RADIUS, nbits=DEFAULT_NBITS) -> Fingerprint:
    if radius < 0:
        raise ChemGraphError('radius must be non-negative')
    if nbits <= 0 or nbits & (nbits - 1):
        raise ChemGraphError('nbits must be a power of two')

    key = ('fingerprint', radius, nbits)
    cached = graph._cache.get(key)
    if cached is not None:
        return cached

    identifiers = [_initial_identifier(graph, index) for index in range(len(graph.atoms))]
    on_bits = {identifier % nbits for identifier in identifiers}
    for iteration in range(1, radius + 1):
        updated = []
        for index, identifier in enumerate(identifiers):
            environment = sorted(
                (int(bond.order), identifiers[other]) for other, bond in graph.neighbors(index)
            )
            if not environment:
                updated.append(identifier)
                continue
            flat = [value for pair in environment for value in pair]
            updated.append(hash_sequence([iteration, identifier, *flat]))
            on_bits.add(updated[-1] % nbits)
        identifiers = updated

    fingerprint = Fingerprint.from_on_bits(nbits, sorted(on_bits), radius=radius)
    graph._cache[key] = fingerprint
    return fingerprint


def tanimoto(first: Fingerprint, second: Fingerprint) -> float:
    if first.nbits != second.nbits:
        raise LengthMismatch(f'fingerprint lengths differ: {first.nbits} vs {second.nbits}')
    union = int(np.count_nonzero(first.bits | second.bits))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(first.bits & second.bits)) / union


def similarity(first, second, radius=DEFAULT_RADIUS, nbits=DEFAULT_NBITS) -> float:
    """Tanimoto similarity of two graphs' fingerprints."""
    return tanimoto(morgan_fingerprint(first, radius, nbits), morgan_fingerprint(second, radius, nbits))
