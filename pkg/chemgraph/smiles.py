"""
SMILES reading and writing for the supported subset.

Organic-subset atoms, bracket atoms with isotope, charge, explicit hydrogens
and chirality, branches, ring closures (including ``%nn``) and the bond
symbols ``- = # : / \\``. Chirality and ``/``/``\\`` markers are kept as
opaque annotations. Dot-separated fragments are rejected.
"""
import re

from .aromaticity import perceive_aromaticity
from .elements import AROMATIC_SYMBOLS, ORGANIC_SUBSET, SUPPORTED_ELEMENTS, implicit_hydrogens
from .exceptions import (
    BadValence,
    MultiFragment,
    SmilesSyntaxError,
    UnbalancedBracket,
    UnclosedRing,
    UnsupportedElement,
)
from .graph import Atom, Bond, BondOrder, MolecularGraph

TOKEN_PATTERN = re.compile(
    r"""
    (?P<bracket>\[[^\[\]]*\])
  | (?P<organic>Br|Cl|B|C|N|O|P|S|F|I|b|c|n|o|p|s)
  | (?P<ring>%\d\d|\d)
  | (?P<bond>[-=\#:/\\$])
  | (?P<open>\()
  | (?P<close>\))
  | (?P<dot>\.)
  | (?P<other>.)
    """,
    re.VERBOSE | re.DOTALL,
)

BRACKET_PATTERN = re.compile(
    r'^(?P<isotope>\d+)?'
    r'(?P<symbol>[A-Z][a-z]?|[a-z][a-z]?)'
    r'(?P<chirality>@@?)?'
    r'(?P<hydrogens>H\d?)?'
    r'(?P<charge>[+-]+\d*)?'
    r'(?::\d+)?$'
)

BOND_ORDERS = {
    '-': BondOrder.SINGLE,
    '/': BondOrder.SINGLE,
    '\\': BondOrder.SINGLE,
    '=': BondOrder.DOUBLE,
    '#': BondOrder.TRIPLE,
    ':': BondOrder.AROMATIC,
}


def _resolve_symbol(symbol, position):
    if symbol in AROMATIC_SYMBOLS:
        return AROMATIC_SYMBOLS[symbol], True
    if symbol.islower() or symbol not in SUPPORTED_ELEMENTS:
        raise UnsupportedElement(f'unsupported element {symbol!r} at position {position}')
    return symbol, False


def _parse_charge(text, position):
    if not text:
        return 0
    signs = text.rstrip('0123456789')
    digits = text[len(signs):]
    if len(set(signs)) > 1 or (digits and len(signs) > 1):
        raise SmilesSyntaxError(f'malformed charge {text!r} at position {position}')
    magnitude = int(digits) if digits else len(signs)
    return magnitude if signs[0] == '+' else -magnitude


def _parse_bracket(token, position):
    match = BRACKET_PATTERN.match(token[1:-1])
    if match is None:
        raise SmilesSyntaxError(f'malformed bracket atom {token!r} at position {position}')
    element, aromatic = _resolve_symbol(match.group('symbol'), position)
    hydrogens = match.group('hydrogens')
    isotope = match.group('isotope')
    return {
        'element': element,
        'aromatic': aromatic,
        'charge': _parse_charge(match.group('charge'), position),
        'hydrogens': (int(hydrogens[1:]) if len(hydrogens) > 1 else 1) if hydrogens else 0,
        'chirality': match.group('chirality'),
        'isotope': int(isotope) if isotope else None,
        'bracket': True,
    }


def _reject(char, position):
    if char in '[]':
        raise UnbalancedBracket(f'unbalanced {char!r} at position {position}')
    if char.isalpha():
        raise UnsupportedElement(f'unsupported element {char!r} at position {position}')
    raise SmilesSyntaxError(f'unexpected character {char!r} at position {position}')


def parse_smiles(text) -> MolecularGraph:
    """
    Parse a SMILES string into a valence-checked MolecularGraph.

    Raises a ChemGraphError subclass for any syntactic or chemical problem.
    """
    if not isinstance(text, str):
        raise SmilesSyntaxError('SMILES must be a string')
    text = text.strip()
    if not text:
        raise SmilesSyntaxError('empty SMILES')

    atoms = []
    links = {}
    branches = []
    rings = {}
    previous = None
    pending = None

    def link(first, second, symbol, position):
        key = frozenset((first, second))
        if first == second:
            raise SmilesSyntaxError(f'ring closure onto the same atom at position {position}')
        if key in links:
            raise SmilesSyntaxError(f'duplicate bond between atoms {first} and {second}')
        links[key] = (first, second, symbol)

    for match in TOKEN_PATTERN.finditer(text):
        kind = match.lastgroup
        value = match.group()
        position = match.start()

        if kind in ('bracket', 'organic'):
            if kind == 'bracket':
                atom = _parse_bracket(value, position)
            else:
                element, aromatic = _resolve_symbol(value, position)
                atom = {'element': element, 'aromatic': aromatic, 'charge': 0,
                        'hydrogens': None, 'chirality': None, 'isotope': None, 'bracket': False}
            index = len(atoms)
            atoms.append(atom)
            if previous is not None:
                link(previous, index, pending, position)
            previous = index
            pending = None
        elif kind == 'bond':
            if previous is None or pending is not None:
                raise SmilesSyntaxError(f'unexpected bond {value!r} at position {position}')
            if value == '$':
                raise SmilesSyntaxError(f'quadruple bond at position {position} is not supported')
            pending = value
        elif kind == 'open':
            if previous is None or pending is not None:
                raise SmilesSyntaxError(f'unexpected branch at position {position}')
            branches.append(previous)
        elif kind == 'close':
            if not branches:
                raise UnbalancedBracket(f'unbalanced ")" at position {position}')
            if pending is not None or previous == branches[-1]:
                raise SmilesSyntaxError(f'empty branch closed at position {position}')
            previous = branches.pop()
        elif kind == 'ring':
            if previous is None:
                raise SmilesSyntaxError(f'ring label before any atom at position {position}')
            label = int(value.lstrip('%'))
            if label in rings:
                opener, symbol = rings.pop(label)
                if symbol and pending and BOND_ORDERS[symbol] != BOND_ORDERS[pending]:
                    raise SmilesSyntaxError(f'conflicting ring-closure bonds for label {label}')
                link(opener, previous, symbol or pending, position)
            else:
                rings[label] = (previous, pending)
            pending = None
        elif kind == 'dot':
            raise MultiFragment(f'multi-fragment SMILES is not supported (position {position})')
        else:
            _reject(value, position)

    if branches:
        raise UnbalancedBracket('unbalanced "(": branch never closed')
    if rings:
        labels = ', '.join(str(label) for label in sorted(rings))
        raise UnclosedRing(f'ring closure(s) never closed: {labels}')
    if pending is not None:
        raise SmilesSyntaxError('SMILES ends with a dangling bond')

    bonds = []
    for first, second, symbol in links.values():
        if symbol is None:
            both_aromatic = atoms[first]['aromatic'] and atoms[second]['aromatic']
            order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
        else:
            order = BOND_ORDERS[symbol]
        stereo = symbol if symbol in ('/', '\\') else None
        bonds.append(Bond(first, second, order, stereo))

    order_sum = [0] * len(atoms)
    double = [False] * len(atoms)
    for bond in bonds:
        for index in (bond.begin, bond.end):
            order_sum[index] += bond.order.valence
            double[index] = double[index] or bond.order == BondOrder.DOUBLE

    built = []
    for index, atom in enumerate(atoms):
        hydrogens = atom['hydrogens']
        if hydrogens is None:
            hydrogens = implicit_hydrogens(
                atom['element'], order_sum[index], aromatic=atom['aromatic'],
                exocyclic_double=double[index],
            )
            if hydrogens is None:
                raise BadValence(f'atom {index} ({atom["element"]}) exceeds its allowed valence')
        built.append(Atom(
            element=atom['element'],
            charge=atom['charge'],
            hydrogens=hydrogens,
            aromatic=atom['aromatic'],
            chirality=atom['chirality'],
            isotope=atom['isotope'],
        ))

    return perceive_aromaticity(MolecularGraph(built, bonds))


def _charge_text(charge):
    if charge == 0:
        return ''
    sign = '+' if charge > 0 else '-'
    return sign if abs(charge) == 1 else f'{sign}{abs(charge)}'


def atom_token(graph, index):
    atom = graph.atoms[index]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bare = (
        atom.element in ORGANIC_SUBSET
        and atom.charge == 0
        and atom.chirality is None
        and atom.isotope is None
        and atom.hydrogens == graph.implicit_hydrogens(index)
    )
    if bare:
        return symbol
    hydrogens = ''
    if atom.hydrogens == 1:
        hydrogens = 'H'
    elif atom.hydrogens > 1:
        hydrogens = f'H{atom.hydrogens}'
    isotope = str(atom.isotope) if atom.isotope is not None else ''
    return f'[{isotope}{symbol}{atom.chirality or ""}{hydrogens}{_charge_text(atom.charge)}]'


def bond_token(graph, bond):
    both_aromatic = graph.atoms[bond.begin].aromatic and graph.atoms[bond.end].aromatic
    if bond.order == BondOrder.AROMATIC:
        return '' if both_aromatic else ':'
    if bond.order == BondOrder.SINGLE:
        if bond.stereo:
            return bond.stereo
        return '-' if both_aromatic else ''
    return '=' if bond.order == BondOrder.DOUBLE else '#'


def _ring_label(number):
    return str(number) if number < 10 else f'%{number}'


def write_graph(graph, priority):
    """
    Depth-first SMILES writer.

    ``priority`` gives one sortable key per atom; the walk starts at the
    lowest key and visits neighbours in key order. Both passes use an
    explicit stack so long chains do not hit the recursion limit.
    """
    count = len(graph.atoms)
    start = min(range(count), key=lambda index: priority[index])
    position = [None] * count
    children = [[] for _ in range(count)]
    closures = [[] for _ in range(count)]

    def ordered_neighbors(index):
        return iter(sorted(graph.neighbors(index), key=lambda item: priority[item[0]]))

    visited = 0
    position[start] = visited
    stack = [(start, None, ordered_neighbors(start))]
    while stack:
        index, parent, pending = stack[-1]
        for other, bond in pending:
            if other == parent:
                continue
            if position[other] is None:
                children[index].append((other, bond))
                visited += 1
                position[other] = visited
                stack.append((other, index, ordered_neighbors(other)))
                break
            if position[other] < position[index]:
                closure = (other, index, bond)
                closures[other].append(closure)
                closures[index].append(closure)
        else:
            stack.pop()

    labels = {}
    in_use = set()

    def atom_text(index):
        parts = [atom_token(graph, index)]
        closing = []
        for closure in closures[index]:
            opener, closer, bond = closure
            if closer == index:
                parts.append(_ring_label(labels[closure]))
                closing.append(labels.pop(closure))
            else:
                number = 1
                while number in in_use:
                    number += 1
                in_use.add(number)
                labels[closure] = number
                parts.append(bond_token(graph, bond) + _ring_label(number))
        in_use.difference_update(closing)
        return ''.join(parts)

    output = []
    # items are literal parentheses or (atom, bond from its parent)
    stack = [(start, None)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            output.append(item)
            continue
        index, bond = item
        if bond is not None:
            output.append(bond_token(graph, bond))
        output.append(atom_text(index))
        branches = children[index]
        sequence = []
        for position_in_list, branch in enumerate(branches):
            if position_in_list < len(branches) - 1:
                sequence.extend(['(', branch, ')'])
            else:
                sequence.append(branch)
        stack.extend(reversed(sequence))
    return ''.join(output)


def write_smiles(graph: MolecularGraph) -> str:
    """Serialize in input atom order; the result parses back to an isomorphic graph."""
    return write_graph(graph, list(range(len(graph.atoms))))
