"""
Element tables for the supported organic subset and the valence rules built on them.
"""

ORGANIC_SUBSET = ('B', 'C', 'N', 'O', 'P', 'S', 'F', 'Cl', 'Br', 'I')
SUPPORTED_ELEMENTS = ORGANIC_SUBSET + ('H',)

# lowercase SMILES symbol -> element
AROMATIC_SYMBOLS = {'b': 'B', 'c': 'C', 'n': 'N', 'o': 'O', 'p': 'P', 's': 'S'}

ATOMIC_NUMBERS = {
    'H': 1, 'B': 5, 'C': 6, 'N': 7, 'O': 8, 'F': 9,
    'P': 15, 'S': 16, 'Cl': 17, 'Br': 35, 'I': 53,
}

ATOMIC_MASSES = {
    'H': 1.008, 'B': 10.81, 'C': 12.011, 'N': 14.007, 'O': 15.999, 'F': 18.998,
    'P': 30.974, 'S': 32.06, 'Cl': 35.45, 'Br': 79.904, 'I': 126.904,
}

VALENCE_ELECTRONS = {
    'H': 1, 'B': 3, 'C': 4, 'N': 5, 'O': 6, 'F': 7,
    'P': 5, 'S': 6, 'Cl': 7, 'Br': 7, 'I': 7,
}

HALOGENS = ('F', 'Cl', 'Br', 'I')

# Second-row elements never expand their octet.
_NO_EXPANSION = {'B', 'C', 'N', 'O', 'F'}

# Aromatic atoms that give one bond order to the ring system.
_PI_SHARING = {'B', 'C', 'N', 'P'}


def allowed_valences(element, charge=0):
    """
    Valences an element may take at the given formal charge, lowest first.

    Charge shifts the element to its isoelectronic neighbour, so N+ behaves
    like C and O- like F.
    """
    if element == 'H':
        return (1,) if charge == 0 else (0,)
    electrons = VALENCE_ELECTRONS[element] - charge
    if electrons <= 0 or electrons >= 8:
        return (0,)
    base = electrons if electrons <= 4 else 8 - electrons
    if element in _NO_EXPANSION:
        return (base,)
    valences = [base]
    while valences[-1] + 2 <= electrons:
        valences.append(valences[-1] + 2)
    return tuple(valences)


def max_valence(element, charge=0):
    return max(allowed_valences(element, charge))


def implicit_hydrogens(element, bond_order_sum, aromatic=False, exocyclic_double=False, charge=0):
    """
    Hydrogens implied for an unbracketed atom, or None if no valence fits.

    Aromatic bonds count as 1 in ``bond_order_sum``; aromatic B/C/N/P atoms
    without an exocyclic double bond take one more unit from the ring.
    """
    need = bond_order_sum
    if aromatic and element in _PI_SHARING and not exocyclic_double:
        need += 1
    for valence in allowed_valences(element, charge):
        if valence >= need:
            return valence - need
    return None
