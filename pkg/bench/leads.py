"""
Lead files (one SMILES per line) and the seeded train / held-out split.
"""
import logging

import numpy as np

from chemgraph.canonical import canonicalize
from chemgraph.exceptions import ChemGraphError
from chemgraph.smiles import parse_smiles

from .exceptions import BenchError

logger = logging.getLogger(__name__)


def load_leads(path) -> list:
    """Canonical SMILES in file order; blank lines and ``#`` comments are skipped, repeats dropped."""
    leads, seen = [], set()
    try:
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise BenchError(f'cannot read leads file {path}: {exc}')
    for line_number, line in enumerate(lines, start=1):
        text = line.split('#', 1)[0].strip()
        if not text:
            continue
        try:
            smiles = canonicalize(parse_smiles(text.split()[0]))
        except ChemGraphError as exc:
            raise BenchError(f'{path}:{line_number}: invalid lead {text!r}: {exc}')
        if smiles in seen:
            logger.warning(f'{path}:{line_number}: duplicate lead {smiles} skipped')
            continue
        seen.add(smiles)
        leads.append(smiles)
    if not leads:
        raise BenchError(f'{path} holds no leads')
    return leads


def split_leads(leads, seed, train=128, test=64):
    """
    Disjoint (train, held-out) lists drawn by a seeded permutation.

    Held-out leads are drawn first so they stay the same when the training
    count changes. Each list keeps file order.
    """
    leads = list(leads)
    order = np.random.default_rng([seed, 1]).permutation(len(leads))
    test_count = min(test, len(leads))
    held_out = sorted(int(index) for index in order[:test_count])
    training = sorted(int(index) for index in order[test_count:test_count + train])
    if len(training) < train or len(held_out) < test:
        logger.warning(
            f'{len(leads)} leads cannot fill {train} training and {test} held-out slots; '
            f'using {len(training)} and {len(held_out)}'
        )
    return [leads[index] for index in training], [leads[index] for index in held_out]
