"""
Random-mutation genetic baseline: no learning, same budget and similarity
constraint as the policy runs.

Each step picks a parent uniformly from the elite pool, applies one legal
edit chosen uniformly at random and scores the child if it is new and
similar enough to the lead.
"""
import logging

import numpy as np

from chemgraph.canonical import canonicalize
from chemgraph.graph import MolecularGraph
from chemgraph.smiles import parse_smiles
from environment.guard import structural_guard
from environment.success import check_success
from evolve.fitness import fitness
from evolve.pool import ElitePool, PoolEntry
from policy.edits import apply_edit, enumerate_edits, load_fragment_library

from .results import select_result

logger = logging.getLogger(__name__)

# children that cost nothing (cached, rejected) still count against this
MAX_ATTEMPTS_PER_CALL = 20


def ga_baseline(lead, env, config, seed=0, library=None, cap=None):
    """OptimizationResult for ``lead`` under ``env.ledger``'s budget."""
    ledger = env.ledger
    library = load_fragment_library() if library is None else library
    lead_graph = lead if isinstance(lead, MolecularGraph) else parse_smiles(lead)
    lead_smiles = canonicalize(lead_graph)
    lead_scores = ledger.query(lead_graph, env.specs)
    gamma = env.settings.gamma

    def succeeded(scores, sim):
        return check_success(env.specs, scores, lead_scores, sim, gamma, env.mode).success

    pool = ElitePool(config.pool_capacity, config.elite_gamma)
    pool.insert(PoolEntry(lead_smiles, 0.0, 1.0, dict(lead_scores)))
    first_success = None

    rng = np.random.default_rng([seed])
    limit = config.budget * MAX_ATTEMPTS_PER_CALL
    attempts = 0
    while not ledger.exhausted and attempts < limit:
        attempts += 1
        parent = pool.entries[int(rng.integers(len(pool)))]
        graph = parse_smiles(parent.smiles)
        edits = enumerate_edits(graph, library, cap)
        if not edits:
            continue
        child = apply_edit(graph, edits[int(rng.integers(len(edits)))], library)
        smiles = canonicalize(child)
        if smiles == lead_smiles or smiles in pool or structural_guard(child, env.settings.max_chain) is not None:
            continue
        sim = env.similarity(lead_graph, child)
        if sim < config.elite_gamma:
            continue
        scores = ledger.query(child, env.specs)
        success = succeeded(scores, sim)
        if success and first_success is None:
            first_success = ledger.call_index(smiles)
        pool.insert(PoolEntry(
            smiles, fitness(scores, lead_scores, env.specs, config.weights), sim, dict(scores), success=success,
        ))

    logger.debug(f'GA on {lead_smiles}: {attempts} attempts, {ledger.calls} calls, best {pool.best.fitness:.3f}')
    return select_result(lead_smiles, lead_scores, pool.entries, env.specs, ledger.stats(), first_success, method='ga')
