"""
Inference-time evolution around a trained policy.

Each generation picks a parent from the elite pool, runs policy rollouts
that start from the parent and collects every scored proposal that stays
similar enough to the original lead. Candidates are folded into the pool at
the end of the generation. The run stops after the last generation or as
soon as the oracle budget is spent.
"""
import json
import logging
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from chemgraph.canonical import canonicalize
from chemgraph.graph import MolecularGraph
from chemgraph.smiles import parse_smiles
from environment.env import MoleculeEnvironment

from .config import INDEPENDENT, temperature_at
from .fitness import fitness
from .pool import ElitePool, PoolEntry

logger = logging.getLogger(__name__)


@dataclass
class EvolutionRun:
    lead: str
    lead_scores: dict
    pool: ElitePool
    log: list = field(default_factory=list)
    first_success_call: Optional[int] = None
    stats: dict = field(default_factory=dict)

    @property
    def best(self):
        return self.pool.best

    @property
    def best_success(self):
        """Highest-fitness pool member that meets the success criteria."""
        return next((entry for entry in self.pool if entry.success), None)

    @property
    def generations(self):
        return len(self.log)


def inference_env(env, config):
    """``env`` with its horizon set to the inference horizon."""
    if env.settings.horizon == config.horizon:
        return env
    return MoleculeEnvironment(env.ledger, env.specs, replace(env.settings, horizon=config.horizon))


def rollout(env, agent, lead, parent, rng):
    state = env.reset(lead, start=parent)
    while not state.done:
        step = agent.act(env, state, rng)
        env.step(state, step.text)
    return state


def _earliest(current, candidate):
    if candidate is None:
        return current
    return candidate if current is None else min(current, candidate)


def run_evolution(agent, lead, config, env, seed=0, log=None) -> EvolutionRun:
    """
    Evolve ``lead`` under the budget of ``env.ledger``.

    ``agent`` needs ``act(env, state, rng)`` and ``with_temperature(tau)``.
    Rollouts run one after another so the point where the budget runs out
    is the same on every rerun. ``log`` receives one JSON line per
    generation.
    """
    env = inference_env(env, config)
    ledger = env.ledger
    lead_graph = lead if isinstance(lead, MolecularGraph) else parse_smiles(lead)
    start = env.reset(lead_graph)
    lead_smiles = canonicalize(lead_graph)

    # an unchanged lead never counts as optimized
    lead_entry = PoolEntry(lead_smiles, 0.0, 1.0, dict(start.lead_scores))
    pool = ElitePool(config.pool_capacity, config.elite_gamma)
    pool.insert(lead_entry)
    run = EvolutionRun(lead_smiles, dict(start.lead_scores), pool)

    root = np.random.default_rng([seed])
    for generation in range(1, config.generations + 1):
        if ledger.exhausted:
            logger.info(f'{lead_smiles}: budget spent after {generation - 1} generations')
            break
        if config.strategy == INDEPENDENT:
            parent, tau = lead_entry, config.tau_base
        else:
            parent = pool.entries[int(root.integers(len(pool)))]
            tau = temperature_at(generation, config)
        sampler = agent.with_temperature(tau)

        candidates = OrderedDict()
        rollouts = 0
        for index in range(config.rollouts_per_parent):
            if ledger.exhausted:
                break
            state = rollout(env, sampler, lead_graph, parent.smiles, np.random.default_rng([seed, generation, index]))
            rollouts += 1
            for turn in state.transcript:
                if turn.scores is None or turn.smiles in candidates or turn.smiles == lead_smiles:
                    continue
                if turn.success:
                    run.first_success_call = _earliest(run.first_success_call, ledger.call_index(turn.smiles))
                if turn.similarity < config.elite_gamma:
                    continue
                candidates[turn.smiles] = PoolEntry(
                    turn.smiles,
                    fitness(turn.scores, run.lead_scores, env.specs, config.weights),
                    turn.similarity,
                    dict(turn.scores),
                    success=turn.success,
                    generation=generation,
                )

        inserted = sum(pool.insert(entry) for entry in candidates.values())
        record = {
            'generation': generation,
            'temperature': tau,
            'parent': parent.smiles,
            'rollouts': rollouts,
            'candidates': len(candidates),
            'inserted': inserted,
            'calls': ledger.calls,
            'budget': ledger.budget,
            'best_fitness': pool.best.fitness,
            'pool': pool.snapshot(),
        }
        run.log.append(record)
        if log is not None:
            log.write(json.dumps(record, sort_keys=True) + '\n')
        logger.debug(
            f'{lead_smiles} generation {generation} τ={tau:g}: {len(candidates)} candidates, '
            f'{inserted} inserted, best {pool.best.fitness:.3f}, {ledger.calls} calls'
        )

    run.stats = ledger.stats()
    return run
