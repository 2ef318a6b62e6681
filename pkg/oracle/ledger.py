"""
Budgeted, cached access to property oracles.

Each distinct canonical SMILES costs one call no matter how many properties
are scored for it; repeated molecules are served from the cache for free.
"""
import logging
import math
import threading

from chemgraph.canonical import canonicalize

from .exceptions import BudgetExhausted, NonFiniteScore
from .proxies import builtin_property

logger = logging.getLogger(__name__)


def _property_name(spec):
    return getattr(spec, 'name', spec)


class OracleLedger:
    """
    Oracle call counter plus canonical-SMILES score cache.

    ``budget=None`` leaves the ledger unmetered (training rollouts). Budget
    check, evaluation and cache insert run under one lock, so ledgers can be
    shared between threads.
    """

    def __init__(self, budget=None, oracles=None):
        if budget is not None and budget < 0:
            raise ValueError('budget must be non-negative')
        self.budget = budget
        self.calls = 0
        self.cache_hits = 0
        self._oracles = dict(oracles or {})
        self._cache = {}
        self._call_index = {}
        self._lock = threading.Lock()

    def register(self, name, oracle):
        """Route property ``name`` to a callable taking a MolecularGraph."""
        self._oracles[name] = oracle

    @property
    def remaining(self):
        if self.budget is None:
            return None
        return self.budget - self.calls

    @property
    def exhausted(self):
        return self.budget is not None and self.calls >= self.budget

    def is_cached(self, graph):
        return canonicalize(graph) in self._cache

    def call_index(self, key):
        """1-based call at which a canonical SMILES was first evaluated."""
        return self._call_index.get(key)

    def _evaluate(self, name, graph):
        oracle = self._oracles.get(name)
        score = float(oracle(graph)) if oracle is not None else builtin_property(name, graph)
        if not math.isfinite(score):
            raise NonFiniteScore(f'{name} returned {score} for {canonicalize(graph)}')
        return score

    def query(self, graph, specs) -> dict:
        """Scores for ``graph`` keyed by property name, in ``specs`` order."""
        names = [_property_name(spec) for spec in specs]
        key = canonicalize(graph)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                missing = [name for name in names if name not in cached]
                if not missing:
                    self.cache_hits += 1
                    return {name: cached[name] for name in names}
                # molecule already paid for; top up the extra properties
                for name in missing:
                    cached[name] = self._evaluate(name, graph)
                return {name: cached[name] for name in names}

            if self.exhausted:
                raise BudgetExhausted(self.budget)
            scores = {name: self._evaluate(name, graph) for name in names}
            self.calls += 1
            self._cache[key] = scores
            self._call_index[key] = self.calls
            logger.debug(f'oracle call {self.calls}/{self.budget or "-"}: {key}')
            return dict(scores)

    def stats(self):
        lookups = self.calls + self.cache_hits
        return {
            'calls': self.calls,
            'budget': self.budget,
            'cache_hits': self.cache_hits,
            'hit_rate': self.cache_hits / lookups if lookups else 0.0,
        }
