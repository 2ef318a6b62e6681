"""
Success rate, mean similarity and relative improvement over a result list.

Failures report the lead itself: similarity 1.0 and no improvement.
"""
import logging
import math

import numpy as np
import pandas as pd

from oracle.properties import MINIMIZE, PropertySpec

from .exceptions import EmptyResults

logger = logging.getLogger(__name__)


def _require(results):
    results = list(results)
    if not results:
        raise EmptyResults('no results to score')
    return results


def success_rate(results) -> float:
    results = _require(results)
    return 100.0 * sum(1 for result in results if result.success) / len(results)


def avg_similarity(results) -> float:
    results = _require(results)
    return math.fsum(result.reported_similarity for result in results) / len(results)


def _signs(result, properties):
    if properties is None:
        return {name: -1.0 if direction == MINIMIZE else 1.0 for name, direction in sorted(result.directions.items())}
    signs = {}
    for entry in properties:
        if isinstance(entry, PropertySpec):
            signs[entry.name] = entry.sign
        else:
            signs[entry] = -1.0 if result.directions.get(entry) == MINIMIZE else 1.0
    return signs


def result_improvement(result, properties=None):
    """
    Mean signed relative change over properties for one result, and how many
    terms were skipped because the lead scored exactly zero.
    """
    if not result.success:
        return 0.0, 0
    terms, skipped = [], 0
    for name, sign in _signs(result, properties).items():
        baseline = result.lead_scores[name]
        if baseline == 0:
            skipped += 1
            logger.warning(f'{result.lead}: {name} is 0 for the lead, leaving it out of the relative improvement')
            continue
        terms.append(sign * (result.scores[name] - baseline) / abs(baseline))
    return (math.fsum(terms) / len(terms) if terms else 0.0), skipped


def relative_improvement(results, properties=None) -> float:
    results = _require(results)
    return math.fsum(result_improvement(result, properties)[0] for result in results) / len(results)


def summarize(results, properties=None) -> dict:
    results = _require(results)
    improvements = [result_improvement(result, properties) for result in results]
    calls = sum(result.calls for result in results)
    hits = sum(result.cache_hits for result in results)
    return {
        'count': len(results),
        'successes': sum(1 for result in results if result.success),
        'success_rate': success_rate(results),
        'avg_similarity': avg_similarity(results),
        'relative_improvement': math.fsum(value for value, _ in improvements) / len(results),
        'zero_baseline_terms': sum(skipped for _, skipped in improvements),
        'zero_baseline_policy': 'skip',
        'mean_calls': calls / len(results),
        'max_calls': max(result.calls for result in results),
        'cache_hit_rate': hits / (calls + hits) if calls + hits else 0.0,
        'errors': sum(1 for result in results if result.error),
    }


def success_curve(results, budget, points=50) -> pd.DataFrame:
    """Success rate against the number of oracle calls spent per lead."""
    results = _require(results)
    grid = np.unique(np.linspace(1, budget, num=min(points, budget)).round().astype(int))
    reached = np.array([result.first_success_call or 0 for result in results])
    found = reached > 0
    rates = [100.0 * np.count_nonzero(found & (reached <= calls)) / len(results) for calls in grid]
    return pd.DataFrame({'calls': grid, 'success_rate': rates})


def summary_frame(summaries) -> pd.DataFrame:
    """One row per labelled summary, e.g. ``{'task': ..., **summarize(...)}``."""
    return pd.DataFrame(list(summaries))
