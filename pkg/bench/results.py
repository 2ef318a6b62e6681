"""
Per-lead optimization results and their line-delimited JSON files.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)


@dataclass
class OptimizationResult:
    lead: str
    # None when no pool member met the success criteria
    optimized: Optional[str] = None
    lead_scores: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)
    similarity: float = 1.0
    success: bool = False
    fitness: float = 0.0
    calls: int = 0
    cache_hits: int = 0
    first_success_call: Optional[int] = None
    directions: dict = field(default_factory=dict)
    index: int = 0
    method: str = 'pgpo'
    error: Optional[str] = None

    @property
    def reported_similarity(self):
        """Failures count as the lead itself."""
        return self.similarity if self.success else 1.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {item.name for item in fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})


def select_result(lead, lead_scores, entries, specs, stats, first_success_call=None, **extra):
    """
    Best pool member other than the lead that meets the success criteria,
    or a failure that reports the lead. ``entries`` must already be ordered
    best first.
    """
    chosen = next((entry for entry in entries if entry.success and entry.smiles != lead), None)
    base = {
        'lead': lead,
        'lead_scores': dict(lead_scores),
        'calls': stats.get('calls', 0),
        'cache_hits': stats.get('cache_hits', 0),
        'first_success_call': first_success_call,
        'directions': {spec.name: spec.direction for spec in specs},
        **extra,
    }
    if chosen is None:
        return OptimizationResult(scores=dict(lead_scores), **base)
    return OptimizationResult(
        optimized=chosen.smiles, scores=dict(chosen.scores), similarity=chosen.similarity,
        success=True, fitness=chosen.fitness, **base,
    )


def failed_result(lead, index, error, method='pgpo'):
    return OptimizationResult(lead=lead, index=index, method=method, error=error)


def write_results(results, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        for result in results:
            handle.write(json.dumps(result.to_dict(), sort_keys=True) + '\n')
    logger.info(f'Wrote {len(results)} results to {path}')


def read_results(path) -> list:
    with open(path, encoding='utf-8') as handle:
        return [OptimizationResult.from_dict(json.loads(line)) for line in handle if line.strip()]
