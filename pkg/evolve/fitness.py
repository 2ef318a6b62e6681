"""
Difficulty-weighted fitness of a candidate relative to the original lead.
"""
import math

# harder objectives get larger weights
DIFFICULTY_WEIGHTS = {
    'jnk3': 12.0,
    'qed_proxy': 10.0,
    'drd2': 4.0,
    'sa_proxy': 2.0,
    'logp_proxy': 1.0,
}


def fitness(scores, lead_scores, specs, weights=None) -> float:
    """Σ wᵢ·sᵢ·(Fᵢ(m) − Fᵢ(lead)); properties without a weight count 1."""
    weights = DIFFICULTY_WEIGHTS if weights is None else weights
    return math.fsum(
        weights.get(spec.name, 1.0) * spec.improvement(scores[spec.name], lead_scores[spec.name])
        for spec in specs
    )
