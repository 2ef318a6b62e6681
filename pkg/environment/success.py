"""
Success criteria: absolute thresholds for single-property tasks, per-property
improvement over the lead for multi-property tasks, always gated on similarity.
"""
from dataclasses import dataclass, field

SINGLE = 'single'
MULTI = 'multi'
AUTO = 'auto'
TASK_MODES = (AUTO, SINGLE, MULTI)


@dataclass(frozen=True)
class SuccessReport:
    per_property: dict = field(default_factory=dict)
    similarity_ok: bool = False

    @property
    def success(self):
        return self.similarity_ok and bool(self.per_property) and all(self.per_property.values())

    def __bool__(self):
        return self.success


def resolve_mode(specs, mode=AUTO):
    if mode == AUTO:
        return SINGLE if len(specs) == 1 else MULTI
    return mode


def check_success(specs, scores, lead_scores, similarity, gamma, mode=AUTO) -> SuccessReport:
    mode = resolve_mode(specs, mode)
    per_property = {}
    for spec in specs:
        value = scores[spec.name]
        if mode == SINGLE:
            per_property[spec.name] = spec.meets_threshold(value)
        else:
            per_property[spec.name] = spec.meets_improvement(value, lead_scores[spec.name])
    return SuccessReport(per_property=per_property, similarity_ok=similarity >= gamma)
