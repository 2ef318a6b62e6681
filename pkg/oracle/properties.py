"""
Property specifications: direction, reward weight and success thresholds per oracle.
"""
import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

from .exceptions import OracleError, UnknownProperty

REGISTRY_PATH = Path(__file__).resolve().parent / 'data' / 'properties.json'

MAXIMIZE = 'maximize'
MINIMIZE = 'minimize'
DIRECTIONS = (MAXIMIZE, MINIMIZE)


@dataclass(frozen=True)
class PropertySpec:
    name: str
    direction: str = MAXIMIZE
    weight: float = 1.0
    # absolute target for single-property tasks
    threshold: float = 0.0
    # required improvement magnitude for multi-property tasks
    delta: float = 0.0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise OracleError(f'{self.name}: direction must be one of {DIRECTIONS}')
        if not math.isfinite(self.weight) or self.weight < 0:
            raise OracleError(f'{self.name}: weight must be finite and non-negative')
        if not math.isfinite(self.threshold):
            raise OracleError(f'{self.name}: threshold must be finite')
        if not math.isfinite(self.delta) or self.delta < 0:
            raise OracleError(f'{self.name}: improvement threshold must be finite and non-negative')

    @property
    def sign(self):
        return 1.0 if self.direction == MAXIMIZE else -1.0

    def improvement(self, new, old):
        """Signed change, positive when the property moved the desired way."""
        return self.sign * (new - old)

    def meets_threshold(self, value):
        if self.direction == MAXIMIZE:
            return value >= self.threshold
        return value <= self.threshold

    def meets_improvement(self, new, old):
        return self.improvement(new, old) >= self.delta

    def with_overrides(self, **changes):
        return replace(self, **changes)


@lru_cache(maxsize=None)
def _registry():
    with open(REGISTRY_PATH, encoding='utf-8') as handle:
        raw = json.load(handle)
    return {name: PropertySpec(name=name, **fields) for name, fields in raw.items()}


def registered_names():
    return sorted(_registry())


def property_spec(name, **overrides) -> PropertySpec:
    """Registry entry for ``name`` with optional field overrides."""
    try:
        spec = _registry()[name]
    except KeyError:
        raise UnknownProperty(f'no registered property named {name!r}')
    return spec.with_overrides(**overrides) if overrides else spec


def resolve_specs(entries):
    """
    Build PropertySpecs from names, mappings or ready specs.

    A mapping needs a ``name`` and may override any registry field; names
    that are not registered must then give every field themselves.
    """
    specs = []
    for entry in entries:
        if isinstance(entry, PropertySpec):
            specs.append(entry)
        elif isinstance(entry, str):
            specs.append(property_spec(entry))
        else:
            fields = dict(entry)
            name = fields.pop('name')
            if name in _registry():
                specs.append(property_spec(name, **fields))
            else:
                specs.append(PropertySpec(name=name, **fields))
    return specs
