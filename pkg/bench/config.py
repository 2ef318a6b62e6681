"""
Experiment configuration: a JSON document validated by ``ExperimentSerializer``
and turned into the typed settings objects each app consumes.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from django.conf import settings

from environment.env import EnvironmentSettings, MoleculeEnvironment
from environment.rewards import RewardTable
from evolve.config import EvolveConfig
from evolve.exceptions import EvolutionError
from oracle.exceptions import OracleError
from oracle.ledger import OracleLedger
from oracle.properties import resolve_specs
from oracle.proxies import BUILTIN_PROPERTIES
from oracle.table import load_table_oracle
from pgpo.config import PGPOConfig
from pgpo.exceptions import PGPOError
from pgpo.trainer import TrainingSettings
from policy.linear import PolicyParams

from .exceptions import ConfigError
from .serializers import ExperimentSerializer

logger = logging.getLogger(__name__)

# command-line flag -> dotted config key
FLAG_KEYS = {
    'seed': 'seed',
    'iterations': 'training.iterations',
    'lambda_pref': 'training.pgpo.lambda_pref',
    'horizon': 'task.horizon',
    'budget': 'task.budget',
    'workers': 'workers',
}


def parse_assignment(text):
    """``dotted.key=value``; the value is read as JSON when it parses, else kept as text."""
    key, separator, raw = text.partition('=')
    if not separator or not key:
        raise ConfigError(f'override {text!r} is not of the form key=value')
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    return key.strip(), value


def apply_overrides(data, overrides):
    """Set dotted keys on a nested dict, creating sections as needed."""
    data = json.loads(json.dumps(data))
    for key, value in overrides:
        target = data
        *sections, leaf = key.split('.')
        for section in sections:
            node = target.setdefault(section, {})
            if not isinstance(node, dict):
                raise ConfigError(f'cannot set {key}: {section} is not a section')
            target = node
        target[leaf] = value
    return data


def flag_overrides(options):
    return [(FLAG_KEYS[name], options[name]) for name in FLAG_KEYS if options.get(name) is not None]


@dataclass
class ExperimentConfig:
    raw: dict
    specs: list
    rewards: RewardTable
    pgpo: PGPOConfig
    inference: EvolveConfig
    training: TrainingSettings
    tables: dict = field(default_factory=dict)

    @property
    def name(self):
        return self.raw['name']

    @property
    def seed(self):
        return self.raw['seed']

    @property
    def method(self):
        return self.raw['method']

    @property
    def workers(self):
        return self.raw['workers']

    @property
    def task(self):
        return self.raw['task']

    @property
    def leads(self):
        return self.raw['leads']

    def to_dict(self):
        return json.loads(json.dumps(self.raw))

    def environment_settings(self) -> EnvironmentSettings:
        task = self.task
        return EnvironmentSettings(
            gamma=task['gamma'], horizon=task['horizon'], rewards=self.rewards,
            max_chain=task['max_chain'], task_mode=task['mode'],
        )

    def make_ledger(self, budget=None) -> OracleLedger:
        ledger = OracleLedger(budget=budget)
        for name, path in sorted(self.tables.items()):
            ledger.register(name, load_table_oracle(path, name))
        return ledger

    def environment(self, budget=None) -> MoleculeEnvironment:
        """Fresh ledger and environment; ``budget=None`` is unmetered."""
        return MoleculeEnvironment(self.make_ledger(budget), self.specs, self.environment_settings())

    def initial_params(self) -> PolicyParams:
        training = self.raw['training']
        if training['init_scale'] > 0:
            rng = np.random.default_rng([self.seed, 0])
            return PolicyParams.random(rng, scale=training['init_scale'], beta=training['beta'], tau=training['tau'])
        return PolicyParams.zeros(beta=training['beta'], tau=training['tau'])

    def leads_file(self) -> Path:
        return Path(self.leads['file'] or settings.POLO_LEADS_FILE)


def _flatten_errors(errors, prefix=''):
    lines = []
    for key, value in errors.items():
        path = f'{prefix}.{key}' if prefix else str(key)
        if isinstance(value, dict):
            lines.extend(_flatten_errors(value, path))
        else:
            messages = value if isinstance(value, list) else [value]
            lines.extend(f'{path}: {message}' for message in messages)
    return lines


def build_config(data, overrides=()) -> ExperimentConfig:
    data = apply_overrides(data or {}, overrides)
    serializer = ExperimentSerializer(data=data)
    if not serializer.is_valid():
        errors = json.loads(json.dumps(serializer.errors))
        raise ConfigError('invalid experiment config: ' + '; '.join(_flatten_errors(errors)), errors)
    raw = json.loads(json.dumps(serializer.validated_data))
    training, task = raw['training'], raw['task']
    try:
        specs = resolve_specs(task['properties'])
        pgpo = PGPOConfig.from_dict(training['pgpo'])
        inference = EvolveConfig.from_dict({**raw['inference'], 'budget': task['budget'], 'horizon': task['horizon']})
        schedule = TrainingSettings(
            iterations=training['iterations'],
            rollouts_per_lead=training['rollouts_per_lead'],
            leads_per_iteration=training['leads_per_iteration'],
            variance_keep_ratio=training['variance_keep_ratio'],
            score_keep_ratio=training['score_keep_ratio'],
            filtering=training['filtering'],
            workers=raw['workers'],
            seed=raw['seed'],
        )
    except (OracleError, PGPOError, EvolutionError, TypeError) as exc:
        raise ConfigError(f'invalid experiment config: {exc}')
    missing = [spec.name for spec in specs if spec.name not in BUILTIN_PROPERTIES and spec.name not in task['tables']]
    if missing:
        raise ConfigError(f'no oracle for {missing}: add a table under task.tables')
    return ExperimentConfig(
        raw=raw, specs=specs, rewards=RewardTable.from_dict(task['rewards']), pgpo=pgpo,
        inference=inference, training=schedule, tables=dict(task['tables']),
    )


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Config from a JSON file, or defaults only when ``path`` is None."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
        except OSError as exc:
            raise ConfigError(f'cannot read config {path}: {exc}')
        except ValueError as exc:
            raise ConfigError(f'{path} is not valid JSON: {exc}')
    config = build_config(data, overrides)
    logger.info(f'Loaded experiment config {config.name!r} (seed {config.seed})')
    return config
