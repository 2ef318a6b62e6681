"""
Training loop: sample rollouts per lead, filter them, then run dual-level
updates over mini-batches of the surviving trajectories.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from filtering.exceptions import EmptyAfterFilter
from filtering.filters import filter_batch, group_batch, retention_ratio
from policy.agents import LinearPolicyAgent
from policy.linear import snapshot_reference

from .exceptions import NonFiniteGradient
from .objective import prepare_batch
from .trajectory import TrajectoryBatch, collect_trajectory
from .update import Adam, apply_update

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingSettings:
    iterations: int = 100
    rollouts_per_lead: int = 16
    # None trains on every lead each iteration
    leads_per_iteration: int = None
    variance_keep_ratio: float = 0.5
    score_keep_ratio: float = 0.75
    filtering: bool = True
    workers: int = 1
    seed: int = 0


class PGPOTrainer:
    def __init__(self, env, params, config, settings=None, reference=None, library=None, cap=None,
                 diagnostics=None):
        self.env = env
        self.params = params
        self.config = config
        self.settings = settings or TrainingSettings()
        self.reference = reference or snapshot_reference(params)
        self.library = library
        self.cap = cap
        self.diagnostics = diagnostics
        self.optimizer = Adam(config.learning_rate)
        self.history = []

    def _iteration_leads(self, leads, iteration):
        count = self.settings.leads_per_iteration
        indexed = list(enumerate(leads))
        if count is None or count >= len(indexed):
            return indexed
        rng = np.random.default_rng([self.settings.seed, iteration])
        chosen = sorted(rng.choice(len(indexed), size=count, replace=False))
        return [indexed[index] for index in chosen]

    def collect(self, leads, iteration) -> TrajectoryBatch:
        """Rollouts for each lead; every rollout has its own seed so worker count does not matter."""
        agent = LinearPolicyAgent(self.params, self.library, self.cap)
        rollouts = self.settings.rollouts_per_lead
        jobs = [
            (lead_id, lead, rollout)
            for lead_id, lead in self._iteration_leads(leads, iteration)
            for rollout in range(rollouts)
        ]

        def run(job):
            lead_id, lead, rollout = job
            rng = np.random.default_rng([self.settings.seed, iteration, lead_id, rollout])
            return collect_trajectory(self.env, agent, lead, rng, lead_id * rollouts + rollout, lead_id)

        if self.settings.workers > 1:
            with ThreadPoolExecutor(max_workers=self.settings.workers) as executor:
                trajectories = list(executor.map(run, jobs))
        else:
            trajectories = [run(job) for job in jobs]
        return TrajectoryBatch(trajectories)

    def _write(self, record):
        self.history.append(record)
        if self.diagnostics is not None:
            self.diagnostics.write(json.dumps(record, sort_keys=True) + '\n')

    def train_iteration(self, leads, iteration):
        batch = self.collect(leads, iteration)
        mean_return = float(np.mean([trajectory.total_reward for trajectory in batch])) if len(batch) else 0.0
        if self.settings.filtering:
            try:
                filtered = filter_batch(
                    group_batch(batch), self.settings.variance_keep_ratio, self.settings.score_keep_ratio,
                )
            except EmptyAfterFilter as exc:
                logger.warning(f'iteration {iteration}: {exc}; skipping update')
                return
        else:
            filtered = batch
        retention = retention_ratio(batch, filtered)

        prepared = prepare_batch(filtered, self.reference, self.config)
        size = self.config.minibatch_size
        for epoch in range(self.config.epochs):
            for minibatch, start in enumerate(range(0, len(prepared), size)):
                try:
                    self.params, diagnostics = apply_update(
                        prepared[start:start + size], self.params, self.config, self.optimizer,
                    )
                except NonFiniteGradient as exc:
                    logger.error(f'iteration {iteration} minibatch {minibatch}: {exc}')
                    continue
                self._write({
                    'iteration': iteration,
                    'epoch': epoch,
                    'minibatch': minibatch,
                    'retention': retention,
                    'mean_return': mean_return,
                    **diagnostics.to_dict(),
                })
        logger.info(
            f'iteration {iteration}: {len(batch)} rollouts, kept {len(filtered)} ({retention:.1%}), '
            f'mean return {mean_return:.3f}'
        )

    def train(self, leads):
        leads = list(leads)
        for iteration in range(self.settings.iterations):
            self.train_iteration(leads, iteration)
        return self.params
