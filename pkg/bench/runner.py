"""
Experiment orchestration: train on the training split, optimize every
held-out lead under a fresh budgeted ledger, then write results and metrics.

Output directory layout::

    config.json         validated configuration
    policy.json         trained policy checkpoint
    diagnostics.jsonl   one record per PGPO update
    results.jsonl       one OptimizationResult per held-out lead
    evolution.jsonl     per-generation evolution log, tagged with the lead index
    metrics.json        summary metrics
    summary.csv         the same summary as one CSV row
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from celery import group
from django.conf import settings

from evolve.engine import run_evolution
from pgpo.trainer import PGPOTrainer
from policy.agents import LinearPolicyAgent
from policy.linear import checkpoint_payload, save_checkpoint

from .baseline import ga_baseline
from .exceptions import BenchError
from .leads import load_leads, split_leads
from .metrics import summarize, summary_frame
from .results import OptimizationResult, select_result, write_results

logger = logging.getLogger(__name__)


def lead_seed(seed, index) -> int:
    """Per-lead seed that depends only on the run seed and the lead's position."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + '\n', encoding='utf-8')


def optimize_one(config, params, lead, index):
    """(OptimizationResult, evolution log) for one lead with its own ledger."""
    env = config.environment(budget=config.inference.budget)
    seed = lead_seed(config.seed, index)
    if config.method == 'ga':
        result = ga_baseline(lead, env, config.inference, seed=seed)
        result.index = index
        return result, []
    agent = LinearPolicyAgent(params)
    run = run_evolution(agent, lead, config.inference, env, seed=seed)
    result = select_result(
        run.lead, run.lead_scores, run.pool.entries, env.specs, run.stats, run.first_success_call,
        index=index, method=config.method,
    )
    return result, run.log


def lead_payloads(config, params, leads):
    checkpoint = None if params is None else checkpoint_payload(params)
    return [
        {'config': config.to_dict(), 'checkpoint': checkpoint, 'lead': lead, 'index': index}
        for index, lead in enumerate(leads)
    ]


def dispatch(payloads, workers=1):
    """Run ``optimize_lead`` per payload; replies come back in payload order."""
    from .tasks import optimize_lead

    if not settings.CELERY_TASK_ALWAYS_EAGER:
        return group(optimize_lead.s(payload) for payload in payloads).apply_async().get()

    def run(payload):
        return optimize_lead.apply(args=(payload,)).get()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run, payloads))
    return [run(payload) for payload in payloads]


def train_policy(config, leads, output_dir=None):
    params = config.initial_params()
    if config.training.iterations == 0:
        logger.info('0 training iterations: using the initial policy')
    elif not leads:
        logger.warning('no training leads: using the initial policy')
    else:
        env = config.environment()
        diagnostics = None
        if output_dir is not None:
            Path(output_dir).mkdir(parents=True, exist_ok=True)
            diagnostics = open(Path(output_dir) / 'diagnostics.jsonl', 'w', encoding='utf-8')
        try:
            trainer = PGPOTrainer(env, params, config.pgpo, config.training, diagnostics=diagnostics)
            params = trainer.train(leads)
        finally:
            if diagnostics is not None:
                diagnostics.close()
        logger.info(f'Trained {config.training.iterations} iterations on {len(leads)} leads')
    if output_dir is not None:
        save_checkpoint(params, Path(output_dir) / 'policy.json')
    return params


def optimize_leads(config, params, leads, output_dir=None):
    """Results in lead order plus their summary; writes files when ``output_dir`` is set."""
    replies = dispatch(lead_payloads(config, params, leads), config.workers)
    results = [OptimizationResult.from_dict(reply['result']) for reply in replies]
    summary = summarize(results, config.specs)
    logger.info(
        f'{config.name}: SR {summary["success_rate"]:.2f}% Sim {summary["avg_similarity"]:.3f} '
        f'RI {summary["relative_improvement"]:.3f} over {len(results)} leads'
    )
    if output_dir is not None:
        output_dir = Path(output_dir)
        write_results(results, output_dir / 'results.jsonl')
        with open(output_dir / 'evolution.jsonl', 'w', encoding='utf-8') as handle:
            for index, reply in enumerate(replies):
                for record in reply['log']:
                    handle.write(json.dumps({'lead_index': index, **record}, sort_keys=True) + '\n')
        write_summary(config, summary, output_dir)
    if results and all(result.error for result in results):
        raise BenchError(f'{config.name}: every lead failed, first error: {results[0].error}')
    return results, summary


def write_summary(config, summary, output_dir):
    output_dir = Path(output_dir)
    write_json(summary, output_dir / 'metrics.json')
    row = {'task': config.name, 'method': config.method, 'strategy': config.inference.strategy, **summary}
    summary_frame([row]).to_csv(output_dir / 'summary.csv', index=False)


def experiment_leads(config):
    leads = load_leads(config.leads_file())
    return split_leads(leads, config.seed, config.leads['train'], config.leads['test'])


def run_experiment(config, output_dir):
    """Train, then optimize the held-out leads. Returns the metrics summary."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_json(config.to_dict(), output_dir / 'config.json')
    training, held_out = experiment_leads(config)
    params = None if config.method == 'ga' else train_policy(config, training, output_dir)
    _, summary = optimize_leads(config, params, held_out, output_dir)
    return summary
