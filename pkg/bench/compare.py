"""
Method comparison: the same task run as PGPO, as PPO (no preference loss),
as the untrained policy and as the GA baseline, over several seeds.
"""
import logging
from pathlib import Path

import pandas as pd

from .config import build_config
from .runner import run_experiment, write_json

logger = logging.getLogger(__name__)

# arm -> config overrides on top of the base config
ARMS = {
    'pgpo': [('method', 'pgpo')],
    'ppo': [('method', 'pgpo'), ('training.pgpo.lambda_pref', 0.0)],
    'untrained': [('method', 'pgpo'), ('training.iterations', 0)],
    'ga': [('method', 'ga')],
}

DEFAULT_SEEDS = 5
DEFAULT_MARGIN = 5.0


def arm_config(config, arm, seed):
    overrides = ARMS[arm] + [('name', f'{config.name}-{arm}'), ('seed', seed)]
    return build_config(config.to_dict(), overrides)


def ordering_checks(medians, margin=DEFAULT_MARGIN):
    """Median success rates must rank PGPO >= PPO >= untrained, and PGPO must lead GA by ``margin`` points."""
    return {
        'pgpo_at_least_ppo': bool(medians['pgpo'] >= medians['ppo']),
        'ppo_at_least_untrained': bool(medians['ppo'] >= medians['untrained']),
        'pgpo_ahead_of_ga': bool(medians['pgpo'] - medians['ga'] >= margin),
    }


def run_comparison(config, output_dir, seeds=DEFAULT_SEEDS, margin=DEFAULT_MARGIN):
    """Run every arm for ``seeds`` consecutive seeds and report the median success rates."""
    output_dir = Path(output_dir)
    seed_values = [config.seed + offset for offset in range(seeds)]
    rows = []
    for seed in seed_values:
        for arm in ARMS:
            summary = run_experiment(arm_config(config, arm, seed), output_dir / arm / f'seed-{seed}')
            rows.append({'arm': arm, 'seed': seed, **summary})
            logger.info(f'{config.name} {arm} seed {seed}: SR {summary["success_rate"]:.2f}%')

    frame = pd.DataFrame(rows)
    frame.to_csv(output_dir / 'comparison.csv', index=False)
    medians = frame.groupby('arm')['success_rate'].median()
    median_rates = {arm: float(medians[arm]) for arm in ARMS}
    checks = ordering_checks(median_rates, margin)
    report = {
        'name': config.name,
        'seeds': seed_values,
        'margin': margin,
        'median_success_rate': median_rates,
        'checks': checks,
        'ordering_holds': all(checks.values()),
    }
    if not report['ordering_holds']:
        failed = sorted(name for name, passed in checks.items() if not passed)
        logger.warning(f'{config.name}: method ordering does not hold: {failed}')
    write_json(report, output_dir / 'comparison.json')
    return report
