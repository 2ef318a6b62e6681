"""
Shared plumbing for the bench management commands: config flags, exit codes
and ExperimentRun bookkeeping.
"""
import logging
from contextlib import contextmanager
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from .config import flag_overrides, load_config, parse_assignment
from .exceptions import ConfigError
from .models import ExperimentRun

logger = logging.getLogger(__name__)

CONFIG_ERROR = 1
RUNTIME_ERROR = 2


class ExperimentCommand(BaseCommand):
    def add_config_arguments(self, parser):
        parser.add_argument('--config', help='Experiment config JSON file (defaults apply when omitted)')
        parser.add_argument('--output', help='Output directory (default: POLO_OUTPUT_DIR/<config name>)')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--iterations', type=int, help='PGPO training iterations')
        parser.add_argument('--lambda-pref', type=float, dest='lambda_pref', help='Preference loss weight')
        parser.add_argument('--horizon', type=int, help='Turns per episode')
        parser.add_argument('--budget', type=int, help='Oracle calls per lead')
        parser.add_argument('--workers', type=int)
        parser.add_argument(
            '--set', action='append', default=[], dest='assignments', metavar='KEY=VALUE',
            help='Override any config key, e.g. --set inference.strategy=independent',
        )

    def load_config(self, options):
        try:
            overrides = [parse_assignment(text) for text in options['assignments']]
            return load_config(options.get('config'), overrides + flag_overrides(options))
        except ConfigError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR)

    def output_dir(self, options, config):
        if options.get('output'):
            return Path(options['output'])
        return Path(settings.POLO_OUTPUT_DIR) / config.name

    @contextmanager
    def tracked(self, command, config, output_dir):
        """
        Record the invocation as an ExperimentRun and turn failures
        into exit codes.
        """
        run = None
        try:
            run = ExperimentRun.objects.create(
                command=command, name=config.name, seed=config.seed, config=config.to_dict(),
                output_dir=str(output_dir),
            )
        except DatabaseError as exc:
            logger.warning(f'could not record {command} run: {exc}')
        state = {'metrics': None}
        try:
            yield state
        except CommandError as exc:
            self._fail(run, exc)
            raise
        except ConfigError as exc:
            self._fail(run, exc)
            raise CommandError(str(exc), returncode=CONFIG_ERROR)
        except Exception as exc:
            logger.exception(f'{command} failed: {exc}')
            self._fail(run, exc)
            raise CommandError(str(exc), returncode=RUNTIME_ERROR)
        if run is not None:
            run.mark_finished(state['metrics'])

    def _fail(self, run, exc):
        if run is not None:
            run.mark_failed(exc)
