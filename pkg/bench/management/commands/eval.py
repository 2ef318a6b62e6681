import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from bench.commands import CONFIG_ERROR, RUNTIME_ERROR
from bench.config import load_config
from bench.exceptions import BenchError, ConfigError
from bench.metrics import summarize
from bench.results import read_results


class Command(BaseCommand):
    help = 'Compute success rate, similarity and relative improvement from result files'

    def add_arguments(self, parser):
        parser.add_argument('results', nargs='+', help='results.jsonl files; all records are pooled')
        parser.add_argument('--config', help='Config whose task properties define the improvement signs')
        parser.add_argument('--output', help='Write the metrics JSON here as well')

    def handle(self, *args, **options):
        properties = None
        if options.get('config'):
            try:
                properties = load_config(options['config']).specs
            except ConfigError as exc:
                raise CommandError(str(exc), returncode=CONFIG_ERROR)
        try:
            results = [result for path in options['results'] for result in read_results(path)]
            summary = summarize(results, properties)
        except (OSError, ValueError, KeyError, BenchError) as exc:
            raise CommandError(str(exc), returncode=RUNTIME_ERROR)

        text = json.dumps(summary, sort_keys=True, indent=2)
        if options.get('output'):
            Path(options['output']).write_text(text + '\n', encoding='utf-8')
        self.stdout.write(text)
