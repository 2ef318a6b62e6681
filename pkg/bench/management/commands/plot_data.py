from pathlib import Path

import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from bench.commands import RUNTIME_ERROR
from bench.exceptions import BenchError
from bench.metrics import success_curve
from bench.results import read_results


class Command(BaseCommand):
    help = 'Emit success-rate-versus-oracle-calls curves as CSV'

    def add_arguments(self, parser):
        parser.add_argument('results', nargs='+', help='results.jsonl files, one curve each')
        parser.add_argument('--budget', type=int, help='Largest call count on the curve (default: max calls used)')
        parser.add_argument('--points', type=int, default=50)
        parser.add_argument('--output', help='CSV path (default: stdout)')

    def handle(self, *args, **options):
        frames = []
        try:
            for path in options['results']:
                results = read_results(path)
                budget = options.get('budget') or max(max(result.calls for result in results), 1)
                curve = success_curve(results, budget, options['points'])
                curve.insert(0, 'label', Path(path).parent.name or Path(path).stem)
                frames.append(curve)
        except (OSError, ValueError, KeyError, BenchError) as exc:
            raise CommandError(str(exc), returncode=RUNTIME_ERROR)

        table = pd.concat(frames, ignore_index=True)
        if options.get('output'):
            table.to_csv(options['output'], index=False)
            self.stdout.write(self.style.SUCCESS(f'Wrote {len(table)} rows to {options["output"]}'))
        else:
            self.stdout.write(table.to_csv(index=False), ending='')
