import json

from django.core.management.base import CommandError

from bench.commands import CONFIG_ERROR, ExperimentCommand
from bench.compare import DEFAULT_MARGIN, DEFAULT_SEEDS, run_comparison
from bench.runner import run_experiment


class Command(ExperimentCommand):
    help = 'Train on the training split, then optimize the held-out leads'

    def add_arguments(self, parser):
        self.add_config_arguments(parser)
        parser.add_argument(
            '--compare', action='store_true',
            help='Run the PGPO, PPO, untrained and GA arms over several seeds and report their ordering',
        )
        parser.add_argument('--seeds', type=int, default=DEFAULT_SEEDS, help='Seeds per arm with --compare')
        parser.add_argument(
            '--margin', type=float, default=DEFAULT_MARGIN,
            help='Success-rate points PGPO must lead GA by with --compare',
        )

    def handle(self, *args, **options):
        if options['seeds'] < 1:
            raise CommandError(f'--seeds must be at least 1, got {options["seeds"]}', returncode=CONFIG_ERROR)
        config = self.load_config(options)
        output_dir = self.output_dir(options, config)
        command = 'compare' if options['compare'] else 'experiment'
        with self.tracked(command, config, output_dir) as state:
            if options['compare']:
                state['metrics'] = run_comparison(config, output_dir, options['seeds'], options['margin'])
            else:
                state['metrics'] = run_experiment(config, output_dir)
        self.stdout.write(json.dumps(state['metrics'], sort_keys=True, indent=2))
        if options['compare'] and not state['metrics']['ordering_holds']:
            self.stdout.write(self.style.WARNING('Method ordering does not hold; see comparison.json'))
        self.stdout.write(self.style.SUCCESS(f'Experiment written to {output_dir}'))
