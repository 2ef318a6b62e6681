from django.core.management import call_command
from django.core.management.base import BaseCommand, CommandError

from bench.commands import RUNTIME_ERROR

SUITES = ('chemgraph', 'oracle', 'environment', 'policy', 'pgpo', 'filtering', 'evolve', 'bench')


class Command(BaseCommand):
    help = 'Run the test suites of every app'

    def add_arguments(self, parser):
        parser.add_argument('suites', nargs='*', help=f'Subset of {", ".join(SUITES)}')

    def handle(self, *args, **options):
        suites = options['suites'] or SUITES
        unknown = sorted(set(suites) - set(SUITES))
        if unknown:
            raise CommandError(f'unknown suites: {unknown}', returncode=1)
        try:
            call_command('test', *suites, verbosity=options['verbosity'])
        except SystemExit as exc:
            if exc.code:
                raise CommandError('self-test failed', returncode=RUNTIME_ERROR)
        self.stdout.write(self.style.SUCCESS('All self-tests passed.'))
