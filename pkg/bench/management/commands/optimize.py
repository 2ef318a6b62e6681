import json

from bench.commands import ExperimentCommand
from bench.leads import load_leads
from bench.runner import experiment_leads, optimize_leads, write_json
from policy.linear import load_checkpoint


class Command(ExperimentCommand):
    help = 'Optimize leads under the oracle budget with a policy checkpoint (or the GA baseline)'

    def add_arguments(self, parser):
        self.add_config_arguments(parser)
        parser.add_argument('--checkpoint', help='Policy checkpoint; the untrained policy is used when omitted')
        parser.add_argument('--leads', help='Leads file to optimize in full instead of the held-out split')

    def handle(self, *args, **options):
        config = self.load_config(options)
        output_dir = self.output_dir(options, config)
        with self.tracked('optimize', config, output_dir) as state:
            if options.get('leads'):
                leads = load_leads(options['leads'])
            else:
                _, leads = experiment_leads(config)
            params = None
            if config.method != 'ga':
                params = load_checkpoint(options['checkpoint']) if options.get('checkpoint') else config.initial_params()
            write_json(config.to_dict(), output_dir / 'config.json')
            self.stdout.write(f'Optimizing {len(leads)} leads with budget {config.inference.budget}...')
            _, summary = optimize_leads(config, params, leads, output_dir)
            state['metrics'] = summary
        self.stdout.write(json.dumps(summary, sort_keys=True, indent=2))
        self.stdout.write(self.style.SUCCESS(f'Results written to {output_dir}'))
