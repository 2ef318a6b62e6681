from bench.commands import ExperimentCommand
from bench.runner import experiment_leads, train_policy, write_json


class Command(ExperimentCommand):
    help = 'Train the edit policy with PGPO on the training split and write a checkpoint'

    def add_arguments(self, parser):
        self.add_config_arguments(parser)

    def handle(self, *args, **options):
        config = self.load_config(options)
        output_dir = self.output_dir(options, config)
        with self.tracked('train', config, output_dir):
            write_json(config.to_dict(), output_dir / 'config.json')
            training, _ = experiment_leads(config)
            self.stdout.write(f'Training on {len(training)} leads for {config.training.iterations} iterations...')
            train_policy(config, training, output_dir)
        self.stdout.write(self.style.SUCCESS(f'Checkpoint written to {output_dir / "policy.json"}'))
