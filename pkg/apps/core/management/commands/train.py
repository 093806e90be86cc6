"""
Management command to train the generator/discriminator pair on a directory of images.
Usage: python manage.py train --data DIR --out DIR [--epochs N] [--resume MANIFEST]
"""
from pathlib import Path

from django.core.management.base import CommandError

from apps.core.commands import USAGE_ERROR, PipelineCommand, parse_channels
from apps.datasets.records import group_by_resolution
from apps.datasets.scanning import scan_dataset
from apps.networks.config import DiscriminatorConfig, GeneratorConfig
from apps.resize.interpolation import MODES
from apps.training.trainer import TrainConfig, Trainer


class Command(PipelineCommand):
    help = 'Train on variable-size batches grouped by capped resolution'
    settings_options = {
        **PipelineCommand.settings_options,
        'out': ('ANYSIZE_OUTPUT_DIR', Path),
        'epochs': ('ANYSIZE_EPOCHS', int),
        'batch_size': ('ANYSIZE_BATCH_SIZE', int),
        'max_size': ('ANYSIZE_MAX_SIZE', int),
        'z_dim': ('ANYSIZE_Z_DIM', int),
        'learning_rate': ('ANYSIZE_LEARNING_RATE', float),
        'beta1': ('ANYSIZE_BETA1', float),
        'beta2': ('ANYSIZE_BETA2', float),
        'checkpoint_interval': ('ANYSIZE_CHECKPOINT_INTERVAL', int),
    }

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Directory of training images')
        parser.add_argument('--out', help='Run directory (default: ANYSIZE_OUTPUT_DIR)')
        parser.add_argument('--epochs', type=int)
        parser.add_argument('--batch-size', type=int)
        parser.add_argument('--max-size', type=int, help='Longest-side cap M')
        parser.add_argument('--z-dim', type=int)
        parser.add_argument('--learning-rate', type=float)
        parser.add_argument('--beta1', type=float)
        parser.add_argument('--beta2', type=float)
        parser.add_argument('--checkpoint-interval', type=int, help='Epochs between checkpoints')
        parser.add_argument('--stage-channels', default='256,128,64,32,16', help='Generator channels per stage')
        parser.add_argument('--disc-channels', default='32,64,128,256', help='Discriminator conv channels')
        parser.add_argument('--resize-mode', choices=MODES, default=MODES[0])
        parser.add_argument('--prefetch', action='store_true', help='Load the next batch on a worker thread')
        parser.add_argument('--no-samples', action='store_true', help='Skip the per-epoch sample sheet')
        parser.add_argument(
            '--resume', help='Checkpoint manifest to continue from; stored settings win except --epochs/--out',
        )

    def build_trainer(self, options):
        try:
            if options['resume']:
                overrides = {
                    field: options[name] for name, field in (('epochs', 'epochs'), ('out', 'output_dir'))
                    if name in self.explicit_options
                }
                return Trainer.from_checkpoint(options['resume'], **overrides)
            config = TrainConfig(
                epochs=options['epochs'],
                batch_size=options['batch_size'],
                max_size=options['max_size'],
                z_dim=options['z_dim'],
                learning_rate=options['learning_rate'],
                beta1=options['beta1'],
                beta2=options['beta2'],
                seed=options['seed'],
                checkpoint_interval=options['checkpoint_interval'],
                output_dir=options['out'],
                prefetch=options['prefetch'],
                samples=not options['no_samples'],
            )
            generator_config = GeneratorConfig(
                z_dim=config.z_dim,
                stage_channels=parse_channels(options['stage_channels']),
                resize_mode=options['resize_mode'],
                max_size=config.max_size,
            )
            discriminator_config = DiscriminatorConfig(conv_channels=parse_channels(options['disc_channels']))
        except ValueError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR) from exc
        return Trainer(config, generator_config, discriminator_config)

    def run(self, **options):
        trainer = self.build_trainer(options)
        records, census = scan_dataset(options['data'], workers=options['threads'])
        groups = group_by_resolution(records, trainer.config.max_size)
        self.stdout.write(
            f'Training on {census.total_images} images in {len(groups)} resolution group(s), '
            f'epochs {trainer.epoch + 1}..{trainer.config.epochs}'
        )
        checkpoints = trainer.train(groups)
        self.success(f'Finished at step {trainer.step}; loss log {trainer.loss_log_path}')
        for path in checkpoints:
            self.stdout.write(f'  checkpoint: {path}')
