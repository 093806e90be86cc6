"""
Management command to write a synthetic ellipse corpus.
Usage: python manage.py make_toy --out DIR --n 2000 --size-range 32 64
"""
from django.core.management.base import CommandError

from apps.core.commands import USAGE_ERROR, PipelineCommand
from apps.datasets.toy import make_toy_dataset


class Command(PipelineCommand):
    help = 'Generate a deterministic toy corpus of anti-aliased ellipses at mixed sizes'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--out', required=True, help='Directory to write images and manifest.csv')
        parser.add_argument('--n', type=int, default=100, help='Number of images')
        parser.add_argument('--size-range', type=int, nargs=2, default=(32, 64), metavar=('MIN', 'MAX'))
        parser.add_argument('--size-step', type=int, default=8, help='Grid step of the long side')

    def run(self, **options):
        if options['n'] < 1:
            raise CommandError('--n must be at least 1', returncode=USAGE_ERROR)
        directory = make_toy_dataset(
            options['out'], options['n'], tuple(options['size_range']),
            seed=options['seed'], size_step=options['size_step'],
        )
        self.success(f'Wrote {options["n"]} toy images to {directory}')
