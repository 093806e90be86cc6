"""
Management command to sample images from a trained generator.
Usage:
    python manage.py generate --checkpoint MANIFEST --out DIR --mode random --count 8
    python manage.py generate --checkpoint MANIFEST --out DIR --mode fixed-z --sizes 84x128,96x128,128x128
"""
import csv
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from apps.core.commands import USAGE_ERROR, PipelineCommand, parse_sizes
from apps.datasets.imageio import contact_sheet, to_uint8, write_png
from apps.datasets.records import group_by_resolution, training_samples
from apps.datasets.scanning import scan_dataset
from apps.training.trainer import load_generator

RANDOM = 'random'
FIXED_Z = 'fixed-z'


class Command(PipelineCommand):
    help = 'Generate images at random sizes, or one latent vector at several sizes'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Training checkpoint manifest')
        parser.add_argument('--out', required=True, help='Directory for the generated PNGs')
        parser.add_argument('--mode', choices=(RANDOM, FIXED_Z), default=RANDOM)
        parser.add_argument('--count', type=int, default=8, help='Images in random mode')
        parser.add_argument('--sizes', help='Comma-separated HxW list for fixed-z mode')
        parser.add_argument(
            '--size-range', type=int, nargs=2, metavar=('MIN', 'MAX'),
            help='Inclusive side-length range for random mode (default: 32 to the training cap)',
        )
        parser.add_argument('--data', help='Training directory; reports training samples per requested size')

    def run(self, **options):
        generator, _ = load_generator(options['checkpoint'])
        rng = np.random.default_rng(options['seed'])
        out_dir = Path(options['out'])
        if options['mode'] == RANDOM:
            self.generate_random(generator, rng, out_dir, options)
        else:
            self.generate_fixed_z(generator, rng, out_dir, options)

    def generate_random(self, generator, rng, out_dir, options):
        low, high = options['size_range'] or (32, generator.config.max_size)
        base = max(generator.config.base)
        if low < base or high < low:
            raise CommandError(f'--size-range must satisfy {base} <= MIN <= MAX', returncode=USAGE_ERROR)
        for index in range(options['count']):
            height, width = (int(v) for v in rng.integers(low, high + 1, size=2))
            z = rng.standard_normal((1, generator.config.z_dim))
            image = to_uint8(generator.generate(z, (height, width))[0])
            write_png(image, out_dir / f'random_{index:04d}_{height}x{width}.png')
        self.success(f'Wrote {options["count"]} images to {out_dir}')

    def generate_fixed_z(self, generator, rng, out_dir, options):
        if not options['sizes']:
            raise CommandError('--mode fixed-z needs --sizes H1xW1,H2xW2,...', returncode=USAGE_ERROR)
        sizes = parse_sizes(options['sizes'])
        counts = {}
        if options['data']:
            records, _ = scan_dataset(options['data'], workers=options['threads'])
            counts = training_samples(group_by_resolution(records, generator.config.max_size))

        z = rng.standard_normal((1, generator.config.z_dim))
        images = []
        with (out_dir / 'fixed_z.csv').open('w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['height', 'width', 'file', 'training_samples'])
            for height, width in sizes:
                image = to_uint8(generator.generate(z, (height, width))[0])
                name = f'fixed_z_{height}x{width}.png'
                write_png(image, out_dir / name)
                images.append(image)
                samples = counts.get((height, width), 0) if options['data'] else ''
                writer.writerow([height, width, name, samples])
                suffix = f'  training samples: {samples}' if options['data'] else ''
                self.stdout.write(f'  {height}x{width}{suffix}')
        write_png(contact_sheet(images), out_dir / 'contact_sheet.png')
        self.success(f'Wrote {len(sizes)} sizes from one latent vector to {out_dir}')
