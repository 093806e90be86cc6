"""
Management command to take the resolution census of an image directory.
Usage: python manage.py census --data DIR --out census.csv
"""
from pathlib import Path

from apps.core.commands import PipelineCommand
from apps.datasets.scanning import scan_dataset, write_census_csv


class Command(PipelineCommand):
    help = 'Count images per native resolution and write the census CSV'

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Directory of PNG/JPEG images')
        parser.add_argument('--out', required=True, help='Census CSV to write')

    def output_dir(self, options):
        return Path(options['out']).parent

    def run(self, **options):
        _, census = scan_dataset(options['data'], workers=options['threads'])
        path = write_census_csv(census, options['out'])
        for key, value in census.summary().items():
            self.stdout.write(f'  {key}: {value}')
        for error in census.identity_errors():
            self.stdout.write(self.style.WARNING(f'⚠ {error}'))
        self.success(f'Census of {census.total_images} images written to {path}')
