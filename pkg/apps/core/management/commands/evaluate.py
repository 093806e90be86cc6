"""
Management command to report the Inception Score of generated (and optionally real) images.
Usage: python manage.py evaluate --checkpoint MANIFEST --classifier MANIFEST [--data DIR]
"""
import csv
from pathlib import Path

from apps.core.commands import PipelineCommand, parse_sizes
from apps.datasets.records import group_by_resolution
from apps.datasets.scanning import scan_dataset
from apps.metrics.classifier import load_classifier
from apps.metrics.evaluation import score_corpus, score_generator
from apps.training.trainer import load_generator


class Command(PipelineCommand):
    help = 'Inception Score via the toy classifier, for the real corpus and for generated images'
    settings_options = {
        **PipelineCommand.settings_options,
        'batch_size': ('ANYSIZE_BATCH_SIZE', int),
    }

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True, help='Training checkpoint manifest')
        parser.add_argument('--classifier', required=True, help='Classifier manifest from train_classifier')
        parser.add_argument('--count', type=int, default=500, help='Generated images to score')
        parser.add_argument('--splits', type=int, default=10)
        parser.add_argument('--batch-size', type=int)
        parser.add_argument('--sizes', help='Comma-separated HxW list to generate at')
        parser.add_argument('--data', help='Real corpus; also scored, and its group sizes are the default sizes')
        parser.add_argument('--out', help='Optional directory for scores.csv')

    def run(self, **options):
        generator, _ = load_generator(options['checkpoint'])
        classifier = load_classifier(options['classifier'])

        groups = None
        if options['data']:
            records, _ = scan_dataset(options['data'], workers=options['threads'])
            groups = group_by_resolution(records, generator.config.max_size)
        if options['sizes']:
            sizes = parse_sizes(options['sizes'])
        elif groups:
            sizes = [group.size for group in groups]
        else:
            sizes = [(generator.config.max_size, generator.config.max_size)]

        scores = {}
        if groups:
            scores['real'] = score_corpus(groups, classifier, options['splits'], options['batch_size'])
        scores['generated'] = score_generator(
            generator, classifier, options['count'], sizes,
            seed=options['seed'], splits=options['splits'], batch_size=options['batch_size'],
        )
        for source, result in scores.items():
            self.success(f'IS {source}: {result} ({result.samples} images, {result.splits} splits)')

        if options['out']:
            with (Path(options['out']) / 'scores.csv').open('w', newline='') as handle:
                writer = csv.writer(handle)
                writer.writerow(['source', 'mean', 'sd', 'splits', 'samples'])
                for source, result in scores.items():
                    writer.writerow([source, repr(result.mean), repr(result.sd), result.splits, result.samples])
