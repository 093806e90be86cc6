"""
Management command to fit the toy classifier used by evaluate.
Usage: python manage.py train_classifier --data TOY_DIR --out DIR
"""
from pathlib import Path

import numpy as np
from django.core.management.base import CommandError

from apps.core.commands import USAGE_ERROR, PipelineCommand
from apps.core.exceptions import VerificationError
from apps.datasets.records import group_by_resolution
from apps.datasets.scanning import scan_dataset
from apps.datasets.toy import read_manifest
from apps.metrics.classifier import accuracy, save_classifier, train_classifier

CLASSIFIER_NAME = 'classifier.json'


class Command(PipelineCommand):
    help = 'Train the ellipse colour-family classifier on a toy corpus and report held-out accuracy'
    settings_options = {
        **PipelineCommand.settings_options,
        'batch_size': ('ANYSIZE_BATCH_SIZE', int),
        'max_size': ('ANYSIZE_MAX_SIZE', int),
    }

    def add_pipeline_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Toy corpus directory with manifest.csv')
        parser.add_argument('--out', required=True, help='Directory for classifier.json/.bin')
        parser.add_argument('--epochs', type=int, default=4)
        parser.add_argument('--batch-size', type=int)
        parser.add_argument('--max-size', type=int)
        parser.add_argument('--learning-rate', type=float, default=5e-3)
        parser.add_argument('--holdout', type=float, default=0.2, help='Fraction of images held out')

    def run(self, **options):
        if not 0 < options['holdout'] < 1:
            raise CommandError('--holdout must be between 0 and 1', returncode=USAGE_ERROR)
        labels = {name: row['label'] for name, row in read_manifest(options['data']).items()}
        records, _ = scan_dataset(options['data'], workers=options['threads'])
        if len(records) < 2:
            raise CommandError('Need at least two images to hold some out', returncode=USAGE_ERROR)

        order = np.random.default_rng(options['seed']).permutation(len(records))
        held = max(1, int(round(len(records) * options['holdout'])))
        test_records = [records[i] for i in sorted(order[:held])]
        train_records = [records[i] for i in sorted(order[held:])]

        classifier, history = train_classifier(
            group_by_resolution(train_records, options['max_size']), labels,
            epochs=options['epochs'], batch_size=options['batch_size'],
            seed=options['seed'], learning_rate=options['learning_rate'],
        )
        score = accuracy(classifier, group_by_resolution(test_records, options['max_size']), labels)
        path = save_classifier(
            Path(options['out']) / CLASSIFIER_NAME, classifier,
            epochs=options['epochs'], holdout_accuracy=score, final_loss=history[-1],
        )
        chance = 1 / classifier.config.num_classes
        if score <= chance:
            raise VerificationError(f'Held-out accuracy {score:.3f} is not above chance {chance:.3f}')
        self.success(f'Held-out accuracy {score:.3f} on {held} images (chance {chance:.3f}); saved {path}')
