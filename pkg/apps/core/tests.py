import csv
import os
import subprocess
import sys
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.core.commands import (
    DATA_ERROR, RUN_CONFIG_NAME, USAGE_ERROR, VERIFICATION_ERROR, exit_code, parse_channels, parse_size, parse_sizes,
)
from apps.core.exceptions import (
    CheckpointCorruptError, DataError, InvalidSizeError, NonFiniteError, ScoreError, ShapeError, VerificationError,
)
from apps.core.management.commands.census import Command as CensusCommand
from apps.datasets.imageio import read_dimensions, write_png
from apps.metrics.classifier import ToyClassifier, save_classifier
from apps.networks.config import DiscriminatorConfig, GeneratorConfig
from apps.training.trainer import TrainConfig, Trainer, read_loss_log

TINY_NETWORK = dict(
    stage_channels='4,4,4,4,4', disc_channels='4,4,4,4', max_size=24, z_dim=8, batch_size=4,
    checkpoint_interval=1, no_samples=True,
)


def run(name, *args, **options):
    stdout = StringIO()
    call_command(name, *args, stdout=stdout, **options)
    return stdout.getvalue()


def read_run_config(directory):
    lines = (Path(directory) / RUN_CONFIG_NAME).read_text().splitlines()
    return dict(line.split('=', 1) for line in lines)


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class ParsingTest(SimpleTestCase):

    def test_parse_size(self):
        self.assertEqual(parse_size('96x128'), (96, 128))
        self.assertEqual(parse_size(' 4 X 5 '), (4, 5))

    def test_invalid_sizes(self):
        for text in ('abc', '0x5', '12by4', '-3x4', ''):
            with self.assertRaises(InvalidSizeError, msg=text):
                parse_size(text)

    def test_parse_sizes(self):
        self.assertEqual(parse_sizes('84x128,96x128'), [(84, 128), (96, 128)])
        with self.assertRaises(InvalidSizeError):
            parse_sizes(',')

    def test_parse_channels(self):
        self.assertEqual(parse_channels('8,4'), (8, 4))
        with self.assertRaises(InvalidSizeError):
            parse_channels('8,x')

    def test_exit_codes(self):
        self.assertEqual(exit_code(InvalidSizeError('x')), USAGE_ERROR)
        self.assertEqual(exit_code(ScoreError('x')), USAGE_ERROR)
        self.assertEqual(exit_code(ValueError('x')), USAGE_ERROR)
        self.assertEqual(exit_code(DataError('x')), DATA_ERROR)
        self.assertEqual(exit_code(CheckpointCorruptError('x')), DATA_ERROR)
        self.assertEqual(exit_code(ShapeError('x')), DATA_ERROR)
        self.assertEqual(exit_code(NonFiniteError('x')), DATA_ERROR)
        self.assertEqual(exit_code(FileNotFoundError('x')), DATA_ERROR)
        self.assertEqual(exit_code(VerificationError('x')), VERIFICATION_ERROR)


class CommandErrorTest(TempDirMixin, SimpleTestCase):

    def test_missing_data_directory(self):
        with self.assertRaises(CommandError) as ctx:
            run('census', data=str(self.tmp / 'missing'), out=str(self.tmp / 'census.csv'))
        self.assertEqual(ctx.exception.returncode, DATA_ERROR)

    def test_missing_checkpoint(self):
        with self.assertRaises(CommandError) as ctx:
            run('generate', checkpoint=str(self.tmp / 'nope.json'), out=str(self.tmp / 'gen'))
        self.assertEqual(ctx.exception.returncode, DATA_ERROR)

    def test_gradient_check_failure(self):
        with self.assertRaises(CommandError) as ctx:
            run('gradcheck', threshold=0.0, cases=1, end_to_end_cases=0)
        self.assertEqual(ctx.exception.returncode, VERIFICATION_ERROR)

    def test_toy_count_must_be_positive(self):
        with self.assertRaises(CommandError) as ctx:
            run('make_toy', out=str(self.tmp / 'toy'), n=0)
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as ctx:
            run('make_toy', out=str(self.tmp / 'toy'), n=1, config=str(self.tmp / 'absent.env'))
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)

    def test_bad_argument_exits_with_usage_code(self):
        command = CensusCommand(stdout=StringIO(), stderr=StringIO())
        with self.assertRaises(SystemExit) as ctx:
            command.run_from_argv(['manage.py', 'census', '--data', str(self.tmp), '--bogus'])
        self.assertEqual(ctx.exception.code, USAGE_ERROR)

    def test_fewer_images_than_splits(self):
        trainer = Trainer(
            TrainConfig(output_dir=self.tmp / 'run', samples=False),
            GeneratorConfig(z_dim=8, stage_channels=(4, 4, 4, 4, 4), max_size=16),
            DiscriminatorConfig(conv_channels=(4, 4, 4, 4)),
        )
        checkpoint = trainer.save(trainer.checkpoint_path(0))
        classifier = save_classifier(self.tmp / 'clf' / 'classifier.json', ToyClassifier(rng=np.random.default_rng(0)))
        with self.assertRaises(CommandError) as ctx:
            run('evaluate', checkpoint=str(checkpoint), classifier=str(classifier), count=2, splits=5)
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)

    def test_zero_epochs(self):
        run('make_toy', out=str(self.tmp / 'toy'), n=2, size_range=[16, 24])
        with self.assertRaises(CommandError) as ctx:
            run('train', data=str(self.tmp / 'toy'), out=str(self.tmp / 'run'), epochs=0, **TINY_NETWORK)
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)

    def test_holdout_out_of_range(self):
        with self.assertRaises(CommandError) as ctx:
            run('train_classifier', data=str(self.tmp), out=str(self.tmp / 'clf'), holdout=1.5)
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)


class ConfigPrecedenceTest(TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.config = self.tmp / 'run.env'
        self.config.write_text('seed=5\nANYSIZE_THREADS=2\n')

    def test_file_overrides_settings(self):
        run('make_toy', out=str(self.tmp / 'toy'), n=2, size_range=[16, 24], config=str(self.config))
        recorded = read_run_config(self.tmp / 'toy')
        self.assertEqual((recorded['seed'], recorded['threads']), ('5', '2'))

    def test_flag_overrides_file(self):
        run('make_toy', out=str(self.tmp / 'toy'), n=2, size_range=[16, 24], config=str(self.config), seed=9)
        self.assertEqual(read_run_config(self.tmp / 'toy')['seed'], '9')

    def test_file_seed_is_used(self):
        run('make_toy', out=str(self.tmp / 'a'), n=2, size_range=[16, 24], config=str(self.config))
        run('make_toy', out=str(self.tmp / 'b'), n=2, size_range=[16, 24], seed=5)
        for name in ('toy_00000.png', 'toy_00001.png', 'manifest.csv'):
            self.assertEqual((self.tmp / 'a' / name).read_bytes(), (self.tmp / 'b' / name).read_bytes())


class PipelineTest(TempDirMixin, SimpleTestCase):
    """make_toy -> census -> train -> generate -> evaluate through the management commands."""

    def setUp(self):
        super().setUp()
        self.data = self.tmp / 'toy'
        run('make_toy', out=str(self.data), n=12, size_range=[16, 24], seed=0)

    def test_census(self):
        out = run('census', data=str(self.data), out=str(self.tmp / 'reports' / 'census.csv'))
        self.assertIn('total_images: 12', out)
        with (self.tmp / 'reports' / 'census.csv').open(newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['width', 'height', 'count'])
        self.assertEqual(read_run_config(self.tmp / 'reports')['data'], str(self.data))

    def test_census_is_deterministic(self):
        first = run('census', data=str(self.data), out=str(self.tmp / 'a' / 'census.csv'), threads=1)
        second = run('census', data=str(self.data), out=str(self.tmp / 'b' / 'census.csv'), threads=4)
        self.assertEqual(first.replace(str(self.tmp / 'a'), ''), second.replace(str(self.tmp / 'b'), ''))
        self.assertEqual(
            (self.tmp / 'a' / 'census.csv').read_bytes(), (self.tmp / 'b' / 'census.csv').read_bytes(),
        )

    def test_audit(self):
        rng = np.random.default_rng(0)
        source = write_png(rng.integers(0, 256, size=(32, 48, 3), dtype=np.uint8), self.tmp / 'source.png')
        reference = write_png(rng.integers(0, 256, size=(16, 24, 3), dtype=np.uint8), self.tmp / 'reference.png')
        out = run('audit', reference=str(reference), source=str(source), out=str(self.tmp / 'audit'))
        self.assertIn('cubic', out)
        self.assertTrue((self.tmp / 'audit' / 'audit.csv').exists())

    def test_train_resume_generate_evaluate(self):
        run_dir = self.tmp / 'run'
        run('train', data=str(self.data), out=str(run_dir), epochs=1, seed=3, **TINY_NETWORK)
        first = read_loss_log(run_dir / 'losses.csv')
        self.assertTrue(first)
        self.assertEqual(read_run_config(run_dir)['epochs'], '1')

        checkpoint = run_dir / 'checkpoints' / 'epoch_0001.json'
        run('train', data=str(self.data), out=str(run_dir), epochs=2, resume=str(checkpoint))
        rows = read_loss_log(run_dir / 'losses.csv')
        self.assertEqual(len(rows), 2 * len(first))
        self.assertEqual({row['epoch'] for row in rows}, {1, 2})
        final = run_dir / 'checkpoints' / 'epoch_0002.json'
        self.assertTrue(final.exists())

        fixed = self.tmp / 'fixed'
        out = run(
            'generate', checkpoint=str(final), out=str(fixed), mode='fixed-z',
            sizes='16x16,20x24,24x24', data=str(self.data),
        )
        self.assertIn('20x24', out)
        self.assertEqual(read_dimensions(fixed / 'fixed_z_20x24.png'), (24, 20))
        self.assertTrue((fixed / 'contact_sheet.png').exists())
        with (fixed / 'fixed_z.csv').open(newline='') as handle:
            table = list(csv.DictReader(handle))
        self.assertEqual([row['file'] for row in table], ['fixed_z_16x16.png', 'fixed_z_20x24.png', 'fixed_z_24x24.png'])

        random_dir = self.tmp / 'random'
        run('generate', checkpoint=str(final), out=str(random_dir), count=3, size_range=[16, 24])
        names = sorted(path.name for path in random_dir.glob('random_*.png'))
        self.assertEqual(len(names), 3)
        height, width = (int(v) for v in names[0].rsplit('_', 1)[1][:-4].split('x'))
        self.assertEqual(read_dimensions(random_dir / names[0]), (width, height))

        classifier = save_classifier(self.tmp / 'clf' / 'classifier.json', ToyClassifier(rng=np.random.default_rng(0)))
        scores_dir = self.tmp / 'scores'
        run(
            'evaluate', checkpoint=str(final), classifier=str(classifier), data=str(self.data),
            count=4, splits=2, batch_size=4, out=str(scores_dir),
        )
        with (scores_dir / 'scores.csv').open(newline='') as handle:
            scores = {row['source']: row for row in csv.DictReader(handle)}
        self.assertEqual(set(scores), {'real', 'generated'})
        self.assertEqual(scores['generated']['samples'], '4')
        self.assertGreaterEqual(float(scores['generated']['mean']), 1.0 - 1e-9)

    def test_fixed_z_needs_sizes(self):
        run_dir = self.tmp / 'run'
        run('train', data=str(self.data), out=str(run_dir), epochs=1, **TINY_NETWORK)
        with self.assertRaises(CommandError) as ctx:
            run('generate', checkpoint=str(run_dir / 'checkpoints' / 'epoch_0001.json'),
                out=str(self.tmp / 'gen'), mode='fixed-z')
        self.assertEqual(ctx.exception.returncode, USAGE_ERROR)

    def test_gradcheck_report(self):
        out = run('gradcheck', cases=1, end_to_end_cases=0, out=str(self.tmp / 'grad'))
        self.assertIn('resize_bilinear', out)
        with (self.tmp / 'grad' / 'gradcheck.csv').open(newline='') as handle:
            rows = list(csv.DictReader(handle))
        self.assertTrue(all(row['passed'] == 'True' for row in rows))


class ThreadVariableTest(TempDirMixin, SimpleTestCase):
    """ANYSIZE_THREADS and --threads through the real manage.py entry point."""

    def manage(self, *args, **env):
        environ = {key: value for key, value in os.environ.items() if key != 'ANYSIZE_THREADS'}
        environ.update(env)
        subprocess.run(
            [sys.executable, str(settings.BASE_DIR / 'manage.py'), *args],
            env=environ, cwd=settings.BASE_DIR, check=True, capture_output=True, text=True,
        )

    def test_environment_variable_is_honoured(self):
        out = self.tmp / 'toy'
        self.manage('make_toy', '--out', str(out), '--n', '1', '--size-range', '16', '24', ANYSIZE_THREADS='3')
        self.assertEqual(read_run_config(out)['threads'], '3')

    def test_flag_overrides_environment(self):
        out = self.tmp / 'toy'
        self.manage(
            'make_toy', '--out', str(out), '--n', '1', '--size-range', '16', '24', '--threads', '2',
            ANYSIZE_THREADS='3',
        )
        self.assertEqual(read_run_config(out)['threads'], '2')


class FixedLatentSizesTest(TempDirMixin, SimpleTestCase):

    def test_one_latent_vector_at_each_requested_size(self):
        trainer = Trainer(
            TrainConfig(output_dir=self.tmp / 'run', seed=0, samples=False),
            GeneratorConfig(z_dim=8, stage_channels=(4, 4, 4, 4, 4)),
            DiscriminatorConfig(conv_channels=(4, 4, 4, 4)),
        )
        checkpoint = trainer.save(trainer.checkpoint_path(0))
        sizes = [(84, 128), (85, 128), (89, 128), (95, 128), (96, 128), (111, 128), (128, 128)]
        out = self.tmp / 'fixed'
        run('generate', checkpoint=str(checkpoint), out=str(out), mode='fixed-z',
            sizes=','.join(f'{h}x{w}' for h, w in sizes))
        pngs = sorted(out.glob('fixed_z_*.png'))
        self.assertEqual(len(pngs), 7)
        for height, width in sizes:
            self.assertEqual(read_dimensions(out / f'fixed_z_{height}x{width}.png'), (width, height))
