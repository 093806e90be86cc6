import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.core.exceptions import (
    CheckpointCorruptError, CheckpointError, CheckpointVersionError, NonFiniteError, UnknownParameterError,
)
from apps.datasets.records import group_by_resolution
from apps.datasets.scanning import scan_dataset
from apps.datasets.toy import make_toy_dataset
from apps.networks.config import DiscriminatorConfig, GeneratorConfig
from apps.networks.verification import rescale_for_verification
from apps.training.checkpoints import blob_path, load_checkpoint, restore_model
from apps.training.trainer import LOSS_HEADER, TrainConfig, Trainer, load_generator, read_loss_log, truncate_loss_log

SMALL_GENERATOR = GeneratorConfig(z_dim=8, stage_channels=(8, 8, 4, 4, 4), max_size=24)
SMALL_DISCRIMINATOR = DiscriminatorConfig(conv_channels=(4, 4, 4, 4))


def small_trainer(output_dir, **overrides):
    options = dict(
        epochs=2, batch_size=4, max_size=24, z_dim=8, learning_rate=2e-4, beta1=0.5, beta2=0.999,
        eps=1e-8, seed=7, checkpoint_interval=1, output_dir=output_dir, samples=False,
    )
    options.update(overrides)
    return Trainer(TrainConfig(**options), SMALL_GENERATOR, SMALL_DISCRIMINATOR)


def real_batch(seed=0, size=(16, 20)):
    return np.random.default_rng(seed).uniform(-1, 1, size=(3, 3) + size).astype(np.float32)


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class TrainConfigTest(SimpleTestCase):

    def test_invalid_values_rejected(self):
        for field, value in [('epochs', 0), ('batch_size', 0), ('checkpoint_interval', 0), ('max_size', 2)]:
            with self.assertRaises(ValueError, msg=field):
                TrainConfig(**{field: value})

    def test_defaults_come_from_settings(self):
        config = TrainConfig()
        self.assertEqual((config.batch_size, config.max_size, config.z_dim), (16, 128, 100))
        self.assertEqual(config.to_dict()['output_dir'], str(config.output_dir))


class TrainStepTest(TempDirMixin, SimpleTestCase):

    def test_step_changes_both_networks(self):
        trainer = small_trainer(self.tmp)
        before_g = [p.value.copy() for p in trainer.generator.parameters()]
        before_d = [p.value.copy() for p in trainer.discriminator.parameters()]
        d_loss, g_loss = trainer.train_step(real_batch())
        self.assertTrue(math.isfinite(d_loss) and math.isfinite(g_loss))
        self.assertTrue(any(np.any(p.value != v) for p, v in zip(trainer.generator.parameters(), before_g)))
        self.assertTrue(any(np.any(p.value != v) for p, v in zip(trainer.discriminator.parameters(), before_d)))
        self.assertEqual((trainer.step, trainer.last_size), (1, (16, 20)))

    def test_initial_losses_near_chance(self):
        d_loss, g_loss = small_trainer(self.tmp).train_step(real_batch())
        self.assertAlmostEqual(d_loss, 2 * math.log(2), delta=0.1)
        self.assertAlmostEqual(g_loss, math.log(2), delta=0.1)

    def test_generator_steps_fool_a_frozen_discriminator(self):
        trainer = small_trainer(self.tmp, learning_rate=1e-3)
        rescale_for_verification(trainer.discriminator, np.random.default_rng(1))
        frozen = [p.value.copy() for p in trainer.discriminator.parameters()]
        z = trainer.sample_latent(4)
        losses = [trainer.generator_step(z, (16, 16)) for _ in range(20)]
        self.assertLess(losses[-1], losses[0])
        for parameter, value in zip(trainer.discriminator.parameters(), frozen):
            np.testing.assert_array_equal(parameter.value, value)

    def test_same_seed_same_losses(self):
        first, second = small_trainer(self.tmp / 'a'), small_trainer(self.tmp / 'b')
        for seed in range(3):
            self.assertEqual(first.train_step(real_batch(seed)), second.train_step(real_batch(seed)))

    def test_non_finite_loss_stops_training(self):
        trainer = small_trainer(self.tmp)
        trainer.discriminator.head.bias.value[...] = np.nan
        with self.assertLogs('apps.training.trainer', 'ERROR'):
            with self.assertRaises(NonFiniteError) as ctx:
                trainer.train_step(real_batch())
        self.assertIn('16x20', str(ctx.exception))


class CheckpointTest(TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.trainer = small_trainer(self.tmp)
        self.trainer.train_step(real_batch())
        self.trainer.epoch = 1
        self.path = self.trainer.save(self.tmp / 'checkpoints' / 'epoch_0001.json')

    def rewrite_manifest(self, change):
        manifest = json.loads(self.path.read_text())
        change(manifest)
        self.path.write_text(json.dumps(manifest))

    def test_round_trip_is_bitwise(self):
        restored = Trainer.from_checkpoint(self.path)
        for model in ('generator', 'discriminator'):
            original = dict(getattr(self.trainer, model).named_parameters())
            for name, parameter in getattr(restored, model).named_parameters():
                self.assertEqual(parameter.value.dtype, original[name].value.dtype)
                np.testing.assert_array_equal(parameter.value, original[name].value)
        for original, loaded in [(self.trainer.g_optimizer, restored.g_optimizer),
                                 (self.trainer.d_optimizer, restored.d_optimizer)]:
            self.assertEqual(loaded.hyperparameters(), original.hyperparameters())
            for a, b in zip(original.states, loaded.states):
                np.testing.assert_array_equal(a.m, b.m)
                np.testing.assert_array_equal(a.v, b.v)
        self.assertEqual((restored.epoch, restored.step), (1, 1))
        np.testing.assert_array_equal(restored.sample_latent(3), self.trainer.sample_latent(3))

    def test_generator_output_survives_reload(self):
        z = np.random.default_rng(0).standard_normal((2, 8))
        generator, checkpoint = load_generator(self.path)
        np.testing.assert_array_equal(
            generator.generate(z, (20, 24)), self.trainer.generator.generate(z, (20, 24)),
        )
        self.assertEqual(checkpoint.counters['step'], 1)

    def test_manifest_lists_every_array(self):
        manifest = json.loads(self.path.read_text())
        names = [entry['name'] for entry in manifest['entries']]
        self.assertEqual(manifest['format_version'], 1)
        self.assertIn('generator.project.weight', names)
        self.assertIn('optimizer.discriminator.m.discriminator.head.bias', names)
        self.assertEqual(manifest['blob_bytes'], blob_path(self.path).stat().st_size)

    def test_truncated_blob(self):
        blob = blob_path(self.path)
        blob.write_bytes(blob.read_bytes()[:-7])
        with self.assertRaises(CheckpointCorruptError):
            load_checkpoint(self.path)

    def test_missing_blob(self):
        blob_path(self.path).unlink()
        with self.assertRaises(CheckpointCorruptError):
            load_checkpoint(self.path)

    def test_version_mismatch(self):
        self.rewrite_manifest(lambda manifest: manifest.update(format_version=2))
        with self.assertRaises(CheckpointVersionError):
            load_checkpoint(self.path)

    def test_duplicate_entry(self):
        self.rewrite_manifest(lambda manifest: manifest['entries'].append(dict(manifest['entries'][0])))
        with self.assertRaises(CheckpointCorruptError):
            load_checkpoint(self.path)

    def test_overlapping_entries(self):
        def overlap(manifest):
            manifest['entries'][1]['offset'] = manifest['entries'][0]['offset']
        self.rewrite_manifest(overlap)
        with self.assertRaises(CheckpointCorruptError):
            load_checkpoint(self.path)

    def test_unknown_parameter(self):
        blob = blob_path(self.path)
        size = blob.stat().st_size
        with blob.open('ab') as handle:
            handle.write(np.zeros(1, dtype='<f4').tobytes())

        def add_entry(manifest):
            manifest['entries'].append(
                {'name': 'generator.extra.weight', 'shape': [1], 'offset': size, 'dtype': 'float32'},
            )
        self.rewrite_manifest(add_entry)
        with self.assertRaises(UnknownParameterError):
            restore_model(load_checkpoint(self.path), 'generator', self.trainer.generator)

    def test_missing_checkpoint(self):
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.tmp / 'nope.json')

    def test_unreadable_manifest(self):
        self.path.write_text('{not json')
        with self.assertRaises(CheckpointCorruptError):
            load_checkpoint(self.path)


class TrainingLoopTest(TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        directory = make_toy_dataset(self.tmp / 'toy', 10, size_range=(16, 24), seed=2)
        records, _ = scan_dataset(directory)
        self.groups = group_by_resolution(records, max_size=24)

    def test_loss_log_and_checkpoints(self):
        trainer = small_trainer(self.tmp / 'run', samples=True)
        checkpoints = trainer.train(self.groups)
        self.assertEqual([p.name for p in checkpoints], ['epoch_0001.json', 'epoch_0002.json'])
        rows = read_loss_log(trainer.loss_log_path)
        batches = sum(group.batch_count(4) for group in self.groups)
        self.assertEqual(len(rows), 2 * batches)
        self.assertEqual([row['step'] for row in rows], list(range(1, 2 * batches + 1)))
        self.assertTrue(all(math.isfinite(row['d_loss']) and math.isfinite(row['g_loss']) for row in rows))
        sizes = {group.size for group in self.groups}
        self.assertTrue(all((row['h'], row['w']) in sizes for row in rows))
        with trainer.loss_log_path.open() as handle:
            self.assertEqual(handle.readline().strip(), ','.join(LOSS_HEADER))
        self.assertTrue((self.tmp / 'run' / 'samples' / 'epoch_0002.png').exists())

    def test_checkpoint_interval(self):
        trainer = small_trainer(self.tmp / 'run', epochs=3, checkpoint_interval=2)
        self.assertEqual([p.name for p in trainer.train(self.groups)], ['epoch_0002.json', 'epoch_0003.json'])

    def test_resume_matches_uninterrupted_run(self):
        straight = small_trainer(self.tmp / 'straight')
        straight.train(self.groups)

        interrupted = small_trainer(self.tmp / 'resumed', epochs=1)
        interrupted.train(self.groups)
        resumed = Trainer.from_checkpoint(interrupted.checkpoint_path(1), epochs=2)
        resumed.train(self.groups)

        self.assertEqual(read_loss_log(resumed.loss_log_path), read_loss_log(straight.loss_log_path))
        for model in ('generator', 'discriminator'):
            expected = dict(getattr(straight, model).named_parameters())
            for name, parameter in getattr(resumed, model).named_parameters():
                np.testing.assert_array_equal(parameter.value, expected[name].value)

    def test_resume_after_crash_between_checkpoints(self):
        batches = sum(group.batch_count(4) for group in self.groups)
        self.assertGreater(batches, 1)
        straight = small_trainer(self.tmp / 'straight', epochs=3, checkpoint_interval=2)
        straight.train(self.groups)

        crashed = small_trainer(self.tmp / 'crashed', epochs=3, checkpoint_interval=2)
        train_step = crashed.train_step

        def dies_mid_epoch_three(images):
            if crashed.step == 2 * batches + 1:
                raise RuntimeError('killed')
            return train_step(images)

        crashed.train_step = dies_mid_epoch_three
        with self.assertRaises(RuntimeError):
            crashed.train(self.groups)
        self.assertEqual(len(read_loss_log(crashed.loss_log_path)), 2 * batches + 1)

        resumed = Trainer.from_checkpoint(crashed.checkpoint_path(2))
        with self.assertLogs('apps.training.trainer', 'WARNING'):
            resumed.train(self.groups)
        self.assertEqual(resumed.loss_log_path.read_bytes(), straight.loss_log_path.read_bytes())

    def test_truncate_loss_log_keeps_rows_up_to_step(self):
        trainer = small_trainer(self.tmp / 'run')
        trainer.train(self.groups)
        rows = read_loss_log(trainer.loss_log_path)
        self.assertEqual(truncate_loss_log(trainer.loss_log_path, 3), 3)
        self.assertEqual(read_loss_log(trainer.loss_log_path), rows[:3])

    @pytest.mark.slow
    def test_desk_scale_run(self):
        directory = make_toy_dataset(self.tmp / 'acceptance', 60, size_range=(16, 40), seed=0)
        records, _ = scan_dataset(directory)
        groups = group_by_resolution(records, max_size=32)
        trainer = small_trainer(self.tmp / 'acceptance_run', epochs=5, max_size=32, batch_size=8, samples=True)
        checkpoints = trainer.train(groups)
        self.assertEqual(len(checkpoints), 5)
        generator, _ = load_generator(checkpoints[-1])
        z = np.random.default_rng(0).standard_normal((1, 8))
        for size in [(17, 31), (32, 24), (4, 4)]:
            image = generator.generate(z, size)
            self.assertEqual(image.shape, (1, 3) + size)
            self.assertTrue(np.all(np.isfinite(image)))


@pytest.mark.slow
class AcceptanceScaleTest(TempDirMixin, SimpleTestCase):
    """Five epochs over 2000 toy images of 32-64 px at batch 16, run twice from one seed."""

    def make_trainer(self, output_dir):
        config = TrainConfig(
            epochs=5, batch_size=16, max_size=64, z_dim=8, seed=11, checkpoint_interval=5,
            output_dir=output_dir, samples=False,
        )
        return Trainer(
            config,
            GeneratorConfig(z_dim=8, stage_channels=(8, 8, 4, 4, 4), max_size=64),
            SMALL_DISCRIMINATOR,
        )

    def test_seeded_runs_write_identical_loss_logs(self):
        directory = make_toy_dataset(self.tmp / 'toy', 2000, size_range=(32, 64), seed=0)
        records, _ = scan_dataset(directory)
        groups = group_by_resolution(records, max_size=64)
        sizes = {group.size for group in groups}

        first, second = self.make_trainer(self.tmp / 'first'), self.make_trainer(self.tmp / 'second')
        first.train(groups)
        second.train(groups)

        self.assertEqual(first.loss_log_path.read_bytes(), second.loss_log_path.read_bytes())
        rows = read_loss_log(first.loss_log_path)
        batches = sum(group.batch_count(16) for group in groups)
        self.assertEqual(len(rows), 5 * batches)
        self.assertTrue(all((row['h'], row['w']) in sizes for row in rows))
        self.assertTrue(all(math.isfinite(row['d_loss']) and math.isfinite(row['g_loss']) for row in rows))
        final = [row for row in rows if row['epoch'] == 5]
        self.assertTrue(math.isfinite(np.mean([row['d_loss'] for row in final])))
        self.assertTrue(math.isfinite(np.mean([row['g_loss'] for row in final])))
