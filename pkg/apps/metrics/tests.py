import csv
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from numpy.lib.stride_tricks import sliding_window_view

from apps.core.exceptions import InvalidSizeError, NonFiniteError, ScoreError, ShapeError
from apps.datasets.imageio import write_png
from apps.datasets.records import group_by_resolution
from apps.datasets.scanning import scan_dataset
from apps.datasets.toy import make_toy_dataset, read_manifest
from apps.metrics.audit import AUDIT_HEADER, AuditReport, audit_arrays, audit_images, row_identity_holds
from apps.metrics.classifier import (
    ClassifierConfig, ToyClassifier, accuracy, load_classifier, probability_source, save_classifier,
    train_classifier,
)
from apps.metrics.evaluation import score_corpus, score_generator
from apps.metrics.inception import inception_score
from apps.metrics.quality import SSIM_K1, SSIM_K2, diff_map, gaussian_window, luma, mse, psnr, psnr_from_mse, ssim
from apps.metrics.resampling import AREA, CUBIC, LINEAR, METHODS, NEAREST, cubic_kernel, downsample
from apps.networks.builders import build_networks
from apps.networks.config import DiscriminatorConfig, GeneratorConfig


def brute_force_ssim(a, b):
    """Windowed SSIM with an explicit 2-D window over edge-replicated borders."""
    a, b = luma(a), luma(b)
    window = np.outer(gaussian_window(), gaussian_window())
    pad = window.shape[0] // 2
    wa = sliding_window_view(np.pad(a, pad, mode='edge'), window.shape)
    wb = sliding_window_view(np.pad(b, pad, mode='edge'), window.shape)
    mu_a = np.einsum('ijkl,kl->ij', wa, window)
    mu_b = np.einsum('ijkl,kl->ij', wb, window)
    var_a = np.einsum('ijkl,kl->ij', (wa - mu_a[..., None, None]) ** 2, window)
    var_b = np.einsum('ijkl,kl->ij', (wb - mu_b[..., None, None]) ** 2, window)
    cov = np.einsum('ijkl,kl->ij', (wa - mu_a[..., None, None]) * (wb - mu_b[..., None, None]), window)
    c1, c2 = (SSIM_K1 * 255) ** 2, (SSIM_K2 * 255) ** 2
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2))
    return ssim_map.mean()


class ResamplingTest(SimpleTestCase):

    def setUp(self):
        # columns hold 4 * x, rows are identical
        self.ramp = np.tile(4.0 * np.arange(32), (4, 1))

    def test_area_of_two_rows(self):
        self.assertEqual(downsample(np.array([[0.0, 0.0], [4.0, 4.0]]), 1, 1, AREA)[0, 0], 2.0)

    def test_ramp_halving(self):
        d = np.arange(16)
        expected = {AREA: 8 * d + 2, LINEAR: 8 * d + 2, NEAREST: 8 * d + 4}
        for method, values in expected.items():
            out = downsample(self.ramp, 2, 16, method)
            np.testing.assert_allclose(out, np.tile(values, (2, 1)), atol=1e-9, err_msg=method)

    def test_cubic_reproduces_ramp_away_from_edges(self):
        out = downsample(self.ramp, 2, 16, CUBIC)
        np.testing.assert_allclose(out[:, 1:15], np.tile(8 * np.arange(1, 15) + 2, (2, 1)), atol=1e-9)

    def test_identity_size(self):
        image = np.random.default_rng(0).uniform(0, 255, size=(9, 7, 3))
        for method in METHODS:
            np.testing.assert_allclose(downsample(image, 9, 7, method), image, atol=1e-9, err_msg=method)

    def test_output_is_clamped(self):
        checker = np.indices((16, 16)).sum(axis=0) % 2 * 255.0
        out = downsample(checker, 5, 5, CUBIC)
        self.assertGreaterEqual(out.min(), 0.0)
        self.assertLessEqual(out.max(), 255.0)

    def test_cubic_kernel_is_interpolating(self):
        np.testing.assert_allclose(cubic_kernel(np.array([0.0, 1.0, 2.0, 2.5])), [1.0, 0.0, 0.0, 0.0])

    def test_upsampling_rejected(self):
        with self.assertRaises(InvalidSizeError):
            downsample(np.zeros((4, 4)), 8, 4, LINEAR)

    def test_unknown_method_rejected(self):
        with self.assertRaises(ValueError):
            downsample(np.zeros((4, 4)), 2, 2, 'lanczos')


class QualityTest(SimpleTestCase):

    def setUp(self):
        self.rng = np.random.default_rng(42)

    def test_psnr_values(self):
        for error, expected in [(18.6, 35.4), (166.3, 25.9), (114.1, 27.6), (316.3, 23.1)]:
            self.assertAlmostEqual(psnr_from_mse(error), expected, delta=0.05)

    def test_off_by_one(self):
        a = self.rng.integers(0, 255, size=(16, 16, 3)).astype(np.float64)
        self.assertEqual(mse(a, a + 1), 1.0)
        self.assertAlmostEqual(psnr(a, a + 1), 48.13, places=2)

    def test_identical_images(self):
        a = self.rng.uniform(0, 255, size=(20, 20))
        self.assertEqual(psnr(a, a), math.inf)
        self.assertAlmostEqual(ssim(a, a)[0], 1.0, places=12)

    def test_ssim_matches_brute_force(self):
        for _ in range(10):
            a = self.rng.integers(0, 256, size=(64, 64, 3))
            b = np.clip(a + self.rng.normal(0, 20, size=a.shape), 0, 255)
            self.assertAlmostEqual(ssim(a, b)[0], brute_force_ssim(a, b), delta=1e-6)

    def test_ssim_is_symmetric(self):
        a = self.rng.uniform(0, 255, size=(32, 24))
        b = self.rng.uniform(0, 255, size=(32, 24))
        self.assertAlmostEqual(ssim(a, b)[0], ssim(b, a)[0], places=12)

    def test_ssim_needs_a_full_window(self):
        with self.assertRaises(ShapeError):
            ssim(np.zeros((10, 40)), np.zeros((10, 40)))

    def test_shape_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            mse(np.zeros((4, 4)), np.zeros((4, 5)))

    def test_diff_map_localizes_change(self):
        a = self.rng.uniform(0, 255, size=(64, 64))
        b = a.copy()
        b[40:50, 40:50] = 255 - b[40:50, 40:50]
        diff = diff_map(a, b)
        self.assertEqual(diff.dtype, np.uint8)
        self.assertTrue(np.all(diff[:30, :30] == 0))
        self.assertGreater(diff[40:50, 40:50].mean(), 100)


class InceptionScoreTest(SimpleTestCase):

    def test_uniform_predictions_score_one(self):
        result = inception_score(np.full((100, 10), 0.1), splits=10)
        self.assertAlmostEqual(result.mean, 1.0, places=9)
        self.assertAlmostEqual(result.sd, 0.0, places=9)

    def test_balanced_one_hot_scores_class_count(self):
        probs = np.eye(10)[np.arange(100) % 10]
        result = inception_score(probs, splits=10)
        self.assertAlmostEqual(result.mean, 10.0, places=9)
        self.assertEqual((result.splits, result.samples), (10, 100))

    def test_bounds(self):
        probs = np.random.default_rng(0).dirichlet(np.ones(6), size=200)
        result = inception_score(probs, splits=5)
        self.assertGreaterEqual(result.mean, 1.0)
        self.assertLessEqual(result.mean, 6.0)

    def test_class_order_does_not_matter(self):
        probs = np.random.default_rng(1).dirichlet(np.ones(5), size=60)
        permuted = probs[:, [3, 0, 4, 1, 2]]
        self.assertAlmostEqual(inception_score(probs, 3).mean, inception_score(permuted, 3).mean, places=9)

    def test_invalid_rows_rejected(self):
        with self.assertRaises(ScoreError):
            inception_score(np.full((10, 2), 0.4), splits=1)
        with self.assertRaises(NonFiniteError):
            inception_score(np.array([[np.nan, 1.0]]), splits=1)
        with self.assertRaises(ScoreError):
            inception_score(np.full((3, 2), 0.5), splits=10)

    def test_str(self):
        self.assertEqual(str(inception_score(np.full((4, 2), 0.5), splits=2)), '1.0000 ± 0.0000')


class AuditTest(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        rng = np.random.default_rng(9)
        self.source = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
        self.reference = np.rint(downsample(self.source, 24, 32, AREA)).astype(np.uint8)

    def tearDown(self):
        self._tmp.cleanup()

    def test_reference_method_is_exact(self):
        results = {method: error for method, _, error, *_ in audit_arrays(self.reference, self.source)}
        self.assertEqual(results[AREA], 0.0)
        self.assertGreater(results[NEAREST], 0.0)

    def test_csv_and_images(self):
        reference = write_png(self.reference, self.tmp / 'reference.png')
        source = write_png(self.source, self.tmp / 'source.png')
        reports = audit_images(reference, source, self.tmp / 'audit')
        self.assertEqual([r.method for r in reports], list(METHODS))
        with (self.tmp / 'audit' / 'audit.csv').open(newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], AUDIT_HEADER)
        for row in rows[1:]:
            method = row[0]
            self.assertTrue(row_identity_holds(row), msg=row)
            self.assertTrue((self.tmp / 'audit' / f'diff_{method}.png').exists())
            self.assertTrue((self.tmp / 'audit' / f'resized_{method}.png').exists())

    def test_smaller_source_rejected(self):
        with self.assertRaises(ShapeError):
            audit_arrays(self.source, self.reference)

    def test_report_row(self):
        report = AuditReport('area', 0.0, math.inf, 1.0)
        self.assertEqual(report.row(), ['area', '0.0', 'inf', '1.000000'])
        self.assertTrue(report.identity_holds())
        self.assertFalse(AuditReport('cubic', 18.6, 30.0, 0.9).identity_holds())

    def test_small_error_survives_the_written_row(self):
        error = 0.003312345
        report = AuditReport('linear', error, psnr_from_mse(error), 0.99)
        row = report.row()
        self.assertEqual(float(row[1]), error)
        self.assertTrue(row_identity_holds(row))
        self.assertFalse(row_identity_holds(['linear', f'{error:.4f}', row[2], row[3]]))


class ClassifierTest(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls._tmp = tempfile.TemporaryDirectory()
        cls.tmp = Path(cls._tmp.name)
        directory = make_toy_dataset(cls.tmp / 'toy', 48, size_range=(16, 24), seed=0)
        records, _ = scan_dataset(directory)
        cls.groups = group_by_resolution(records, max_size=24)
        cls.labels = {name: row['label'] for name, row in read_manifest(directory).items()}

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()
        super().tearDownClass()

    def test_learns_colour_families(self):
        classifier, history = train_classifier(self.groups, self.labels, epochs=20, batch_size=8, seed=0)
        self.assertLess(np.mean(history[-6:]), history[0])
        self.assertGreater(accuracy(classifier, self.groups, self.labels, batch_size=8), 0.35)

    def test_any_input_size(self):
        classifier = ToyClassifier(ClassifierConfig(), np.random.default_rng(0))
        for size in [(16, 16), (23, 57)]:
            probs = classifier.predict_proba(np.zeros((2, 3) + size, dtype=np.float32))
            self.assertEqual(probs.shape, (2, 4))
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-5)

    def test_save_and_load(self):
        classifier = ToyClassifier(ClassifierConfig(channels=(4, 8)), np.random.default_rng(3))
        path = save_classifier(self.tmp / 'classifier.json', classifier, epochs=0)
        restored = load_classifier(path)
        images = np.random.default_rng(4).uniform(-1, 1, size=(2, 3, 16, 20)).astype(np.float32)
        np.testing.assert_array_equal(classifier.predict_proba(images), restored.predict_proba(images))

    def test_probability_source_accepts_single_images(self):
        classifier = ToyClassifier(ClassifierConfig(), np.random.default_rng(0))
        probs = probability_source([np.zeros((3, 16, 16)), np.zeros((2, 3, 20, 16))], classifier)
        self.assertEqual(probs.shape, (3, 4))

    def test_scores_are_within_class_bounds(self):
        classifier = ToyClassifier(ClassifierConfig(), np.random.default_rng(0))
        generator, _ = build_networks(
            0, GeneratorConfig(z_dim=8, stage_channels=(4, 4, 4, 4, 4)), DiscriminatorConfig(conv_channels=(4, 4, 4, 4)),
        )
        generated = score_generator(generator, classifier, count=20, sizes=[(16, 16), (16, 24)], splits=2, batch_size=8)
        real = score_corpus(self.groups, classifier, splits=4, batch_size=8)
        self.assertEqual(generated.samples, 20)
        self.assertEqual(real.samples, 48)
        for result in (generated, real):
            self.assertGreaterEqual(result.mean, 1.0 - 1e-9)
            self.assertLessEqual(result.mean, 4.0)

    def test_uniform_classifier_scores_one(self):
        classifier = ToyClassifier(ClassifierConfig(), np.random.default_rng(0))
        classifier.head.weight.value[...] = 0.0
        classifier.head.bias.value[...] = 0.0
        generator, _ = build_networks(
            0, GeneratorConfig(z_dim=8, stage_channels=(4, 4, 4, 4, 4)), DiscriminatorConfig(conv_channels=(4, 4, 4, 4)),
        )
        generated = score_generator(generator, classifier, count=12, sizes=[(16, 16)], splits=3, batch_size=4)
        real = score_corpus(self.groups, classifier, splits=4, batch_size=8)
        for result in (generated, real):
            self.assertAlmostEqual(result.mean, 1.0, delta=1e-6)
            self.assertAlmostEqual(result.sd, 0.0, delta=1e-6)
