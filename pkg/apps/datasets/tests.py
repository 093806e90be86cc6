import csv
import tempfile
from collections import Counter
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from PIL import ImageFile

from apps.core.exceptions import DataError, EpochEnd
from apps.datasets.batching import BatchLoader, BatchPlan
from apps.datasets.imageio import (
    contact_sheet, load_for_training, read_dimensions, read_image, to_network, to_uint8, write_png,
)
from apps.datasets.records import (
    ImageRecord, ResolutionCensus, cap_resize, group_by_resolution, training_samples,
)
from apps.datasets.scanning import SUMMARY_HEADER, scan_dataset, write_census_csv
from apps.datasets.toy import COLOUR_FAMILIES, make_toy_dataset, read_manifest, size_candidates


def records_for(sizes):
    return [ImageRecord(Path(f'img_{i:04d}.png'), w, h) for i, (w, h) in enumerate(sizes)]


class TempDirMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class CapResizeTest(SimpleTestCase):

    def test_long_side_is_capped(self):
        self.assertEqual(cap_resize(256, 128, 128), (128, 64))

    def test_small_images_are_unchanged(self):
        self.assertEqual(cap_resize(128, 64, 128), (128, 64))
        self.assertEqual(cap_resize(30, 50, 128), (30, 50))

    def test_portrait(self):
        self.assertEqual(cap_resize(300, 400, 128), (96, 128))

    def test_short_side_never_reaches_zero(self):
        self.assertEqual(cap_resize(5000, 2, 128), (128, 1))

    def test_idempotent(self):
        self.assertEqual(cap_resize(*cap_resize(1000, 333, 128), 128), cap_resize(1000, 333, 128))


class ResolutionCensusTest(SimpleTestCase):
    """Published dataset rows must satisfy the census identities."""

    PUBLISHED = {
        'imagenet': (773565, 71990, 10.75, 43612, 27796, 582),
        'celeba': (202599, 62091, 3.26, 14574, 47035, 482),
        'gwern': (302623, 648, 467.01, 362, 271, 15),
        'morph': (55134, 2, 27567, 0, 2, 0),
        'isic': (25330, 29, 873.48, 2, 26, 1),
    }

    def test_published_rows_are_consistent(self):
        for name, (total, distinct, mean, landscape, portrait, square) in self.PUBLISHED.items():
            census = ResolutionCensus(total, distinct, mean, 0.0, landscape, portrait, square)
            self.assertEqual(census.identity_errors(tolerance=0.05), [], name)

    def test_inconsistent_row_is_reported(self):
        census = ResolutionCensus(100, 10, 12.0, 0.0, 3, 3, 3)
        self.assertEqual(len(census.identity_errors()), 2)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        sizes = [tuple(int(v) for v in rng.integers(20, 40, size=2)) for _ in range(500)]
        census = ResolutionCensus.from_records(records_for(sizes))

        counts = {}
        for size in sizes:
            counts[size] = counts.get(size, 0) + 1
        values = list(counts.values())
        mean = sum(values) / len(values)
        sd = (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5

        self.assertEqual(census.total_images, 500)
        self.assertEqual(census.distinct_resolutions, len(counts))
        self.assertAlmostEqual(census.mean_per_resolution, mean, places=9)
        self.assertAlmostEqual(census.sd_per_resolution, sd, places=9)
        self.assertEqual(census.landscape_count, sum(1 for w, h in counts if w > h))
        self.assertEqual(census.portrait_count, sum(1 for w, h in counts if h > w))
        self.assertEqual(census.square_count, sum(1 for w, h in counts if w == h))
        self.assertEqual(census.identity_errors(), [])

    def test_empty_corpus_rejected(self):
        with self.assertRaises(DataError):
            ResolutionCensus.from_counts({})

    def test_record_rejects_empty_dimensions(self):
        with self.assertRaises(DataError):
            ImageRecord(Path('x.png'), 0, 10)


class GroupingTest(SimpleTestCase):

    def test_groups_by_capped_resolution(self):
        groups = group_by_resolution(records_for([(256, 128), (128, 64), (64, 64), (300, 400)]), max_size=128)
        self.assertEqual([g.group_id for g in groups], ['128x64', '64x64', '96x128'])
        self.assertEqual(len(groups[0]), 2)
        self.assertEqual(groups[0].size, (64, 128))

    def test_member_order_is_kept(self):
        records = records_for([(32, 32)] * 3)
        self.assertEqual(group_by_resolution(records, 128)[0].records, records)

    def test_training_samples(self):
        groups = group_by_resolution(records_for([(40, 30), (40, 30), (30, 40)]), 128)
        self.assertEqual(training_samples(groups), {(30, 40): 2, (40, 30): 1})

    def test_batch_count_rounds_up(self):
        group = group_by_resolution(records_for([(16, 16)] * 5), 128)[0]
        self.assertEqual(group.batch_count(2), 3)

    def test_empty_records_rejected(self):
        with self.assertRaises(DataError):
            group_by_resolution([])


class BatchPlanTest(SimpleTestCase):

    def test_round_robin_over_groups(self):
        groups = group_by_resolution(
            records_for([(16, 16)] * 5 + [(24, 16)] * 2 + [(16, 24)]), 128,
        )
        plan = BatchPlan.build(groups, 2)
        self.assertEqual(plan.batches, ((0, 0), (1, 0), (2, 0), (0, 2), (0, 4)))
        self.assertEqual(len(plan), sum(g.batch_count(2) for g in groups))

    def test_invalid_batch_size_rejected(self):
        with self.assertRaises(DataError):
            BatchPlan.build(group_by_resolution(records_for([(16, 16)]), 128), 0)


class ImageIOTest(TempDirMixin, SimpleTestCase):

    def test_png_round_trip(self):
        pixels = np.random.default_rng(0).integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
        path = write_png(pixels, self.tmp / 'nested' / 'a.png')
        np.testing.assert_array_equal(read_image(path), pixels)
        self.assertEqual(read_dimensions(path), (7, 5))

    def test_dimensions_come_from_the_header(self):
        path = write_png(np.zeros((9, 11, 3), np.uint8), self.tmp / 'a.png')
        with mock.patch.object(ImageFile.ImageFile, 'load', side_effect=AssertionError('pixels decoded')):
            self.assertEqual(read_dimensions(path), (11, 9))

    def test_truncated_png_is_rejected(self):
        pixels = np.random.default_rng(1).integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
        path = write_png(pixels, self.tmp / 'a.png')
        path.write_bytes(path.read_bytes()[:-40])
        with self.assertRaises((OSError, SyntaxError)):
            read_dimensions(path)

    def test_network_range(self):
        pixels = np.array([[[0, 255, 128]]], dtype=np.uint8)
        tensor = to_network(pixels)
        self.assertEqual(tensor.shape, (3, 1, 1))
        self.assertEqual((tensor.min(), tensor.max()), (-1.0, 1.0))
        np.testing.assert_array_equal(to_uint8(tensor), pixels)

    def test_load_for_training_resizes(self):
        path = write_png(np.full((20, 30, 3), 200, dtype=np.uint8), self.tmp / 'b.png')
        tensor = load_for_training(path, 10, 15)
        self.assertEqual(tensor.shape, (3, 10, 15))
        np.testing.assert_allclose(tensor, 200 / 127.5 - 1, rtol=1e-6)

    def test_contact_sheet_layout(self):
        sheet = contact_sheet([np.full((4, 3, 3), 255, np.uint8), np.full((6, 2, 3), 255, np.uint8)], padding=1)
        self.assertEqual(sheet.shape, (8, 8, 3))
        self.assertEqual(sheet[1, 1, 0], 255)
        self.assertEqual(sheet[0, 0, 0], 0)


class ToyDatasetTest(TempDirMixin, SimpleTestCase):

    def test_same_seed_same_bytes(self):
        first = make_toy_dataset(self.tmp / 'a', 6, size_range=(16, 32), seed=3)
        second = make_toy_dataset(self.tmp / 'b', 6, size_range=(16, 32), seed=3)
        for path in sorted(first.iterdir()):
            self.assertEqual(path.read_bytes(), (second / path.name).read_bytes(), path.name)

    def test_census_matches_manifest(self):
        directory = make_toy_dataset(self.tmp / 'toy', 20, size_range=(16, 32), seed=1)
        manifest = read_manifest(directory)
        records, census = scan_dataset(directory, workers=2)
        self.assertEqual(len(records), 20)
        expected = Counter((row['width'], row['height']) for row in manifest.values())
        self.assertEqual(census.counts, dict(sorted(expected.items())))
        self.assertTrue(all(0 <= row['label'] < len(COLOUR_FAMILIES) for row in manifest.values()))

    def test_sizes_come_from_candidates(self):
        directory = make_toy_dataset(self.tmp / 'toy', 10, size_range=(16, 40), seed=2)
        candidates = set(size_candidates((16, 40)))
        for row in read_manifest(directory).values():
            self.assertIn((row['width'], row['height']), candidates)

    def test_zero_images_rejected(self):
        with self.assertRaises(DataError):
            make_toy_dataset(self.tmp, 0)

    def test_missing_manifest(self):
        with self.assertRaises(DataError):
            read_manifest(self.tmp)


class ScanningTest(TempDirMixin, SimpleTestCase):

    def test_undecodable_files_are_skipped(self):
        write_png(np.zeros((4, 6, 3), np.uint8), self.tmp / 'good.png')
        (self.tmp / 'bad.png').write_bytes(b'not an image')
        (self.tmp / 'notes.txt').write_text('ignored')
        with self.assertLogs('apps.datasets.scanning', 'WARNING'):
            records, census = scan_dataset(self.tmp)
        self.assertEqual([r.path.name for r in records], ['good.png'])
        self.assertEqual(census.counts, {(6, 4): 1})

    def test_missing_directory(self):
        with self.assertRaises(DataError):
            scan_dataset(self.tmp / 'nope')

    def test_directory_without_images(self):
        with self.assertRaises(DataError):
            scan_dataset(self.tmp)

    def test_census_csv(self):
        census = ResolutionCensus.from_counts({(32, 16): 3, (16, 16): 1})
        path = write_census_csv(census, self.tmp / 'out' / 'census.csv')
        with path.open(newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ['width', 'height', 'count'])
        self.assertEqual(rows[1:3], [['16', '16', '1'], ['32', '16', '3']])
        self.assertEqual(rows[3], SUMMARY_HEADER)
        self.assertEqual(rows[4][:2], ['4', '2'])


class BatchLoaderTest(TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        directory = make_toy_dataset(self.tmp / 'toy', 12, size_range=(16, 24), seed=5)
        records, _ = scan_dataset(directory)
        self.groups = group_by_resolution(records, max_size=20)

    def test_batches_are_single_resolution(self):
        loader = BatchLoader(self.groups, 4)
        served = 0
        for position, (images, group_id) in enumerate(loader):
            group, members = loader.members(position)
            self.assertEqual(group_id, group.group_id)
            self.assertEqual(images.shape, (len(members), 3, group.height, group.width))
            self.assertEqual(images.dtype, np.float32)
            self.assertTrue(np.all(np.abs(images) <= 1.0))
            served += len(members)
        self.assertEqual(served, 12)

    def test_epoch_end(self):
        loader = BatchLoader(self.groups, 64)
        for _ in range(len(loader)):
            loader.next_batch()
        with self.assertRaises(EpochEnd):
            loader.next_batch()
        loader.reset()
        loader.next_batch()

    def test_prefetch_serves_the_same_batches(self):
        plain = [images for images, _ in BatchLoader(self.groups, 3)]
        loader = BatchLoader(self.groups, 3, prefetch=True)
        try:
            prefetched = [images for images, _ in loader]
        finally:
            loader.close()
        self.assertEqual(len(plain), len(prefetched))
        for a, b in zip(plain, prefetched):
            np.testing.assert_array_equal(a, b)

    def test_seek(self):
        loader = BatchLoader(self.groups, 3)
        expected = loader.load(len(loader) - 1)[0]
        loader.seek(len(loader) - 1)
        np.testing.assert_array_equal(loader.next_batch()[0], expected)
        with self.assertRaises(DataError):
            loader.seek(len(loader) + 1)
