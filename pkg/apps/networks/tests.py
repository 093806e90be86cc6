import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.layers import count_parameters
from apps.autodiff.tensor import FLOAT64
from apps.core.exceptions import InvalidSizeError, NonFiniteError, ShapeError
from apps.networks.builders import build_networks, describe, parameter_shapes
from apps.networks.config import DiscriminatorConfig, GeneratorConfig
from apps.networks.verification import end_to_end_case, gradcheck_suite

SMALL_GENERATOR = GeneratorConfig(z_dim=8, stage_channels=(8, 8, 4, 4, 4))
SMALL_DISCRIMINATOR = DiscriminatorConfig(conv_channels=(4, 4, 4, 4))


def small_networks(seed=0, dtype=None):
    return build_networks(seed, SMALL_GENERATOR, SMALL_DISCRIMINATOR, dtype)


class GeneratorTest(SimpleTestCase):

    def setUp(self):
        self.generator, _ = small_networks()
        self.z = np.random.default_rng(1).standard_normal((2, 8))

    def test_output_matches_requested_sizes(self):
        for height in (84, 85, 89, 95, 96, 111, 128):
            out = self.generator.generate(self.z, (height, 128))
            self.assertEqual(out.shape, (2, 3, height, 128))

    def test_output_is_in_tanh_range(self):
        out = self.generator.generate(self.z, (17, 23))
        self.assertTrue(np.all(np.abs(out) <= 1.0))

    def test_base_size_is_accepted(self):
        self.assertEqual(self.generator.generate(self.z, (4, 4)).shape, (2, 3, 4, 4))

    def test_below_base_rejected(self):
        with self.assertRaises(InvalidSizeError):
            self.generator.generate(self.z, (3, 64))

    def test_wrong_latent_width_rejected(self):
        with self.assertRaises(ShapeError):
            self.generator.generate(np.zeros((2, 7)), (16, 16))

    def test_non_finite_latent_rejected(self):
        z = self.z.copy()
        z[0, 0] = np.nan
        with self.assertRaises(NonFiniteError):
            self.generator.generate(z, (16, 16))

    def test_above_cap_warns(self):
        with self.assertLogs('apps.networks.generator', 'WARNING') as logs:
            self.generator.generate(self.z[:1], (16, 140))
        self.assertIn('never trained', logs.output[0])

    def test_single_latent_vector_is_batched(self):
        self.assertEqual(self.generator.generate(self.z[0], (8, 8)).shape, (1, 3, 8, 8))

    def test_weights_do_not_depend_on_size(self):
        before = parameter_shapes(self.generator)
        count = count_parameters(self.generator)
        for size in [(16, 16), (40, 97), (128, 5)]:
            self.generator.generate(self.z, size)
        self.assertEqual(parameter_shapes(self.generator), before)
        self.assertEqual(count_parameters(self.generator), count)

    def test_same_seed_same_output(self):
        other, _ = small_networks()
        np.testing.assert_array_equal(
            self.generator.generate(self.z, (20, 30)), other.generate(self.z, (20, 30)),
        )

    def test_backward_returns_latent_gradient(self):
        out = self.generator.forward(self.z, (12, 18))
        grad = self.generator.backward(np.ones_like(out))
        self.assertEqual(grad.shape, (2, 8))
        self.assertTrue(any(np.any(p.grad != 0) for p in self.generator.parameters()))

    def test_parameter_names_are_unique(self):
        names = [parameter.name for parameter in self.generator.parameters()]
        self.assertEqual(len(names), len(set(names)))
        self.assertTrue(all(name.startswith('generator.') for name in names))


class DiscriminatorTest(SimpleTestCase):

    def setUp(self):
        _, self.discriminator = small_networks()

    def test_probability_per_image(self):
        for size in [(16, 16), (96, 128), (33, 17)]:
            probs = self.discriminator.forward(np.zeros((3, 3) + size, dtype=np.float32))
            self.assertEqual(probs.shape, (3,))
            self.assertTrue(np.all((probs > 0) & (probs < 1)))

    def test_too_small_input_names_the_minimum(self):
        with self.assertRaises(ShapeError) as ctx:
            self.discriminator.forward(np.zeros((1, 3, 15, 128)))
        self.assertIn('minimum 16', str(ctx.exception))

    def test_wrong_channel_count_rejected(self):
        with self.assertRaises(ShapeError):
            self.discriminator.forward(np.zeros((1, 1, 32, 32)))

    def test_input_gradient_has_input_shape(self):
        images = np.random.default_rng(0).uniform(-1, 1, size=(2, 3, 21, 30)).astype(np.float32)
        self.discriminator.forward(images)
        self.assertEqual(self.discriminator.backward(np.ones(2, dtype=np.float32)).shape, images.shape)


class ConfigTest(SimpleTestCase):

    def test_round_trip_through_dict(self):
        self.assertEqual(GeneratorConfig.from_dict(SMALL_GENERATOR.to_dict()), SMALL_GENERATOR)
        self.assertEqual(DiscriminatorConfig.from_dict(SMALL_DISCRIMINATOR.to_dict()), SMALL_DISCRIMINATOR)

    def test_channel_count_must_match_stages(self):
        with self.assertRaises(ValueError):
            GeneratorConfig(stage_channels=(8, 8, 8))

    def test_unknown_resize_mode_rejected(self):
        with self.assertRaises(ValueError):
            GeneratorConfig(resize_mode='area')

    def test_describe(self):
        generator, _ = small_networks()
        self.assertTrue(describe(generator).startswith('Generator: '))


class GradientVerificationTest(SimpleTestCase):

    def test_suite_passes(self):
        rows = gradcheck_suite(threshold=1e-4, cases=3, seed=0, end_to_end_cases=1)
        self.assertEqual(rows[-1].layer, 'discriminator(generator(z, s))')
        for row in rows:
            self.assertTrue(row.passed, f'{row.layer}: {row.max_error:.3e}')

    def test_suite_meets_acceptance_bar(self):
        rows = gradcheck_suite(threshold=1e-5, cases=20, seed=0, end_to_end_cases=0)
        self.assertEqual(len(rows), 11)
        for row in rows:
            self.assertEqual(row.cases, 20)
            self.assertTrue(row.passed, f'{row.layer}: {row.max_error:.3e}')

    def test_end_to_end_at_fixed_size(self):
        self.assertLess(end_to_end_case(np.random.default_rng(4), target=(16, 19)), 1e-4)

    def test_float64_networks(self):
        generator, _ = small_networks(dtype=FLOAT64)
        self.assertEqual(generator.dtype, FLOAT64)
