import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.gradcheck import grad_check
from apps.core.exceptions import InvalidSizeError, ShapeError
from apps.resize.interpolation import (
    BILINEAR, NEAREST, ResizeSpec, bilinear_cell_coefficients, bilinear_matrix, resize, resize_backward,
    resize_bilinear, resize_nearest,
)
from apps.resize.layers import DynamicResize
from apps.resize.schedule import compute_schedule, round_half_up


def row(values):
    return np.array(values, dtype=np.float64).reshape(1, 1, 1, -1)


class BilinearResizeTest(SimpleTestCase):

    def test_doubling_a_two_pixel_row(self):
        out = resize_bilinear(row([0.0, 4.0]), 1, 4)
        np.testing.assert_allclose(out[0, 0, 0], [0.0, 1.0, 3.0, 4.0])

    def test_identity_size_is_exact(self):
        x = np.random.default_rng(0).standard_normal((2, 3, 7, 5))
        np.testing.assert_array_equal(resize_bilinear(x, 7, 5), x)

    def test_constant_image_stays_constant(self):
        x = np.full((1, 2, 9, 13), 0.37, dtype=np.float32)
        for size in [(3, 4), (9, 13), (31, 17)]:
            out = resize_bilinear(x, *size)
            self.assertEqual(out.shape[2:], size)
            self.assertTrue(np.all(out == np.float32(0.37)))

    def test_matches_matrix_form(self):
        x = np.random.default_rng(1).standard_normal((1, 1, 6, 4))
        expected = bilinear_matrix(6, 11) @ x[0, 0] @ bilinear_matrix(4, 3).T
        np.testing.assert_allclose(resize_bilinear(x, 11, 3)[0, 0], expected, rtol=1e-12, atol=1e-12)

    def test_cell_coefficients_reproduce_corners(self):
        a0, a1, a2, a3 = bilinear_cell_coefficients(1.0, 2.0, 3.0, 7.0)
        surface = lambda x, y: a0 + a1 * x + a2 * y + a3 * x * y  # noqa: E731
        self.assertEqual([surface(0, 0), surface(1, 0), surface(0, 1), surface(1, 1)], [1.0, 2.0, 3.0, 7.0])

    def test_rejects_non_positive_target(self):
        with self.assertRaises(InvalidSizeError):
            resize_bilinear(np.zeros((1, 1, 2, 2)), 0, 3)

    def test_rejects_non_image_input(self):
        with self.assertRaises(ShapeError):
            resize_bilinear(np.zeros((2, 2)), 3, 3)


class NearestResizeTest(SimpleTestCase):

    def test_doubling_repeats_pixels(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
        expected = [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]
        np.testing.assert_array_equal(resize_nearest(x, 4, 4)[0, 0], expected)

    def test_identity_size_is_exact(self):
        x = np.random.default_rng(2).standard_normal((1, 2, 5, 9))
        np.testing.assert_array_equal(resize_nearest(x, 5, 9), x)

    def test_backward_counts_sources(self):
        spec = ResizeSpec(2, 2, 4, 6, NEAREST)
        grad = resize_backward(np.ones((1, 1, 4, 6)), spec)
        np.testing.assert_array_equal(grad[0, 0], [[6.0, 6.0], [6.0, 6.0]])


class AdjointTest(SimpleTestCase):
    """<resize(x), g> == <x, backward(g)> for random sizes."""

    def test_inner_product_identity(self):
        rng = np.random.default_rng(7)
        for mode in (BILINEAR, NEAREST):
            for _ in range(50):
                in_h, in_w, out_h, out_w = rng.integers(1, 64, size=4)
                spec = ResizeSpec(int(in_h), int(in_w), int(out_h), int(out_w), mode)
                x = rng.standard_normal((1, 2, in_h, in_w))
                g = rng.standard_normal((1, 2, out_h, out_w))
                left = np.sum(resize(x, out_h, out_w, mode) * g)
                right = np.sum(x * resize_backward(g, spec))
                self.assertLessEqual(abs(left - right), 1e-9 * max(1.0, abs(left)))

    def test_bilinear_backward_matches_central_differences(self):
        rng = np.random.default_rng(3)
        spec = ResizeSpec(5, 4, 9, 3)
        x = rng.standard_normal((1, 1, 5, 4))
        error = grad_check(lambda v: resize_bilinear(v, 9, 3), lambda g: resize_backward(g, spec), x, rng=rng)
        self.assertLess(error, 1e-8)

    def test_gradient_shape_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            resize_backward(np.ones((1, 1, 3, 3)), ResizeSpec(2, 2, 4, 4))


class DynamicResizeTest(SimpleTestCase):

    def test_target_is_taken_at_call_time(self):
        layer = DynamicResize()
        x = np.ones((1, 1, 4, 4))
        self.assertEqual(layer.set_target(5, 7)(x).shape, (1, 1, 5, 7))
        self.assertEqual(layer.set_target(16, 3)(x).shape, (1, 1, 16, 3))
        self.assertEqual(layer.backward(np.ones((1, 1, 16, 3))).shape, (1, 1, 4, 4))

    def test_forward_without_target_fails(self):
        with self.assertRaises(RuntimeError):
            DynamicResize().forward(np.ones((1, 1, 2, 2)))

    def test_unknown_mode_rejected(self):
        with self.assertRaises(ValueError):
            DynamicResize('bicubic')

    def test_has_no_parameters(self):
        self.assertEqual(DynamicResize().parameters(), [])


class ScheduleTest(SimpleTestCase):

    def test_square_powers_of_two(self):
        schedule = compute_schedule((4, 4), (128, 128), stages=5)
        self.assertEqual(list(schedule), [(8, 8), (16, 16), (32, 32), (64, 64), (128, 128)])

    def test_non_square_target(self):
        schedule = compute_schedule((4, 4), (96, 128), stages=5)
        self.assertEqual([h for h, _ in schedule], [8, 14, 27, 51, 96])
        self.assertEqual([w for _, w in schedule], [8, 16, 32, 64, 128])

    def test_target_equal_to_base(self):
        self.assertEqual(list(compute_schedule((4, 4), (4, 4), stages=5)), [(4, 4)] * 5)

    def test_target_below_base_rejected(self):
        with self.assertRaises(InvalidSizeError):
            compute_schedule((4, 4), (3, 40))

    def test_round_half_up(self):
        self.assertEqual([round_half_up(v) for v in (0.5, 1.5, 2.5, 2.49)], [1, 2, 3, 2])
