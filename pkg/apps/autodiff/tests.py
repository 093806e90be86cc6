import math

import numpy as np
from django.test import SimpleTestCase

from apps.autodiff import functional as F
from apps.autodiff.gradcheck import check_layer, grad_check, relative_error
from apps.autodiff.layers import Conv2d, Dense, GlobalAveragePool, Parameter, Sequential, count_parameters
from apps.autodiff.optim import Adam, adam_step
from apps.autodiff.tensor import FLOAT32, FLOAT64, check_finite, get_default_dtype, precision
from apps.core.exceptions import NonFiniteError, ShapeError


class ConvolutionTest(SimpleTestCase):
    """Same-padded convolution forward pass."""

    def test_identity_kernel_returns_input(self):
        x = np.arange(9, dtype=np.float64).reshape(1, 1, 3, 3)
        out, _ = F.conv2d_same_forward(x, np.ones((1, 1, 1, 1)), np.zeros(1))
        np.testing.assert_array_equal(out, x)

    def test_all_ones_kernel_sums_zero_padded_window(self):
        x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        out, _ = F.conv2d_same_forward(x, np.ones((1, 1, 3, 3)), np.zeros(1))
        np.testing.assert_array_equal(out[0, 0], [[10.0, 10.0], [10.0, 10.0]])

    def test_stride_two_rounds_up(self):
        out, _ = F.conv2d_same_forward(np.zeros((1, 1, 5, 5)), np.ones((1, 1, 3, 3)), np.zeros(1), stride=2)
        self.assertEqual(out.shape, (1, 1, 3, 3))

    def test_even_kernel_rejected(self):
        with self.assertRaises(ShapeError):
            F.conv2d_same_forward(np.zeros((1, 1, 4, 4)), np.ones((1, 1, 2, 2)), np.zeros(1))

    def test_channel_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            F.conv2d_same_forward(np.zeros((1, 2, 4, 4)), np.ones((1, 3, 3, 3)), np.zeros(1))

    def test_unsupported_stride_rejected(self):
        with self.assertRaises(ShapeError):
            F.conv2d_same_forward(np.zeros((1, 1, 4, 4)), np.ones((1, 1, 3, 3)), np.zeros(1), stride=3)


class DenseAndPoolTest(SimpleTestCase):

    def test_identity_weight_adds_bias(self):
        out, _ = F.dense_forward(np.array([[1.0, 2.0]]), np.eye(2), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(out, [[2.0, 3.0]])

    def test_dense_matches_triple_loop(self):
        rng = np.random.default_rng(3)
        x, w, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 4)), rng.standard_normal(4)
        out, _ = F.dense_forward(x, w, b)
        expected = np.zeros((2, 4))
        for i in range(2):
            for j in range(4):
                expected[i, j] = b[j] + sum(x[i, k] * w[k, j] for k in range(3))
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_dense_width_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            F.dense_forward(np.zeros((1, 3)), np.zeros((2, 2)), np.zeros(2))

    def test_pool_of_constant(self):
        out, _ = F.global_average_pool_forward(np.full((2, 3, 5, 7), 7.0))
        np.testing.assert_array_equal(out, np.full((2, 3), 7.0))

    def test_pool_mean(self):
        out, _ = F.global_average_pool_forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
        self.assertEqual(out[0, 0], 2.5)

    def test_pool_is_size_invariant_for_constant_channels(self):
        small = np.ones((1, 2, 8, 8)) * np.array([3.0, -1.0])[None, :, None, None]
        large = np.ones((1, 2, 31, 17)) * np.array([3.0, -1.0])[None, :, None, None]
        np.testing.assert_array_equal(F.global_average_pool_forward(small)[0], F.global_average_pool_forward(large)[0])


class ActivationAndLossTest(SimpleTestCase):

    def test_activation_values(self):
        relu, _ = F.activation_forward(np.array([-1.0, 2.0]), 'relu')
        leaky, _ = F.activation_forward(np.array([-10.0]), 'leaky_relu')
        sigmoid, _ = F.activation_forward(np.array([0.0]), 'sigmoid')
        tanh, _ = F.activation_forward(np.array([0.0]), 'tanh')
        np.testing.assert_array_equal(relu, [0.0, 2.0])
        self.assertAlmostEqual(leaky[0], -2.0)
        self.assertEqual(sigmoid[0], 0.5)
        self.assertEqual(tanh[0], 0.0)

    def test_unknown_activation_rejected(self):
        with self.assertRaises(ValueError):
            F.activation_forward(np.zeros(2), 'swish')

    def test_sigmoid_does_not_overflow(self):
        out = F.sigmoid(np.array([-1000.0, 1000.0]))
        np.testing.assert_array_equal(out, [0.0, 1.0])

    def test_bce_of_half(self):
        loss, _ = F.bce_loss(np.array([0.5]), np.array([1.0]))
        self.assertAlmostEqual(loss, math.log(2), places=12)

    def test_bce_near_zero_at_perfection(self):
        loss, _ = F.bce_loss(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        self.assertLessEqual(loss, -math.log(1 - F.BCE_EPSILON) + 1e-12)

    def test_bce_matches_scalar_loop(self):
        rng = np.random.default_rng(11)
        pred = rng.uniform(0.01, 0.99, size=16)
        target = rng.integers(0, 2, size=16).astype(np.float64)
        loss, _ = F.bce_loss(pred, target)
        expected = sum(
            -(t * math.log(p) + (1 - t) * math.log(1 - p)) for p, t in zip(pred, target)
        ) / len(pred)
        self.assertLess(abs(loss - expected) / expected, 1e-6)

    def test_bce_shape_mismatch_rejected(self):
        with self.assertRaises(ShapeError):
            F.bce_loss(np.zeros(3), np.zeros(4))

    def test_fused_gradient_matches_chain_rule(self):
        logits = np.array([[-1.5], [0.3], [2.0]])
        target = np.array([[1.0], [0.0], [1.0]])
        probs = F.sigmoid(logits)
        _, cache = F.bce_loss(probs, target)
        chained = F.bce_loss_backward(cache) * probs * (1 - probs)
        np.testing.assert_allclose(F.sigmoid_bce_grad(probs, target), chained, rtol=1e-9)

    def test_cross_entropy_gradient(self):
        rng = np.random.default_rng(5)
        logits = rng.standard_normal((4, 3))
        labels = np.array([0, 2, 1, 2])
        _, analytic = F.cross_entropy(logits, labels)
        error = grad_check(
            lambda z: np.array(F.cross_entropy(z, labels)[0]),
            lambda projection: analytic * projection,
            logits, step=1e-5, rng=rng,
        )
        self.assertLess(error, 1e-6)


class AdamTest(SimpleTestCase):

    def test_zero_gradient_leaves_parameter(self):
        parameter = Parameter(np.array([1.0, -2.0]))
        adam_step(Adam([parameter]))
        np.testing.assert_array_equal(parameter.value, [1.0, -2.0])

    def test_first_step_moves_by_learning_rate(self):
        parameter = Parameter(np.array([1.0, -1.0]))
        optimizer = Adam([parameter], lr=2e-4)
        parameter.grad[...] = [0.5, -2.0]
        optimizer.step()
        np.testing.assert_allclose(parameter.value, [1.0 - 2e-4, -1.0 + 2e-4], atol=1e-9)

    def test_repeated_steps_are_monotone(self):
        parameter = Parameter(np.array([0.0]))
        optimizer = Adam([parameter], lr=1e-2)
        values = []
        for _ in range(2):
            parameter.grad[...] = 3.0
            optimizer.step()
            values.append(parameter.value[0])
        self.assertLess(values[0], 0.0)
        self.assertLess(values[1], values[0])

    def test_defaults_come_from_settings(self):
        optimizer = Adam([])
        self.assertEqual(optimizer.hyperparameters(), {'lr': 2e-4, 'beta1': 0.5, 'beta2': 0.999, 'eps': 1e-8, 't': 0})


class GradcheckTest(SimpleTestCase):
    """Layer adjoints against central differences in 64-bit precision."""

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_dense(self):
        layer = Dense(3, 4, self.rng).astype(FLOAT64)
        self.assertLess(check_layer(layer, self.rng.standard_normal((2, 3)), rng=self.rng), 1e-6)

    def test_global_average_pool(self):
        error = check_layer(GlobalAveragePool(), self.rng.standard_normal((1, 2, 3, 3)), rng=self.rng)
        self.assertLess(error, 1e-6)

    def test_conv(self):
        layer = Conv2d(2, 3, 3, self.rng).astype(FLOAT64)
        layer.weight.value *= 25
        self.assertLess(check_layer(layer, self.rng.standard_normal((1, 2, 4, 4)), rng=self.rng), 1e-6)

    def test_strided_sequential(self):
        model = Sequential(Conv2d(2, 2, 3, self.rng, stride=2), Conv2d(2, 1, 1, self.rng)).astype(FLOAT64)
        for parameter in model.parameters():
            parameter.value *= 25
        self.assertLess(check_layer(model, self.rng.standard_normal((1, 2, 5, 4)), rng=self.rng), 1e-6)

    def test_relative_error_flags_non_finite(self):
        self.assertEqual(relative_error([np.nan], [1.0]), float('inf'))


class TensorTest(SimpleTestCase):

    def test_precision_context_restores_default(self):
        self.assertEqual(get_default_dtype(), FLOAT32)
        with precision(FLOAT64):
            self.assertEqual(Dense(2, 2, np.random.default_rng(0)).dtype, FLOAT64)
        self.assertEqual(get_default_dtype(), FLOAT32)

    def test_check_finite(self):
        with self.assertRaises(NonFiniteError):
            check_finite(np.array([1.0, np.inf]))

    def test_count_parameters(self):
        self.assertEqual(count_parameters(Dense(3, 4, np.random.default_rng(0))), 16)
