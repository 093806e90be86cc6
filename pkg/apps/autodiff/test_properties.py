"""Property-based tests for the tensor layers using Hypothesis."""
import numpy as np
from hypothesis import given, settings, strategies as st

from apps.autodiff import functional as F
from apps.autodiff.gradcheck import check_layer
from apps.autodiff.layers import Conv2d, Dense
from apps.autodiff.tensor import FLOAT64

extents = st.integers(min_value=1, max_value=64)


@given(height=extents, width=extents, kernel=st.sampled_from([1, 3, 5]))
@settings(deadline=None, max_examples=60)
def test_stride_one_convolution_preserves_spatial_size(height, width, kernel):
    x = np.zeros((1, 2, height, width), dtype=np.float32)
    out, _ = F.conv2d_same_forward(x, np.ones((3, 2, kernel, kernel), dtype=np.float32), np.zeros(3, dtype=np.float32))
    assert out.shape == (1, 3, height, width)


@given(height=extents, width=extents)
@settings(deadline=None, max_examples=60)
def test_stride_two_convolution_halves_rounding_up(height, width):
    x = np.zeros((1, 1, height, width), dtype=np.float32)
    out, _ = F.conv2d_same_forward(x, np.ones((1, 1, 3, 3), dtype=np.float32), np.zeros(1, dtype=np.float32), stride=2)
    assert out.shape[2:] == (-(-height // 2), -(-width // 2))


@given(batch=st.integers(1, 3), channels=st.integers(1, 4), height=extents, width=extents)
@settings(deadline=None, max_examples=60)
def test_global_average_pool_shape(batch, channels, height, width):
    out, _ = F.global_average_pool_forward(np.ones((batch, channels, height, width)))
    assert out.shape == (batch, channels)


@given(seed=st.integers(0, 2**32 - 1), height=st.integers(1, 12), width=st.integers(1, 12))
@settings(deadline=None, max_examples=25)
def test_forward_is_deterministic(seed, height, width):
    layer = Conv2d(2, 3, 3, np.random.default_rng(seed))
    x = np.random.default_rng(seed + 1).standard_normal((2, 2, height, width)).astype(np.float32)
    np.testing.assert_array_equal(layer.forward(x), layer.forward(x.copy()))


@given(seed=st.integers(0, 10_000), height=st.integers(1, 5), width=st.integers(1, 5), stride=st.sampled_from([1, 2]))
@settings(deadline=None, max_examples=20)
def test_convolution_adjoint_matches_central_differences(seed, height, width, stride):
    rng = np.random.default_rng(seed)
    layer = Conv2d(2, 2, 3, rng, stride=stride).astype(FLOAT64)
    layer.weight.value *= 25
    x = rng.standard_normal((1, 2, height, width))
    assert check_layer(layer, x, rng=rng) < 1e-6


@given(seed=st.integers(0, 10_000), batch=st.integers(1, 4))
@settings(deadline=None, max_examples=20)
def test_dense_adjoint_matches_central_differences(seed, batch):
    rng = np.random.default_rng(seed)
    layer = Dense(4, 3, rng).astype(FLOAT64)
    assert check_layer(layer, rng.standard_normal((batch, 4)), rng=rng) < 1e-6


@given(logits=st.lists(st.floats(-50, 50), min_size=1, max_size=32))
@settings(deadline=None, max_examples=100)
def test_sigmoid_stays_in_unit_interval(logits):
    out = F.sigmoid(np.array(logits))
    assert np.all((out >= 0.0) & (out <= 1.0))
