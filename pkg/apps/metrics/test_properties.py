"""Property-based tests for the quality metrics and the Inception Score."""
import numpy as np
from hypothesis import given, settings, strategies as st

from apps.metrics.inception import inception_score
from apps.metrics.quality import mse, psnr_from_mse, ssim
from apps.metrics.resampling import METHODS, NEAREST, downsample


@given(low=st.floats(1e-3, 1e4), high=st.floats(1e-3, 1e4))
@settings(deadline=None, max_examples=200)
def test_psnr_never_increases_with_error(low, high):
    if low < high:
        assert psnr_from_mse(low) >= psnr_from_mse(high)


@given(
    in_h=st.integers(1, 40), in_w=st.integers(1, 40), scale=st.floats(0.05, 1.0),
    method=st.sampled_from(METHODS), seed=st.integers(0, 2**16),
)
@settings(deadline=None, max_examples=150)
def test_downsampling_stays_on_the_8_bit_scale(in_h, in_w, scale, method, seed):
    image = np.random.default_rng(seed).uniform(0, 255, size=(in_h, in_w, 3))
    height, width = max(1, int(in_h * scale)), max(1, int(in_w * scale))
    out = downsample(image, height, width, method)
    assert out.shape == (height, width, 3)
    assert out.min() >= 0.0 and out.max() <= 255.0


@given(seed=st.integers(0, 2**16), sigma=st.floats(1.0, 60.0))
@settings(deadline=None, max_examples=40)
def test_ssim_is_bounded_and_symmetric(seed, sigma):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 255, size=(16, 20))
    b = np.clip(a + rng.normal(0, sigma, size=a.shape), 0, 255)
    score, ssim_map = ssim(a, b)
    assert -1.0 - 1e-9 <= score <= 1.0 + 1e-9
    assert ssim_map.shape == a.shape
    assert abs(score - ssim(b, a)[0]) < 1e-12
    assert mse(a, b) == mse(b, a)


@given(
    classes=st.integers(2, 12), splits=st.integers(1, 5), per_split=st.integers(1, 20),
    seed=st.integers(0, 2**16),
)
@settings(deadline=None, max_examples=100)
def test_inception_score_lies_between_one_and_class_count(classes, splits, per_split, seed):
    probs = np.random.default_rng(seed).dirichlet(np.full(classes, 0.3), size=splits * per_split)
    result = inception_score(probs, splits)
    assert 1.0 - 1e-9 <= result.mean <= classes + 1e-9
    assert result.sd >= 0.0


@given(
    in_h=st.integers(1, 40), in_w=st.integers(1, 40), scale=st.floats(0.05, 1.0), seed=st.integers(0, 2**16),
)
@settings(deadline=None, max_examples=150)
def test_nearest_only_copies_source_pixels(in_h, in_w, scale, seed):
    image = np.random.default_rng(seed).integers(0, 256, size=(in_h, in_w, 3)).astype(np.float64)
    height, width = max(1, int(in_h * scale)), max(1, int(in_w * scale))
    out = downsample(image, height, width, NEAREST)
    source_pixels = {tuple(pixel) for pixel in image.reshape(-1, 3)}
    assert all(tuple(pixel) in source_pixels for pixel in out.reshape(-1, 3))
