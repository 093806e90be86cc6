"""Property-based tests for runtime resizing and the size schedule."""
import numpy as np
from hypothesis import given, settings, strategies as st

from apps.resize.interpolation import MODES, ResizeSpec, resize, resize_backward
from apps.resize.schedule import compute_schedule

extents = st.integers(min_value=1, max_value=64)


@given(in_h=extents, in_w=extents, out_h=extents, out_w=extents, mode=st.sampled_from(MODES), seed=st.integers(0, 2**16))
@settings(deadline=None, max_examples=100)
def test_backward_is_the_adjoint_of_forward(in_h, in_w, out_h, out_w, mode, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((1, 1, in_h, in_w))
    g = rng.standard_normal((1, 1, out_h, out_w))
    left = np.sum(resize(x, out_h, out_w, mode) * g)
    right = np.sum(x * resize_backward(g, ResizeSpec(in_h, in_w, out_h, out_w, mode)))
    assert abs(left - right) <= 1e-9 * max(1.0, abs(left))


@given(in_h=extents, in_w=extents, out_h=extents, out_w=extents, mode=st.sampled_from(MODES))
@settings(deadline=None, max_examples=100)
def test_output_has_requested_size_and_input_range(in_h, in_w, out_h, out_w, mode):
    x = np.random.default_rng(in_h * 131 + in_w).uniform(-1, 1, size=(1, 3, in_h, in_w))
    out = resize(x, out_h, out_w, mode)
    assert out.shape == (1, 3, out_h, out_w)
    assert out.min() >= x.min() - 1e-12 and out.max() <= x.max() + 1e-12


@given(value=st.floats(-1, 1), in_h=extents, in_w=extents, out_h=extents, out_w=extents, mode=st.sampled_from(MODES))
@settings(deadline=None, max_examples=60)
def test_constant_images_resize_exactly(value, in_h, in_w, out_h, out_w, mode):
    x = np.full((1, 1, in_h, in_w), value)
    assert np.all(resize(x, out_h, out_w, mode) == value)


@given(target_h=st.integers(4, 512), target_w=st.integers(4, 512), stages=st.integers(1, 8))
@settings(deadline=None, max_examples=200)
def test_schedule_is_monotone_and_ends_at_target(target_h, target_w, stages):
    schedule = compute_schedule((4, 4), (target_h, target_w), stages=stages)
    assert len(schedule) == stages
    assert schedule.stages[-1] == (target_h, target_w)
    previous = (4, 4)
    for height, width in schedule:
        assert height >= previous[0] and width >= previous[1]
        previous = (height, width)
