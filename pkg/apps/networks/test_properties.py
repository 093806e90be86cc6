"""Property-based tests for size fidelity of the generator and discriminator."""
import numpy as np
from hypothesis import given, settings, strategies as st

from apps.networks.builders import build_networks
from apps.networks.config import DiscriminatorConfig, GeneratorConfig

GENERATOR, DISCRIMINATOR = build_networks(
    0, GeneratorConfig(z_dim=8, stage_channels=(4, 4, 4, 4, 4)), DiscriminatorConfig(conv_channels=(4, 4, 4, 4)),
)


@given(height=st.integers(4, 128), width=st.integers(4, 128), batch=st.integers(1, 3))
@settings(deadline=None, max_examples=50)
def test_generator_produces_exactly_the_requested_size(height, width, batch):
    z = np.random.default_rng(height * 1000 + width).standard_normal((batch, 8))
    assert GENERATOR.generate(z, (height, width)).shape == (batch, 3, height, width)


@given(height=st.integers(32, 128), width=st.integers(32, 128))
@settings(deadline=None, max_examples=200)
def test_generator_size_fidelity_over_training_range(height, width):
    z = np.random.default_rng(0).standard_normal((1, 8))
    image = GENERATOR.generate(z, (height, width))
    assert image.shape == (1, 3, height, width)
    assert np.all(np.abs(image) <= 1.0)


@given(height=st.integers(16, 128), width=st.integers(16, 128))
@settings(deadline=None, max_examples=40)
def test_discriminator_scores_any_size_above_minimum(height, width):
    images = np.random.default_rng(height + width).uniform(-1, 1, size=(2, 3, height, width))
    probs = DISCRIMINATOR.forward(images)
    assert probs.shape == (2,)
    assert np.all(np.isfinite(probs))


@given(seed=st.integers(0, 2**16), height=st.integers(4, 64), width=st.integers(4, 64))
@settings(deadline=None, max_examples=30)
def test_latent_rows_are_independent(seed, height, width):
    z = np.random.default_rng(seed).standard_normal((2, 8))
    together = GENERATOR.generate(z, (height, width))
    alone = GENERATOR.generate(z[1:], (height, width))
    np.testing.assert_allclose(together[1:], alone, rtol=1e-5, atol=1e-6)
