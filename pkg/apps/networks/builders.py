"""Network construction helpers shared by training, generation and evaluation."""
import numpy as np

from apps.autodiff.layers import count_parameters

from .config import DiscriminatorConfig, GeneratorConfig
from .discriminator import Discriminator
from .generator import Generator


def build_networks(seed, generator_config=None, discriminator_config=None, dtype=None):
    """Generator and discriminator initialised from one seeded stream."""
    rng = np.random.default_rng(seed)
    generator = Generator(generator_config or GeneratorConfig(), rng, dtype)
    discriminator = Discriminator(discriminator_config or DiscriminatorConfig(), rng, dtype)
    return generator, discriminator


def parameter_shapes(model):
    return {name: parameter.shape for name, parameter in model.named_parameters()}


def describe(model):
    return f'{type(model).__name__}: {count_parameters(model):,} parameters'
