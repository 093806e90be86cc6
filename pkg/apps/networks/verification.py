"""Gradient verification suite over every layer type and the full D(G(z, s)) chain."""
import logging
from dataclasses import dataclass

import numpy as np

from apps.autodiff import functional as F
from apps.autodiff.gradcheck import check_layer, grad_check
from apps.autodiff.layers import Activation, Conv2d, Dense, GlobalAveragePool
from apps.autodiff.tensor import FLOAT64, precision
from apps.resize.interpolation import (
    ResizeSpec, resize_bilinear, resize_bilinear_backward, resize_nearest, resize_nearest_backward,
)

from .config import DiscriminatorConfig, GeneratorConfig
from .discriminator import Discriminator
from .generator import Generator

logger = logging.getLogger(__name__)

END_TO_END_STEP = 1e-5
NONLINEAR_STEP = 1e-4


@dataclass
class GradcheckRow:
    layer: str
    max_error: float
    cases: int
    threshold: float

    @property
    def passed(self):
        return self.max_error < self.threshold


def away_from_zero(rng, shape, low=0.1):
    """Random values with |v| >= low, keeping finite differences off activation kinks."""
    return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(low, 1.0, size=shape)


def _dense_case(rng):
    return check_layer(Dense(3, 4, rng).astype(FLOAT64), rng.standard_normal((2, 3)), rng=rng)


def _conv_case(rng, stride):
    height, width = rng.integers(2, 6, size=2)
    kernel = int(rng.choice([1, 3]))
    layer = Conv2d(2, 3, kernel, rng, stride=stride).astype(FLOAT64)
    # rescale so the random projection sees O(1) gradients
    layer.weight.value *= 25
    return check_layer(layer, rng.standard_normal((1, 2, height, width)), rng=rng)


def _pool_case(rng):
    height, width = rng.integers(1, 6, size=2)
    return check_layer(GlobalAveragePool(), rng.standard_normal((1, 2, height, width)), rng=rng)


def _activation_case(rng, kind):
    return check_layer(Activation(kind), away_from_zero(rng, (2, 3, 2, 2)), step=NONLINEAR_STEP, rng=rng)


def _bce_case(rng):
    target = rng.integers(0, 2, size=(4, 1)).astype(FLOAT64)
    state = {}

    def forward(pred):
        loss, state['cache'] = F.bce_loss(pred, target)
        return loss

    def backward(projection):
        return F.bce_loss_backward(state['cache']) * projection

    return grad_check(forward, backward, rng.uniform(0.1, 0.9, size=(4, 1)), step=NONLINEAR_STEP, rng=rng)


def _resize_case(rng, mode):
    in_h, in_w = (int(v) for v in rng.integers(1, 7, size=2))
    out_h, out_w = (int(v) for v in rng.integers(1, 9, size=2))
    spec = ResizeSpec(in_h, in_w, out_h, out_w, mode)
    forward, backward = {
        'bilinear': (resize_bilinear, resize_bilinear_backward),
        'nearest': (resize_nearest, resize_nearest_backward),
    }[mode]
    return grad_check(
        lambda x: forward(x, out_h, out_w),
        lambda grad: backward(grad, spec),
        rng.standard_normal((1, 2, in_h, in_w)),
        rng=rng,
    )


def rescale_for_verification(model, rng):
    """Re-draw weights at unit gain for finite-difference checks."""
    for _, parameter in model.named_parameters():
        if parameter.value.ndim == 1:
            parameter.value[...] = rng.normal(0.0, 0.1, size=parameter.shape)
            continue
        fan_in = parameter.shape[0] if parameter.value.ndim == 2 else int(np.prod(parameter.shape[1:]))
        parameter.value[...] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=parameter.shape)


def end_to_end_case(rng, target=None):
    """d D(G(z, s)) / dz against central differences on a miniature pair of networks."""
    with precision(FLOAT64):
        generator = Generator(GeneratorConfig(z_dim=6, stage_channels=(4, 4, 3, 3, 2)), rng)
        discriminator = Discriminator(DiscriminatorConfig(conv_channels=(3, 3, 3, 3)), rng)
    rescale_for_verification(generator, rng)
    rescale_for_verification(discriminator, rng)
    if target is None:
        target = tuple(int(v) for v in rng.integers(16, 21, size=2))

    def forward(z):
        return discriminator.forward(generator.forward(z, target))

    def backward(projection):
        generator.zero_grad()
        discriminator.zero_grad()
        return generator.backward(discriminator.backward(projection))

    return grad_check(forward, backward, rng.standard_normal((1, 6)), step=END_TO_END_STEP, rng=rng)


def gradcheck_suite(threshold, cases=20, seed=0, end_to_end_cases=2):
    """Max relative error per layer over ``cases`` random small inputs."""
    rng = np.random.default_rng(seed)
    checks = [
        ('dense', _dense_case),
        ('conv2d_same stride 1', lambda r: _conv_case(r, 1)),
        ('conv2d_same stride 2', lambda r: _conv_case(r, 2)),
        ('global_average_pool', _pool_case),
        ('relu', lambda r: _activation_case(r, 'relu')),
        ('leaky_relu', lambda r: _activation_case(r, 'leaky_relu')),
        ('tanh', lambda r: _activation_case(r, 'tanh')),
        ('sigmoid', lambda r: _activation_case(r, 'sigmoid')),
        ('bce_loss', _bce_case),
        ('resize_bilinear', lambda r: _resize_case(r, 'bilinear')),
        ('resize_nearest', lambda r: _resize_case(r, 'nearest')),
    ]
    rows = []
    for name, check in checks:
        error = max(check(rng) for _ in range(cases))
        rows.append(GradcheckRow(name, error, cases, threshold))
        logger.info('gradcheck %s: max rel error %.3e over %d cases', name, error, cases)
    if end_to_end_cases:
        error = max(end_to_end_case(rng) for _ in range(end_to_end_cases))
        rows.append(GradcheckRow('discriminator(generator(z, s))', error, end_to_end_cases, threshold))
    return rows
