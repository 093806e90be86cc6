"""Multi-input generator: a latent vector plus the requested output size."""
import logging

import numpy as np

from apps.autodiff.layers import Activation, Conv2d, Dense, Layer
from apps.autodiff.tensor import as_tensor, check_finite
from apps.core.exceptions import InvalidSizeError, ShapeError
from apps.resize.layers import DynamicResize
from apps.resize.schedule import compute_schedule

from .blocks import ResNetBlock
from .config import GeneratorConfig

logger = logging.getLogger(__name__)


class Generator(Layer):
    """dense(z) -> C x 4 x 4 -> ResNet block -> 5 x [resize to stage k -> ResNet block] -> 1x1 conv -> tanh.

    The size input only drives the resize layers, so no weight depends on it.
    """

    def __init__(self, config=None, rng=None, dtype=None):
        super().__init__()
        self.config = config or GeneratorConfig()
        rng = rng if rng is not None else np.random.default_rng()
        base_h, base_w = self.config.base
        channels = self.config.projection_channels

        self.project = self.add_layer('project', Dense(self.config.z_dim, channels * base_h * base_w, rng, dtype))
        self.project_act = Activation('relu')
        self.stem = self.add_layer('stem', ResNetBlock(channels, channels, rng, dtype))

        self.resizes = []
        self.blocks = []
        for index, out_channels in enumerate(self.config.stage_channels):
            self.resizes.append(DynamicResize(self.config.resize_mode))
            self.blocks.append(self.add_layer(f'stage{index}', ResNetBlock(channels, out_channels, rng, dtype)))
            channels = out_channels

        self.to_rgb = self.add_layer('to_rgb', Conv2d(channels, self.config.output_channels, 1, rng, dtype=dtype))
        self.output_act = Activation('tanh')
        self.assign_names('generator')
        self._batch = None

    def check_target(self, target):
        height, width = (int(v) for v in target)
        base_h, base_w = self.config.base
        if height < base_h or width < base_w:
            raise InvalidSizeError(f'Target {height}x{width} is below the generator minimum {base_h}x{base_w}')
        if max(height, width) > self.config.max_size:
            logger.warning(
                'Generating %dx%d above the training cap M=%d; these scales were never trained',
                height, width, self.config.max_size,
            )
        return height, width

    def forward(self, z, target):
        z = as_tensor(z, self.dtype)
        if z.ndim == 1:
            z = z[None, :]
        if z.ndim != 2 or z.shape[1] != self.config.z_dim:
            raise ShapeError(f'Latent batch must be B x {self.config.z_dim}, got {z.shape}')
        check_finite(z, 'latent vector')
        height, width = self.check_target(target)

        schedule = compute_schedule(self.config.base, (height, width), self.config.stages)
        base_h, base_w = self.config.base
        self._batch = z.shape[0]

        x = self.project_act(self.project(z))
        x = self.stem(x.reshape(self._batch, self.config.projection_channels, base_h, base_w))
        for resize, block, (stage_h, stage_w) in zip(self.resizes, self.blocks, schedule.stages):
            x = block(resize.set_target(stage_h, stage_w)(x))
        return self.output_act(self.to_rgb(x))

    def __call__(self, z, target):
        return self.forward(z, target)

    def backward(self, grad_out):
        grad = self.to_rgb.backward(self.output_act.backward(grad_out))
        for resize, block in zip(reversed(self.resizes), reversed(self.blocks)):
            grad = resize.backward(block.backward(grad))
        grad = self.stem.backward(grad).reshape(self._batch, -1)
        return self.project.backward(self.project_act.backward(grad))

    def generate(self, z, target):
        """Images in [-1, 1]; leaves gradients untouched."""
        return self.forward(z, target)
