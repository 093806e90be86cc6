"""Size-agnostic discriminator: strided convs, global average pooling, dense head."""
import numpy as np

from apps.autodiff import functional as F
from apps.autodiff.layers import Activation, Conv2d, Dense, GlobalAveragePool, Layer, Sequential
from apps.autodiff.tensor import as_tensor, check_image
from apps.core.exceptions import ShapeError

from .config import DiscriminatorConfig


class Discriminator(Layer):
    """Returns P(real) for every image in a B x 3 x H x W batch, any H, W >= min_input."""

    def __init__(self, config=None, rng=None, dtype=None):
        super().__init__()
        self.config = config or DiscriminatorConfig()
        rng = rng if rng is not None else np.random.default_rng()

        layers = []
        in_channels = self.config.input_channels
        for out_channels in self.config.conv_channels:
            layers.append(Conv2d(in_channels, out_channels, self.config.kernel_size, rng, stride=2, dtype=dtype))
            layers.append(Activation('leaky_relu'))
            in_channels = out_channels
        self.features = self.add_layer('features', Sequential(*layers))
        self.pool = GlobalAveragePool()
        self.head = self.add_layer('head', Dense(in_channels, 1, rng, dtype))
        self.assign_names('discriminator')

    def check_input(self, images):
        check_image(images, 'discriminator input')
        min_h, min_w = self.config.min_input
        height, width = images.shape[2:]
        if height < min_h or width < min_w:
            raise ShapeError(
                f'Discriminator input {height}x{width} is smaller than min_input {min_h}x{min_w} '
                f'(minimum {min_h})'
            )
        if images.shape[1] != self.config.input_channels:
            raise ShapeError(
                f'Discriminator expects {self.config.input_channels} channels, got {images.shape[1]}'
            )

    def forward_logits(self, images):
        images = as_tensor(images, self.dtype)
        self.check_input(images)
        return self.head(self.pool(self.features(images)))

    def backward_logits(self, grad_logits):
        """Gradient with respect to the input images."""
        return self.features.backward(self.pool.backward(self.head.backward(grad_logits)))

    def forward(self, images):
        self._probs = F.sigmoid(self.forward_logits(images))[:, 0]
        return self._probs

    def backward(self, grad_probs):
        probs = self._probs
        return self.backward_logits((grad_probs * probs * (1 - probs))[:, None])
