"""Residual block used between the generator's resize stages."""
from apps.autodiff import functional as F
from apps.autodiff.layers import Activation, Conv2d, Layer


class ResNetBlock(Layer):
    """relu(conv3x3(relu(conv3x3(x))) + skip(x)); skip is a 1x1 conv when channels change."""

    def __init__(self, in_channels, out_channels, rng, dtype=None):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.conv1 = self.add_layer('conv1', Conv2d(in_channels, out_channels, 3, rng, dtype=dtype))
        self.act1 = Activation('relu')
        self.conv2 = self.add_layer('conv2', Conv2d(out_channels, out_channels, 3, rng, dtype=dtype))
        self.projection = None
        if in_channels != out_channels:
            self.projection = self.add_layer('projection', Conv2d(in_channels, out_channels, 1, rng, dtype=dtype))
        self._out_cache = None

    def forward(self, x):
        main = self.conv2(self.act1(self.conv1(x)))
        skip = self.projection(x) if self.projection is not None else x
        out, self._out_cache = F.activation_forward(main + skip, 'relu')
        return out

    def backward(self, grad_out):
        grad_sum = F.activation_backward(grad_out, self._out_cache)
        grad_x = self.conv1.backward(self.act1.backward(self.conv2.backward(grad_sum)))
        if self.projection is not None:
            return grad_x + self.projection.backward(grad_sum)
        return grad_x + grad_sum
