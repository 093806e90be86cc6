"""Layer objects with explicit forward/backward passes and named parameters."""
from dataclasses import dataclass, field

import numpy as np

from . import functional as F
from .tensor import as_tensor, get_default_dtype

INIT_STD = 0.02


@dataclass(eq=False)
class Parameter:
    """A trainable tensor and its accumulated gradient."""
    value: np.ndarray
    name: str = ''
    grad: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    def zero_grad(self):
        self.grad[...] = 0

    def astype(self, dtype):
        self.value = self.value.astype(dtype)
        self.grad = np.zeros_like(self.value)


def normal_init(rng, shape, dtype=None):
    """Weights ~ Normal(0, 0.02)."""
    return as_tensor(rng.normal(0.0, INIT_STD, size=shape), dtype)


class Layer:
    """Base class: tracks child layers and parameters in registration order."""

    def __init__(self):
        self._parameters = {}
        self._layers = {}

    def add_parameter(self, name, value):
        parameter = Parameter(value)
        self._parameters[name] = parameter
        return parameter

    def add_layer(self, name, layer):
        self._layers[name] = layer
        return layer

    def named_parameters(self, prefix=''):
        for name, parameter in self._parameters.items():
            yield f'{prefix}{name}', parameter
        for name, layer in self._layers.items():
            yield from layer.named_parameters(f'{prefix}{name}.')

    def parameters(self):
        return [parameter for _, parameter in self.named_parameters()]

    def assign_names(self, prefix):
        """Stamp every parameter with its unique dotted name."""
        for name, parameter in self.named_parameters(f'{prefix}.'):
            parameter.name = name

    def zero_grad(self):
        for parameter in self.parameters():
            parameter.zero_grad()

    def astype(self, dtype):
        """Cast every parameter in place (the 64-bit verification toggle)."""
        for parameter in self.parameters():
            parameter.astype(dtype)
        return self

    @property
    def dtype(self):
        parameters = self.parameters()
        return parameters[0].value.dtype if parameters else get_default_dtype()

    def __call__(self, x):
        return self.forward(x)

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, in_features, out_features, rng, dtype=None):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = self.add_parameter('weight', normal_init(rng, (in_features, out_features), dtype))
        self.bias = self.add_parameter('bias', as_tensor(np.zeros(out_features), dtype))
        self._cache = None

    def forward(self, x):
        out, self._cache = F.dense_forward(x, self.weight.value, self.bias.value)
        return out

    def backward(self, grad_out):
        grad_x, grad_weight, grad_bias = F.dense_backward(grad_out, self._cache)
        self.weight.grad += grad_weight
        self.bias.grad += grad_bias
        return grad_x


class Conv2d(Layer):
    """Same-padded convolution with stride 1 or 2."""

    def __init__(self, in_channels, out_channels, kernel_size, rng, stride=1, dtype=None):
        super().__init__()
        weight = normal_init(rng, (out_channels, in_channels, kernel_size, kernel_size), dtype)
        F.check_kernel(weight)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.weight = self.add_parameter('weight', weight)
        self.bias = self.add_parameter('bias', as_tensor(np.zeros(out_channels), dtype))
        self._cache = None

    def forward(self, x):
        out, self._cache = F.conv2d_same_forward(x, self.weight.value, self.bias.value, self.stride)
        return out

    def backward(self, grad_out):
        grad_x, grad_weight, grad_bias = F.conv2d_same_backward(grad_out, self._cache)
        self.weight.grad += grad_weight
        self.bias.grad += grad_bias
        return grad_x


class GlobalAveragePool(Layer):
    def forward(self, x):
        out, self._cache = F.global_average_pool_forward(x)
        return out

    def backward(self, grad_out):
        return F.global_average_pool_backward(grad_out, self._cache)


class Activation(Layer):
    def __init__(self, kind):
        super().__init__()
        if kind not in F.ACTIVATIONS:
            raise ValueError(f'Unknown activation {kind!r}; expected one of {F.ACTIVATIONS}')
        self.kind = kind

    def forward(self, x):
        out, self._cache = F.activation_forward(x, self.kind)
        return out

    def backward(self, grad_out):
        return F.activation_backward(grad_out, self._cache)


class Sequential(Layer):
    def __init__(self, *layers):
        super().__init__()
        for index, layer in enumerate(layers):
            self.add_layer(str(index), layer)

    def forward(self, x):
        for layer in self._layers.values():
            x = layer(x)
        return x

    def backward(self, grad_out):
        for layer in reversed(list(self._layers.values())):
            grad_out = layer.backward(grad_out)
        return grad_out


def count_parameters(model):
    """Total number of trainable scalars."""
    return sum(parameter.size for parameter in model.parameters())
