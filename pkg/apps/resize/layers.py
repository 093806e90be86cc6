"""Resize layer whose output size is supplied at call time."""
from apps.autodiff.layers import Layer

from .interpolation import BILINEAR, MODES, ResizeSpec, resize, resize_backward


class DynamicResize(Layer):
    """Weightless resampling layer; ``set_target`` picks the size for the next forward."""

    def __init__(self, mode=BILINEAR):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f'Unknown resize mode {mode!r}; expected one of {MODES}')
        self.mode = mode
        self.target = None
        self._spec = None

    def set_target(self, height, width):
        self.target = (int(height), int(width))
        return self

    def forward(self, x):
        if self.target is None:
            raise RuntimeError('DynamicResize needs a target size before forward()')
        height, width = self.target
        self._spec = ResizeSpec(x.shape[2], x.shape[3], height, width, self.mode)
        return resize(x, height, width, self.mode)

    def backward(self, grad_out):
        return resize_backward(grad_out, self._spec)
