"""Runtime-sized bilinear and nearest-neighbour resampling with exact adjoints.

Both modes use half-pixel centres: destination index ``d`` samples source
coordinate ``(d + 0.5) * in / out - 0.5``. Bilinear clamps that coordinate to
``[0, in - 1]``; nearest takes ``min(floor((d + 0.5) * in / out), in - 1)``.
Scale 1 maps every destination onto its own source pixel, so identity-size
resizes are exact in both modes.

Bilinear resizing is separable. The forward pass blends along height and
then width, which equals ``Ry @ x @ Rx.T`` for per-axis interpolation
matrices; the backward pass is the transpose ``Ry.T @ g @ Rx``, scattering
each output gradient into its four source neighbours with the forward weights.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from apps.core.exceptions import InvalidSizeError, ShapeError
from apps.autodiff.tensor import check_image

BILINEAR = 'bilinear'
NEAREST = 'nearest'
MODES = (BILINEAR, NEAREST)


@dataclass(frozen=True)
class ResizeSpec:
    in_height: int
    in_width: int
    out_height: int
    out_width: int
    mode: str = BILINEAR

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f'Unknown resize mode {self.mode!r}; expected one of {MODES}')
        if min(self.in_height, self.in_width, self.out_height, self.out_width) < 1:
            raise InvalidSizeError(
                f'Resize dims must be >= 1, got {self.in_height}x{self.in_width} '
                f'-> {self.out_height}x{self.out_width}'
            )

    @property
    def x_ratio(self):
        return self.in_width / self.out_width

    @property
    def y_ratio(self):
        return self.in_height / self.out_height

    @property
    def input_shape(self):
        return self.in_height, self.in_width

    @property
    def output_shape(self):
        return self.out_height, self.out_width


def _check_target(out_h, out_w):
    if int(out_h) != out_h or int(out_w) != out_w or out_h < 1 or out_w < 1:
        raise InvalidSizeError(f'Target size must be positive integers, got {out_h}x{out_w}')


def source_coordinates(in_size, out_size):
    """Half-pixel source coordinate of every destination index, clamped to the image."""
    coords = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    return np.clip(coords, 0, in_size - 1)


def bilinear_taps(in_size, out_size):
    """Lower/upper source index and blend fraction of every destination index."""
    coords = source_coordinates(in_size, out_size)
    lower = np.floor(coords).astype(np.int64)
    upper = np.minimum(lower + 1, in_size - 1)
    return lower, upper, coords - lower


@lru_cache(maxsize=512)
def bilinear_matrix(in_size, out_size):
    """out_size x in_size matrix of 1-D linear interpolation weights."""
    lower, upper, frac = bilinear_taps(in_size, out_size)
    matrix = np.zeros((out_size, in_size), dtype=np.float64)
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, lower), 1 - frac)
    np.add.at(matrix, (rows, upper), frac)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=512)
def nearest_indices(in_size, out_size):
    """Source index picked for every destination index."""
    ratio = in_size / out_size
    indices = np.floor((np.arange(out_size) + 0.5) * ratio).astype(np.int64)
    indices = np.minimum(indices, in_size - 1)
    indices.setflags(write=False)
    return indices


def bilinear_cell_coefficients(f00, f10, f01, f11):
    """Coefficients a0..a3 of f(x, y) = a0 + a1*x + a2*y + a3*x*y on a unit cell.

    ``fXY`` is the corner value at (x, y) in {0, 1}^2.
    """
    a0 = f00
    a1 = f10 - f00
    a2 = f01 - f00
    a3 = f11 - f10 - f01 + f00
    return a0, a1, a2, a3


def _lerp_axis(x, in_size, out_size, axis):
    lower, upper, frac = bilinear_taps(in_size, out_size)
    shape = [1] * x.ndim
    shape[axis] = out_size
    frac = frac.reshape(shape).astype(x.dtype)
    start = np.take(x, lower, axis=axis)
    # a + f * (b - a) keeps constant regions exactly constant
    return start + frac * (np.take(x, upper, axis=axis) - start)


def resize_bilinear(x, out_h, out_w):
    check_image(x)
    _check_target(out_h, out_w)
    rows_done = _lerp_axis(x, x.shape[2], int(out_h), axis=2)
    return _lerp_axis(rows_done, x.shape[3], int(out_w), axis=3)


def resize_bilinear_backward(grad_out, spec):
    _check_grad(grad_out, spec)
    rows = bilinear_matrix(spec.in_height, spec.out_height).astype(grad_out.dtype)
    cols = bilinear_matrix(spec.in_width, spec.out_width).astype(grad_out.dtype)
    return rows.T @ grad_out @ cols


def resize_nearest(x, out_h, out_w):
    check_image(x)
    _check_target(out_h, out_w)
    rows = nearest_indices(x.shape[2], int(out_h))
    cols = nearest_indices(x.shape[3], int(out_w))
    return x[:, :, rows][:, :, :, cols]


def resize_nearest_backward(grad_out, spec):
    _check_grad(grad_out, spec)
    rows = nearest_indices(spec.in_height, spec.out_height)
    cols = nearest_indices(spec.in_width, spec.out_width)
    batch, channels = grad_out.shape[:2]
    grad_rows = np.zeros((batch, channels, spec.in_height, spec.out_width), dtype=grad_out.dtype)
    np.add.at(grad_rows, (slice(None), slice(None), rows), grad_out)
    grad_in = np.zeros((batch, channels, spec.in_height, spec.in_width), dtype=grad_out.dtype)
    np.add.at(grad_in, (slice(None), slice(None), slice(None), cols), grad_rows)
    return grad_in


def resize(x, out_h, out_w, mode=BILINEAR):
    if mode == BILINEAR:
        return resize_bilinear(x, out_h, out_w)
    if mode == NEAREST:
        return resize_nearest(x, out_h, out_w)
    raise ValueError(f'Unknown resize mode {mode!r}; expected one of {MODES}')


def resize_backward(grad_out, spec):
    if spec.mode == BILINEAR:
        return resize_bilinear_backward(grad_out, spec)
    return resize_nearest_backward(grad_out, spec)


def _check_grad(grad_out, spec):
    check_image(grad_out, 'grad_out')
    if tuple(grad_out.shape[2:]) != spec.output_shape:
        raise ShapeError(
            f'Gradient spatial dims {grad_out.shape[2:]} do not match the resize output {spec.output_shape}'
        )
