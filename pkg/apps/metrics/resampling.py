"""Four downsampling filters for the resizing audit.

Images are H x W or H x W x C arrays on the 8-bit scale. Every method is
separable: rows and columns are resampled with an out x in weight matrix,
except ``linear`` which reuses the network's bilinear resize and ``nearest``
which gathers source pixels.
"""
from functools import lru_cache

import numpy as np

from apps.core.exceptions import InvalidSizeError, ShapeError
from apps.resize.interpolation import nearest_indices, resize_bilinear

AREA = 'area'
CUBIC = 'cubic'
LINEAR = 'linear'
NEAREST = 'nearest'
METHODS = (AREA, CUBIC, LINEAR, NEAREST)

CUBIC_A = -0.5


@lru_cache(maxsize=256)
def area_matrix(in_size, out_size):
    """Exact box footprint: each output averages the source span it covers."""
    if out_size > in_size:
        raise InvalidSizeError(f'Area resampling is defined for downsampling only ({in_size} -> {out_size})')
    scale = in_size / out_size
    starts = np.arange(out_size) * scale
    ends = starts + scale
    pixels = np.arange(in_size)
    overlap = np.minimum(ends[:, None], pixels[None, :] + 1) - np.maximum(starts[:, None], pixels[None, :])
    matrix = np.clip(overlap, 0, None) / scale
    matrix.setflags(write=False)
    return matrix


def cubic_kernel(t, a=CUBIC_A):
    t = np.abs(t)
    near = ((a + 2) * t - (a + 3)) * t * t + 1
    far = ((a * t - 5 * a) * t + 8 * a) * t - 4 * a
    return np.where(t <= 1, near, np.where(t < 2, far, 0.0))


@lru_cache(maxsize=256)
def cubic_matrix(in_size, out_size):
    """Catmull-Rom taps at half-pixel source coordinates, edge-clamped."""
    coords = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    base = np.floor(coords).astype(np.int64)
    matrix = np.zeros((out_size, in_size), dtype=np.float64)
    rows = np.arange(out_size)
    for offset in range(-1, 3):
        taps = base + offset
        weights = cubic_kernel(coords - taps)
        np.add.at(matrix, (rows, np.clip(taps, 0, in_size - 1)), weights)
    matrix.setflags(write=False)
    return matrix


def _as_hwc(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image[..., None], True
    if image.ndim == 3:
        return image, False
    raise ShapeError(f'Expected an H x W or H x W x C image, got shape {image.shape}')


def _separable(image, rows, cols):
    return np.einsum('oh,hwc,pw->opc', rows, image, cols)


def downsample(image, height, width, method):
    """Resample to (height, width) <= source dims; output clamped to [0, 255]."""
    pixels, flat = _as_hwc(image)
    in_h, in_w = pixels.shape[:2]
    if height < 1 or width < 1:
        raise InvalidSizeError(f'Target size must be >= 1, got {height}x{width}')
    if height > in_h or width > in_w:
        raise InvalidSizeError(f'Cannot downsample {in_h}x{in_w} to larger {height}x{width}')

    if method == AREA:
        out = _separable(pixels, area_matrix(in_h, height), area_matrix(in_w, width))
    elif method == CUBIC:
        out = _separable(pixels, cubic_matrix(in_h, height), cubic_matrix(in_w, width))
    elif method == LINEAR:
        out = resize_bilinear(pixels.transpose(2, 0, 1)[None], height, width)[0].transpose(1, 2, 0)
    elif method == NEAREST:
        out = pixels[nearest_indices(in_h, height)][:, nearest_indices(in_w, width)]
    else:
        raise ValueError(f'Unknown resampling method {method!r}; expected one of {METHODS}')

    out = np.clip(out, 0, 255)
    return out[..., 0] if flat else out
