"""Dense tensor helpers.

numpy arrays are the tensor type throughout: images are rank-4 in
batch x channel x height x width order. Scalars default to 32-bit; the
64-bit width is selected for gradient verification.
"""
from contextlib import contextmanager

import numpy as np

from apps.core.exceptions import NonFiniteError, ShapeError

FLOAT32 = np.dtype(np.float32)
FLOAT64 = np.dtype(np.float64)

_default_dtype = FLOAT32


def get_default_dtype():
    return _default_dtype


def set_default_dtype(dtype):
    global _default_dtype
    dtype = np.dtype(dtype)
    if dtype not in (FLOAT32, FLOAT64):
        raise ValueError(f'Unsupported scalar width {dtype}; use float32 or float64.')
    _default_dtype = dtype


@contextmanager
def precision(dtype):
    """Temporarily build layers with the given scalar width."""
    previous = _default_dtype
    set_default_dtype(dtype)
    try:
        yield np.dtype(dtype)
    finally:
        set_default_dtype(previous)


def as_tensor(data, dtype=None):
    return np.ascontiguousarray(data, dtype=dtype or _default_dtype)


def check_rank(tensor, rank, name='input'):
    if tensor.ndim != rank:
        raise ShapeError(f'{name} must be rank {rank}, got shape {tensor.shape}')
    if any(extent < 1 for extent in tensor.shape):
        raise ShapeError(f'{name} has an empty extent: {tensor.shape}')


def check_image(tensor, name='input'):
    """Validate a B x C x H x W tensor."""
    check_rank(tensor, 4, name)


def check_finite(tensor, name='tensor'):
    if not np.all(np.isfinite(tensor)):
        raise NonFiniteError(f'{name} contains NaN or infinite values')
