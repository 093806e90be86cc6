"""Forward and backward kernels for every layer type.

Each ``*_forward`` returns ``(output, cache)``; the matching ``*_backward``
takes the upstream gradient and the cache and returns the exact adjoints.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from apps.core.exceptions import ShapeError
from .tensor import check_image, check_rank

BCE_EPSILON = 1e-7
LEAKY_RELU_SLOPE = 0.2
ACTIVATIONS = ('relu', 'leaky_relu', 'tanh', 'sigmoid')


# Convolution ----------------------------------------------------------------

def check_kernel(weight):
    if weight.ndim != 4:
        raise ShapeError(f'Convolution weight must be O x I x kH x kW, got {weight.shape}')
    kernel_h, kernel_w = weight.shape[2:]
    if kernel_h % 2 == 0 or kernel_w % 2 == 0:
        raise ShapeError(f'Kernel extents must be odd for same padding, got {kernel_h}x{kernel_w}')


def conv2d_same_forward(x, weight, bias, stride=1):
    """Zero-padded convolution; stride 1 keeps H x W, stride 2 gives ceil(H/2) x ceil(W/2)."""
    check_image(x)
    check_kernel(weight)
    if stride not in (1, 2):
        raise ShapeError(f'stride must be 1 or 2, got {stride}')
    if x.shape[1] != weight.shape[1]:
        raise ShapeError(
            f'Input has {x.shape[1]} channels but the kernel expects {weight.shape[1]}'
        )

    kernel_h, kernel_w = weight.shape[2:]
    pad_h, pad_w = (kernel_h - 1) // 2, (kernel_w - 1) // 2
    padded = np.pad(x, ((0, 0), (0, 0), (pad_h, pad_h), (pad_w, pad_w)))

    # B x C x Ho x Wo x kH x kW view over the padded input
    windows = sliding_window_view(padded, (kernel_h, kernel_w), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))  # B x Ho x Wo x O
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    cache = (x.shape, padded.shape, windows, weight, stride)
    return np.ascontiguousarray(out, dtype=x.dtype), cache


def conv2d_same_backward(grad_out, cache):
    x_shape, padded_shape, windows, weight, stride = cache
    kernel_h, kernel_w = weight.shape[2:]
    pad_h, pad_w = (kernel_h - 1) // 2, (kernel_w - 1) // 2
    out_h, out_w = grad_out.shape[2:]

    grad_bias = grad_out.sum(axis=(0, 2, 3))
    grad_weight = np.tensordot(grad_out, windows, axes=([0, 2, 3], [0, 2, 3]))

    grad_padded = np.zeros(padded_shape, dtype=grad_out.dtype)
    for i in range(kernel_h):
        for j in range(kernel_w):
            contribution = np.tensordot(grad_out, weight[:, :, i, j], axes=([1], [0]))  # B x Ho x Wo x C
            grad_padded[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += (
                contribution.transpose(0, 3, 1, 2)
            )
    grad_x = grad_padded[:, :, pad_h:pad_h + x_shape[2], pad_w:pad_w + x_shape[3]]
    return np.ascontiguousarray(grad_x), grad_weight, grad_bias


# Dense ----------------------------------------------------------------------

def dense_forward(x, weight, bias):
    check_rank(x, 2)
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f'Input width {x.shape[1]} does not match weight rows {weight.shape[0]}')
    return x @ weight + bias, (x, weight)


def dense_backward(grad_out, cache):
    x, weight = cache
    return grad_out @ weight.T, x.T @ grad_out, grad_out.sum(axis=0)


# Global average pooling -----------------------------------------------------

def global_average_pool_forward(x):
    check_image(x)
    return x.mean(axis=(2, 3)), x.shape


def global_average_pool_backward(grad_out, cache):
    batch, channels, height, width = cache
    grad = grad_out[:, :, None, None] / (height * width)
    return np.broadcast_to(grad, cache).astype(grad_out.dtype)


# Activations ----------------------------------------------------------------

def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    exp_x = np.exp(x[~positive])
    out[~positive] = exp_x / (1.0 + exp_x)
    return out


def activation_forward(x, kind):
    if kind == 'relu':
        out = np.maximum(x, 0)
    elif kind == 'leaky_relu':
        out = np.where(x > 0, x, LEAKY_RELU_SLOPE * x)
    elif kind == 'tanh':
        out = np.tanh(x)
    elif kind == 'sigmoid':
        out = sigmoid(x)
    else:
        raise ValueError(f'Unknown activation {kind!r}; expected one of {ACTIVATIONS}')
    return out.astype(x.dtype, copy=False), (kind, x, out)


def activation_backward(grad_out, cache):
    kind, x, out = cache
    if kind == 'relu':
        return grad_out * (x > 0)
    if kind == 'leaky_relu':
        return grad_out * np.where(x > 0, 1.0, LEAKY_RELU_SLOPE).astype(x.dtype)
    if kind == 'tanh':
        return grad_out * (1 - out * out)
    return grad_out * out * (1 - out)


# Losses ---------------------------------------------------------------------

def bce_loss(pred, target):
    """Mean binary cross-entropy on probabilities clamped to [eps, 1 - eps]."""
    if pred.shape != target.shape:
        raise ShapeError(f'Prediction shape {pred.shape} does not match target {target.shape}')
    clamped = np.clip(pred, BCE_EPSILON, 1 - BCE_EPSILON)
    losses = -(target * np.log(clamped) + (1 - target) * np.log(1 - clamped))
    return float(losses.mean()), (pred, target, clamped)


def bce_loss_backward(cache):
    pred, target, clamped = cache
    inside = (pred >= BCE_EPSILON) & (pred <= 1 - BCE_EPSILON)
    grad = (clamped - target) / (clamped * (1 - clamped)) / pred.size
    return (grad * inside).astype(pred.dtype)


def sigmoid_bce_grad(probs, target):
    """Gradient of bce_loss(sigmoid(logits)) with respect to the logits."""
    return ((probs - target) / probs.size).astype(probs.dtype)


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    """Mean softmax cross-entropy; returns (loss, grad wrt logits)."""
    probs = softmax(logits)
    rows = np.arange(len(labels))
    loss = -np.log(np.clip(probs[rows, labels], 1e-12, None)).mean()
    grad = probs.copy()
    grad[rows, labels] -= 1
    return float(loss), grad / len(labels)
