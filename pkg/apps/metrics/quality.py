"""Full-reference image quality: MSE, PSNR, SSIM and the SSIM diff map."""
import math

import numpy as np
from scipy.ndimage import correlate1d

from apps.core.exceptions import ShapeError

PEAK = 255.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f'Images differ in shape: {a.shape} vs {b.shape}')
    return a, b


def mse(a, b):
    a, b = _check_pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr_from_mse(error, peak=PEAK):
    if error == 0:
        return math.inf
    return 10 * math.log10(peak ** 2 / error)


def psnr(a, b):
    """Decibels against peak 255; identical images give +inf."""
    return psnr_from_mse(mse(a, b))


def luma(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3 and image.shape[2] == 3:
        return image @ LUMA_WEIGHTS
    if image.ndim == 3 and image.shape[2] == 1:
        return image[..., 0]
    if image.ndim == 2:
        return image
    raise ShapeError(f'Expected an H x W or H x W x 3 image, got shape {image.shape}')


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    offsets = np.arange(size) - (size - 1) / 2
    weights = np.exp(-offsets ** 2 / (2 * sigma ** 2))
    return weights / weights.sum()


def _filter(image, weights):
    return correlate1d(correlate1d(image, weights, axis=0, mode='nearest'), weights, axis=1, mode='nearest')


def ssim(a, b):
    """(mean SSIM, per-pixel SSIM map) on luma.

    The map is full size: windows at the border see edge-replicated pixels.
    """
    a, b = _check_pair(luma(a), luma(b))
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(f'SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}')
    weights = gaussian_window()
    c1 = (SSIM_K1 * PEAK) ** 2
    c2 = (SSIM_K2 * PEAK) ** 2

    mu_a = _filter(a, weights)
    mu_b = _filter(b, weights)
    var_a = _filter(a * a, weights) - mu_a * mu_a
    var_b = _filter(b * b, weights) - mu_b * mu_b
    cov = _filter(a * b, weights) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    ssim_map = numerator / denominator
    return float(ssim_map.mean()), ssim_map


def diff_map(a, b):
    """8-bit map where bright pixels are structurally changed."""
    _, ssim_map = ssim(a, b)
    return np.rint(255 * (1 - np.clip(ssim_map, 0, 1))).astype(np.uint8)
