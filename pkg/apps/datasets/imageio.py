"""Image decode/encode and conversion between 8-bit pixels and network tensors."""
from pathlib import Path

import numpy as np
from PIL import Image

from apps.resize.interpolation import resize_bilinear

IMAGE_SUFFIXES = {'.png', '.jpg', '.jpeg'}


def is_image_path(path):
    return Path(path).suffix.lower() in IMAGE_SUFFIXES


def read_image(path):
    """Decode to an H x W x 3 uint8 array."""
    with Image.open(path) as image:
        return np.asarray(image.convert('RGB'), dtype=np.uint8)


def read_dimensions(path):
    """(width, height) from the header; PNG chunk checksums are verified, pixels are not decoded."""
    with Image.open(path) as image:
        size = image.size
        image.verify()
    return size


def write_png(pixels, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format='PNG')
    return path


def to_network(pixels, dtype=np.float32):
    """H x W x 3 uint8 -> 3 x H x W in [-1, 1]."""
    return (pixels.transpose(2, 0, 1).astype(dtype) / 127.5 - 1).astype(dtype)


def to_uint8(tensor):
    """3 x H x W in [-1, 1] -> H x W x 3 uint8."""
    scaled = (np.clip(tensor, -1, 1) + 1) * 127.5
    return np.rint(scaled).astype(np.uint8).transpose(1, 2, 0)


def load_for_training(path, height, width):
    """Decode, scale to [-1, 1] and bilinearly resample to (height, width) when needed."""
    tensor = to_network(read_image(path))
    if tensor.shape[1:] != (height, width):
        tensor = resize_bilinear(tensor[None], height, width)[0]
    return tensor


def contact_sheet(images, padding=4, background=0):
    """Lay out H x W x 3 images left to right, top-aligned."""
    height = max(image.shape[0] for image in images)
    width = sum(image.shape[1] for image in images) + padding * (len(images) + 1)
    sheet = np.full((height + 2 * padding, width, 3), background, dtype=np.uint8)
    x = padding
    for image in images:
        sheet[padding:padding + image.shape[0], x:x + image.shape[1]] = image
        x += image.shape[1] + padding
    return sheet
