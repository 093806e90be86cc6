"""Synthetic corpus of anti-aliased ellipses at mixed sizes and aspect ratios."""
import csv
import logging
from pathlib import Path

import numpy as np

from apps.core.exceptions import DataError
from apps.resize.schedule import round_half_up

from .imageio import write_png

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.csv'
MANIFEST_FIELDS = [
    'file', 'width', 'height', 'label',
    'center_x', 'center_y', 'axis_a', 'axis_b', 'angle', 'red', 'green', 'blue',
]
# (width, height) ratios
ASPECT_RATIOS = ((1, 1), (4, 3), (3, 4), (3, 2), (2, 3))
# ellipse colour families; the family index is the class label
COLOUR_FAMILIES = (
    (200, 60, 60),
    (60, 170, 80),
    (60, 90, 200),
    (210, 190, 60),
)
SUPERSAMPLE = 4
NOISE_SD = 4.0


def size_candidates(size_range, size_step=8):
    """Every (width, height) whose long side is on the step grid and both sides lie in range."""
    low, high = (int(v) for v in size_range)
    if low < 1 or high < low:
        raise DataError(f'Invalid size range {low}..{high}')
    longs = list(range(low, high + 1, size_step)) or [low]
    candidates = []
    for longest in longs:
        for ratio_w, ratio_h in ASPECT_RATIOS:
            if ratio_w >= ratio_h:
                width, height = longest, round_half_up(longest * ratio_h / ratio_w)
            else:
                width, height = round_half_up(longest * ratio_w / ratio_h), longest
            if low <= min(width, height) and (width, height) not in candidates:
                candidates.append((width, height))
    return candidates


def _coverage(width, height, cx, cy, a, b, angle):
    """Fraction of each pixel inside the ellipse, from a SUPERSAMPLE^2 grid of sub-samples."""
    offsets = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE
    ys = (np.arange(height)[:, None] + offsets[None, :]).reshape(-1)
    xs = (np.arange(width)[:, None] + offsets[None, :]).reshape(-1)
    dx = xs[None, :] - cx
    dy = ys[:, None] - cy
    cos, sin = np.cos(angle), np.sin(angle)
    u = (dx * cos + dy * sin) / a
    v = (-dx * sin + dy * cos) / b
    inside = (u * u + v * v <= 1.0).astype(np.float64)
    return inside.reshape(height, SUPERSAMPLE, width, SUPERSAMPLE).mean(axis=(1, 3))


def render_ellipse(rng, width, height, label):
    """One image plus the ellipse parameters that produced it."""
    # near-grey linear gradient
    start, end = rng.uniform(120, 230, size=(2, 1)) + rng.uniform(-15, 15, size=(2, 3))
    direction = rng.uniform(0, 2 * np.pi)
    yy, xx = np.mgrid[0:height, 0:width]
    t = (xx * np.cos(direction) + yy * np.sin(direction)).astype(np.float64)
    t = (t - t.min()) / max(t.max() - t.min(), 1e-12)
    background = start + t[..., None] * (end - start)

    shortest = min(width, height)
    params = {
        'center_x': rng.uniform(0.35, 0.65) * width,
        'center_y': rng.uniform(0.35, 0.65) * height,
        'axis_a': rng.uniform(0.15, 0.35) * shortest,
        'axis_b': rng.uniform(0.15, 0.35) * shortest,
        'angle': rng.uniform(0, np.pi),
    }
    colour = np.clip(np.array(COLOUR_FAMILIES[label]) + rng.uniform(-25, 25, size=3), 0, 255)
    coverage = _coverage(
        width, height, params['center_x'], params['center_y'],
        params['axis_a'], params['axis_b'], params['angle'],
    )[..., None]
    pixels = background * (1 - coverage) + colour * coverage
    pixels += rng.normal(0, NOISE_SD, size=pixels.shape)
    params.update(red=int(round(colour[0])), green=int(round(colour[1])), blue=int(round(colour[2])))
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8), params


def make_toy_dataset(directory, n, size_range=(32, 64), seed=0, size_step=8):
    """Write ``n`` PNG images and ``manifest.csv``; identical bytes for identical arguments."""
    if n < 1:
        raise DataError(f'Toy dataset needs at least one image, got n={n}')
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    candidates = size_candidates(size_range, size_step)

    rows = []
    for index in range(n):
        width, height = candidates[int(rng.integers(len(candidates)))]
        label = int(rng.integers(len(COLOUR_FAMILIES)))
        pixels, params = render_ellipse(rng, width, height, label)
        name = f'toy_{index:05d}.png'
        write_png(pixels, directory / name)
        rows.append({'file': name, 'width': width, 'height': height, 'label': label, **params})

    with (directory / MANIFEST_NAME).open('w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=MANIFEST_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({
                key: (f'{value:.6f}' if isinstance(value, float) else value) for key, value in row.items()
            })
    logger.info('Wrote %d toy image(s) at %d candidate size(s) to %s', n, len(candidates), directory)
    return directory


def read_manifest(directory):
    """Manifest rows keyed by file name."""
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise DataError(f'No {MANIFEST_NAME} in {directory}; labels are only available for toy corpora')
    with path.open(newline='') as handle:
        rows = list(csv.DictReader(handle))
    return {
        row['file']: {**row, 'width': int(row['width']), 'height': int(row['height']), 'label': int(row['label'])}
        for row in rows
    }
