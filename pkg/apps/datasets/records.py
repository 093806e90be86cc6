"""Image records, resolution census and aspect-ratio-preserving grouping."""
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.core.exceptions import DataError
from apps.resize.schedule import round_half_up


@dataclass(frozen=True)
class ImageRecord:
    path: Path
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DataError(f'{self.path}: image dimensions must be >= 1, got {self.width}x{self.height}')

    @property
    def resolution(self):
        return self.width, self.height


@dataclass(frozen=True)
class ResolutionCensus:
    """Images-per-resolution statistics over native (pre-resize) dimensions."""
    total_images: int
    distinct_resolutions: int
    mean_per_resolution: float
    sd_per_resolution: float
    landscape_count: int
    portrait_count: int
    square_count: int
    counts: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_counts(cls, counts):
        """Build from a {(width, height): images} mapping."""
        if not counts:
            raise DataError('Cannot take a census of an empty corpus')
        per_resolution = np.array(list(counts.values()), dtype=np.float64)
        return cls(
            total_images=int(per_resolution.sum()),
            distinct_resolutions=len(counts),
            mean_per_resolution=float(per_resolution.mean()),
            sd_per_resolution=float(per_resolution.std()),  # population SD
            landscape_count=sum(1 for w, h in counts if w > h),
            portrait_count=sum(1 for w, h in counts if h > w),
            square_count=sum(1 for w, h in counts if w == h),
            counts=dict(sorted(counts.items())),
        )

    @classmethod
    def from_records(cls, records):
        return cls.from_counts(Counter(record.resolution for record in records))

    def identity_errors(self, tolerance=0.01):
        """Violated census identities; empty when the row is self-consistent."""
        errors = []
        orientation_total = self.landscape_count + self.portrait_count + self.square_count
        if orientation_total != self.distinct_resolutions:
            errors.append(
                f'landscape + portrait + square = {orientation_total}, '
                f'expected {self.distinct_resolutions} resolutions'
            )
        expected_mean = self.total_images / self.distinct_resolutions
        if abs(expected_mean - self.mean_per_resolution) > tolerance:
            errors.append(
                f'mean per resolution {self.mean_per_resolution} differs from '
                f'total / resolutions = {expected_mean:.4f}'
            )
        return errors

    def summary(self):
        return {
            'total_images': self.total_images,
            'distinct_resolutions': self.distinct_resolutions,
            'mean_per_resolution': round(self.mean_per_resolution, 4),
            'sd_per_resolution': round(self.sd_per_resolution, 4),
            'landscape_count': self.landscape_count,
            'portrait_count': self.portrait_count,
            'square_count': self.square_count,
        }


def cap_resize(width, height, max_size=None):
    """Scale the longest side down to ``max_size`` keeping the aspect ratio.

    m' = M if m >= M else m; r = m / m'; s' = round(s / r) with a floor of 1.
    """
    max_size = max_size or settings.ANYSIZE_MAX_SIZE
    longest, shortest = max(width, height), min(width, height)
    new_longest = max_size if longest >= max_size else longest
    ratio = longest / new_longest
    new_shortest = max(1, round_half_up(shortest / ratio))
    if width >= height:
        return new_longest, new_shortest
    return new_shortest, new_longest


@dataclass
class ResolutionGroup:
    """Records sharing one capped resolution; batchable without warping."""
    width: int
    height: int
    max_size: int
    records: list = field(default_factory=list)

    @property
    def group_id(self):
        return f'{self.width}x{self.height}'

    @property
    def size(self):
        """Spatial size as (height, width)."""
        return self.height, self.width

    def __len__(self):
        return len(self.records)

    def batch_count(self, batch_size):
        return -(-len(self.records) // batch_size)


def group_by_resolution(records, max_size=None):
    """Partition records by capped resolution.

    Groups are ordered by descending member count, then by (width, height),
    so epochs are deterministic. Members keep their input order.
    """
    if not records:
        raise DataError('Cannot group an empty record list')
    max_size = max_size or settings.ANYSIZE_MAX_SIZE
    groups = {}
    for record in records:
        width, height = cap_resize(record.width, record.height, max_size)
        group = groups.setdefault((width, height), ResolutionGroup(width, height, max_size))
        group.records.append(record)
    return sorted(groups.values(), key=lambda g: (-len(g), g.width, g.height))


def training_samples(groups):
    """Members per capped resolution, keyed (height, width)."""
    return {group.size: len(group) for group in groups}
