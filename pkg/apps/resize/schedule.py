"""Progressive size schedule for the generator's five resize stages."""
import math
from dataclasses import dataclass

from django.conf import settings

from apps.core.exceptions import InvalidSizeError


def round_half_up(value):
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class SizeSchedule:
    base: tuple
    target: tuple
    stages: tuple

    def __post_init__(self):
        if self.stages[-1] != tuple(self.target):
            raise InvalidSizeError(f'Schedule ends at {self.stages[-1]}, not at target {self.target}')

    def __len__(self):
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)


def compute_schedule(base, target, stages=None):
    """Geometric interpolation from ``base`` to ``target`` over ``stages`` steps.

    Stage k of n is round(b * (T / b) ** (k / n)) per dimension, clamped to be
    no smaller than the previous stage; the last stage is the target exactly.
    """
    stages = stages or settings.ANYSIZE_SCHEDULE_STAGES
    base_h, base_w = (int(v) for v in base)
    target_h, target_w = (int(v) for v in target)
    if target_h < base_h or target_w < base_w:
        raise InvalidSizeError(
            f'Target {target_h}x{target_w} is below the generator minimum {base_h}x{base_w}'
        )

    sizes = []
    previous_h, previous_w = base_h, base_w
    for k in range(1, stages + 1):
        fraction = k / stages
        height = max(1, previous_h, round_half_up(base_h * (target_h / base_h) ** fraction))
        width = max(1, previous_w, round_half_up(base_w * (target_w / base_w) ** fraction))
        sizes.append((height, width))
        previous_h, previous_w = height, width
    sizes[-1] = (target_h, target_w)
    return SizeSchedule(base=(base_h, base_w), target=(target_h, target_w), stages=tuple(sizes))
