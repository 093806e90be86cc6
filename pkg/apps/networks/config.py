"""Architecture configuration for the generator and discriminator."""
from dataclasses import asdict, dataclass, field

from django.conf import settings

from apps.resize.interpolation import BILINEAR, MODES


def _default_base():
    return (settings.ANYSIZE_BASE_SIZE, settings.ANYSIZE_BASE_SIZE)


@dataclass(frozen=True)
class GeneratorConfig:
    z_dim: int = field(default_factory=lambda: settings.ANYSIZE_Z_DIM)
    base: tuple = field(default_factory=_default_base)
    stage_channels: tuple = (256, 128, 64, 32, 16)
    output_channels: int = 3
    stages: int = field(default_factory=lambda: settings.ANYSIZE_SCHEDULE_STAGES)
    resize_mode: str = BILINEAR
    max_size: int = field(default_factory=lambda: settings.ANYSIZE_MAX_SIZE)

    def __post_init__(self):
        object.__setattr__(self, 'base', tuple(int(v) for v in self.base))
        object.__setattr__(self, 'stage_channels', tuple(int(v) for v in self.stage_channels))
        if self.z_dim < 1:
            raise ValueError(f'z_dim must be >= 1, got {self.z_dim}')
        if self.stages != len(self.stage_channels):
            raise ValueError(
                f'{self.stages} stages need {self.stages} channel widths, got {self.stage_channels}'
            )
        if self.resize_mode not in MODES:
            raise ValueError(f'Unknown resize mode {self.resize_mode!r}')

    @property
    def projection_channels(self):
        return self.stage_channels[0]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class DiscriminatorConfig:
    conv_channels: tuple = (32, 64, 128, 256)
    input_channels: int = 3
    kernel_size: int = 3
    min_input: tuple = (16, 16)

    def __post_init__(self):
        object.__setattr__(self, 'conv_channels', tuple(int(v) for v in self.conv_channels))
        object.__setattr__(self, 'min_input', tuple(int(v) for v in self.min_input))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)
