"""Adversarial training over single-resolution batches of varying size."""
import csv
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.autodiff import functional as F
from apps.autodiff.optim import Adam
from apps.core.exceptions import CheckpointCorruptError, NonFiniteError, ShapeError
from apps.datasets.batching import BatchLoader
from apps.datasets.imageio import contact_sheet, to_uint8, write_png
from apps.networks.builders import build_networks
from apps.networks.config import DiscriminatorConfig, GeneratorConfig

from .checkpoints import load_checkpoint, restore_model, restore_optimizer, restore_rng, save_checkpoint

logger = logging.getLogger(__name__)

LOSS_HEADER = ['step', 'epoch', 'h', 'w', 'd_loss', 'g_loss']
SAMPLE_SIZES = 4
REAL_LABEL = 1.0
FAKE_LABEL = 0.0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = field(default_factory=lambda: settings.ANYSIZE_EPOCHS)
    batch_size: int = field(default_factory=lambda: settings.ANYSIZE_BATCH_SIZE)
    max_size: int = field(default_factory=lambda: settings.ANYSIZE_MAX_SIZE)
    z_dim: int = field(default_factory=lambda: settings.ANYSIZE_Z_DIM)
    learning_rate: float = field(default_factory=lambda: settings.ANYSIZE_LEARNING_RATE)
    beta1: float = field(default_factory=lambda: settings.ANYSIZE_BETA1)
    beta2: float = field(default_factory=lambda: settings.ANYSIZE_BETA2)
    eps: float = field(default_factory=lambda: settings.ANYSIZE_ADAM_EPS)
    seed: int = field(default_factory=lambda: settings.ANYSIZE_SEED)
    checkpoint_interval: int = field(default_factory=lambda: settings.ANYSIZE_CHECKPOINT_INTERVAL)
    output_dir: Path = field(default_factory=lambda: settings.ANYSIZE_OUTPUT_DIR)
    prefetch: bool = False
    samples: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'output_dir', Path(self.output_dir))
        if self.epochs < 1:
            raise ValueError(f'epochs must be >= 1, got {self.epochs}')
        if self.batch_size < 1:
            raise ValueError(f'batch_size must be >= 1, got {self.batch_size}')
        if self.checkpoint_interval < 1:
            raise ValueError(f'checkpoint_interval must be >= 1, got {self.checkpoint_interval}')
        if self.max_size < settings.ANYSIZE_BASE_SIZE:
            raise ValueError(f'max_size {self.max_size} is below the generator base {settings.ANYSIZE_BASE_SIZE}')

    def to_dict(self):
        data = asdict(self)
        data['output_dir'] = str(self.output_dir)
        return data


class Trainer:
    """Owns both networks, both optimizers and the latent-vector stream.

    Labels are real=1 and fake=0; one discriminator step precedes each
    generator step, and both draw fresh latent vectors.
    """

    def __init__(self, config=None, generator_config=None, discriminator_config=None):
        self.config = config or TrainConfig()
        generator_config = generator_config or GeneratorConfig(
            z_dim=self.config.z_dim, max_size=self.config.max_size,
        )
        discriminator_config = discriminator_config or DiscriminatorConfig()
        self.generator, self.discriminator = build_networks(
            self.config.seed, generator_config, discriminator_config,
        )
        adam = dict(lr=self.config.learning_rate, beta1=self.config.beta1, beta2=self.config.beta2, eps=self.config.eps)
        self.g_optimizer = Adam(self.generator.parameters(), **adam)
        self.d_optimizer = Adam(self.discriminator.parameters(), **adam)
        self.rng = np.random.default_rng([self.config.seed, 1])
        self.epoch = 0
        self.step = 0
        self.last_size = None

    @property
    def z_dim(self):
        return self.generator.config.z_dim

    def sample_latent(self, count):
        return self.rng.standard_normal((count, self.z_dim)).astype(self.generator.dtype)

    def _discriminate(self, images, label):
        """Accumulate D gradients for ``images`` against a constant label; returns (loss, grad wrt images)."""
        probs = F.sigmoid(self.discriminator.forward_logits(images))
        target = np.full_like(probs, label)
        loss, _ = F.bce_loss(probs, target)
        grad_images = self.discriminator.backward_logits(F.sigmoid_bce_grad(probs, target))
        return loss, grad_images

    def discriminator_step(self, real):
        height, width = real.shape[2:]
        fake = self.generator.forward(self.sample_latent(len(real)), (height, width))
        if fake.shape != real.shape:
            raise ShapeError(f'Fake batch {fake.shape} does not match real batch {real.shape}')
        self.d_optimizer.zero_grad()
        real_loss, _ = self._discriminate(real, REAL_LABEL)
        fake_loss, _ = self._discriminate(fake, FAKE_LABEL)
        self.d_optimizer.step()
        return real_loss + fake_loss

    def generator_step(self, z, size):
        """One G update pushing D(G(z, size)) toward real; D weights are untouched."""
        self.g_optimizer.zero_grad()
        fake = self.generator.forward(z, size)
        if fake.shape[2:] != tuple(size):
            raise ShapeError(f'Generator produced {fake.shape[2:]} for requested size {tuple(size)}')
        loss, grad_images = self._discriminate(fake, REAL_LABEL)
        self.discriminator.zero_grad()
        self.generator.backward(grad_images)
        self.g_optimizer.step()
        return loss

    def train_step(self, real):
        """D update then G update at the real batch's spatial size; returns (d_loss, g_loss)."""
        real = np.asarray(real, dtype=self.discriminator.dtype)
        size = tuple(real.shape[2:])
        self.last_size = size
        d_loss = self.discriminator_step(real)
        g_loss = self.generator_step(self.sample_latent(len(real)), size)
        self.step += 1
        if not (math.isfinite(d_loss) and math.isfinite(g_loss)):
            logger.error(
                'Non-finite loss at step %d (epoch %d, batch %dx%d): d_loss=%r g_loss=%r',
                self.step, self.epoch, size[0], size[1], d_loss, g_loss,
            )
            raise NonFiniteError(
                f'Non-finite loss at step {self.step}, last batch size {size[0]}x{size[1]}'
            )
        return d_loss, g_loss

    # Persistence ---------------------------------------------------------

    def configs(self):
        return {
            'train': self.config.to_dict(),
            'generator': self.generator.config.to_dict(),
            'discriminator': self.discriminator.config.to_dict(),
        }

    def save(self, path):
        return save_checkpoint(
            path,
            models={'generator': self.generator, 'discriminator': self.discriminator},
            optimizers={'generator': self.g_optimizer, 'discriminator': self.d_optimizer},
            rng=self.rng,
            counters={'epoch': self.epoch, 'step': self.step},
            configs=self.configs(),
        )

    @classmethod
    def from_checkpoint(cls, path, **overrides):
        """Rebuild a trainer exactly as saved; ``overrides`` replace stored TrainConfig fields."""
        checkpoint = load_checkpoint(path)
        configs = checkpoint.configs
        train_config = TrainConfig(**{**configs['train'], **overrides})
        trainer = cls(
            train_config,
            GeneratorConfig.from_dict(configs['generator']),
            DiscriminatorConfig.from_dict(configs['discriminator']),
        )
        restore_model(checkpoint, 'generator', trainer.generator)
        restore_model(checkpoint, 'discriminator', trainer.discriminator)
        restore_optimizer(checkpoint, 'generator', trainer.g_optimizer)
        restore_optimizer(checkpoint, 'discriminator', trainer.d_optimizer)
        trainer.rng = restore_rng(checkpoint)
        trainer.epoch = checkpoint.counters['epoch']
        trainer.step = checkpoint.counters['step']
        logger.info('Resumed from %s at epoch %d, step %d', path, trainer.epoch, trainer.step)
        return trainer

    # Loop ----------------------------------------------------------------

    @property
    def loss_log_path(self):
        return self.config.output_dir / 'losses.csv'

    def checkpoint_path(self, epoch):
        return self.config.output_dir / 'checkpoints' / f'epoch_{epoch:04d}.json'

    def save_samples(self, groups):
        """Sheet of one fixed latent vector rendered at the largest groups' sizes."""
        z = np.random.default_rng([self.config.seed, 2]).standard_normal((1, self.z_dim))
        images = [
            to_uint8(self.generator.generate(z, group.size)[0])
            for group in groups[:SAMPLE_SIZES]
        ]
        return write_png(contact_sheet(images), self.config.output_dir / 'samples' / f'epoch_{self.epoch:04d}.png')

    def train(self, groups):
        """Run the remaining epochs; returns the written checkpoint paths.

        When resuming past epoch 0 the loss log is cut back to the restored
        step and appended to.
        """
        self.config.output_dir.mkdir(parents=True, exist_ok=True)
        loader = BatchLoader(groups, self.config.batch_size, prefetch=self.config.prefetch)
        resuming = self.epoch > 0 and self.loss_log_path.exists()
        if resuming:
            truncate_loss_log(self.loss_log_path, self.step)
        checkpoints = []
        logger.info(
            'Training epochs %d..%d over %d group(s), %d batch(es) per epoch',
            self.epoch + 1, self.config.epochs, len(groups), len(loader),
        )
        try:
            with self.loss_log_path.open('a' if resuming else 'w', newline='') as handle:
                writer = csv.writer(handle)
                if not resuming:
                    writer.writerow(LOSS_HEADER)
                while self.epoch < self.config.epochs:
                    loader.reset()
                    for images, _ in loader:
                        d_loss, g_loss = self.train_step(images)
                        height, width = images.shape[2:]
                        writer.writerow([self.step, self.epoch + 1, height, width, repr(d_loss), repr(g_loss)])
                    handle.flush()
                    self.epoch += 1
                    logger.info('Epoch %d/%d finished at step %d', self.epoch, self.config.epochs, self.step)
                    if self.config.samples:
                        self.save_samples(groups)
                    if self.epoch % self.config.checkpoint_interval == 0 or self.epoch == self.config.epochs:
                        checkpoints.append(self.save(self.checkpoint_path(self.epoch)))
        finally:
            loader.close()
        return checkpoints


def truncate_loss_log(path, step):
    """Drop rows written after ``step``, e.g. by a run that died between checkpoints."""
    path = Path(path)
    with path.open(newline='') as handle:
        rows = list(csv.reader(handle))
    kept = [row for row in rows[1:] if row and int(row[0]) <= step]
    dropped = len(rows) - 1 - len(kept)
    if dropped:
        logger.warning('Dropping %d loss log row(s) past step %d from %s', dropped, step, path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(LOSS_HEADER)
        writer.writerows(kept)
    return len(kept)


def read_loss_log(path):
    with Path(path).open(newline='') as handle:
        return [
            {
                'step': int(row['step']), 'epoch': int(row['epoch']),
                'h': int(row['h']), 'w': int(row['w']),
                'd_loss': float(row['d_loss']), 'g_loss': float(row['g_loss']),
            }
            for row in csv.DictReader(handle)
        ]


def load_generator(path):
    """Generator rebuilt from a training checkpoint, plus the checkpoint itself."""
    checkpoint = load_checkpoint(path)
    try:
        generator_config = GeneratorConfig.from_dict(checkpoint.configs['generator'])
    except (KeyError, TypeError) as exc:
        raise CheckpointCorruptError(f'Checkpoint {path} has no usable generator config') from exc
    generator = build_networks(0, generator_config)[0]
    restore_model(checkpoint, 'generator', generator)
    return generator, checkpoint
