"""Small size-agnostic classifier standing in for the Inception network on toy corpora."""
import logging
from dataclasses import asdict, dataclass

import numpy as np

from apps.autodiff import functional as F
from apps.autodiff.layers import Activation, Conv2d, Dense, GlobalAveragePool, Layer, Sequential
from apps.autodiff.optim import Adam
from apps.autodiff.tensor import as_tensor, check_finite, check_image
from apps.core.exceptions import CheckpointCorruptError, DataError
from apps.datasets.batching import BatchLoader
from apps.datasets.toy import COLOUR_FAMILIES
from apps.training.checkpoints import load_checkpoint, restore_model, save_checkpoint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassifierConfig:
    num_classes: int = len(COLOUR_FAMILIES)
    channels: tuple = (8, 16)

    def __post_init__(self):
        object.__setattr__(self, 'channels', tuple(int(v) for v in self.channels))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


class ToyClassifier(Layer):
    """conv s2 -> conv s2 -> GAP -> dense; accepts any image size."""

    def __init__(self, config=None, rng=None, dtype=None):
        super().__init__()
        self.config = config or ClassifierConfig()
        rng = rng if rng is not None else np.random.default_rng()
        layers = []
        in_channels = 3
        for out_channels in self.config.channels:
            layers += [Conv2d(in_channels, out_channels, 3, rng, stride=2, dtype=dtype), Activation('relu')]
            in_channels = out_channels
        self.features = self.add_layer('features', Sequential(*layers))
        self.pool = GlobalAveragePool()
        self.head = self.add_layer('head', Dense(in_channels, self.config.num_classes, rng, dtype))
        self.assign_names('classifier')

    def forward(self, images):
        images = as_tensor(images, self.dtype)
        check_image(images, 'classifier input')
        return self.head(self.pool(self.features(images)))

    def backward(self, grad_logits):
        return self.features.backward(self.pool.backward(self.head.backward(grad_logits)))

    def predict_proba(self, images):
        return F.softmax(self.forward(images))


def batch_labels(loader, position, labels):
    _, members = loader.members(position)
    try:
        return np.array([labels[record.path.name] for record in members], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f'No class label for {exc.args[0]}') from exc


def train_classifier(groups, labels, epochs=4, batch_size=16, seed=0, learning_rate=5e-3, config=None):
    """Fit a ToyClassifier on resolution groups; ``labels`` maps file name -> class.

    Returns the classifier and the per-batch loss history.
    """
    classifier = ToyClassifier(config, np.random.default_rng(seed))
    optimizer = Adam(classifier.parameters(), lr=learning_rate, beta1=0.9)
    loader = BatchLoader(groups, batch_size)
    history = []
    for epoch in range(epochs):
        loader.reset()
        epoch_losses = []
        for position in range(len(loader)):
            images, _ = loader.next_batch()
            targets = batch_labels(loader, position, labels)
            optimizer.zero_grad()
            loss, grad = F.cross_entropy(classifier.forward(images), targets)
            classifier.backward(grad.astype(classifier.dtype))
            optimizer.step()
            epoch_losses.append(loss)
        history.extend(epoch_losses)
        logger.info('Classifier epoch %d/%d: mean loss %.4f', epoch + 1, epochs, np.mean(epoch_losses))
    return classifier, history


def accuracy(classifier, groups, labels, batch_size=16):
    loader = BatchLoader(groups, batch_size)
    correct = total = 0
    for position in range(len(loader)):
        images, _ = loader.next_batch()
        targets = batch_labels(loader, position, labels)
        correct += int(np.sum(classifier.predict_proba(images).argmax(axis=1) == targets))
        total += len(targets)
    return correct / total


def probability_source(images, classifier):
    """N x C class probabilities for a batch or an iterable of batches/single images."""
    if isinstance(images, np.ndarray):
        images = [images]
    rows = []
    for batch in images:
        batch = np.asarray(batch)
        if batch.ndim == 3:
            batch = batch[None]
        probs = np.asarray(classifier.predict_proba(batch), dtype=np.float64)
        check_finite(probs, 'classifier output')
        rows.append(probs)
    return np.concatenate(rows, axis=0)


def save_classifier(path, classifier, **counters):
    return save_checkpoint(
        path,
        models={'classifier': classifier},
        counters=counters,
        configs={'classifier': classifier.config.to_dict()},
    )


def load_classifier(path):
    checkpoint = load_checkpoint(path)
    try:
        config = ClassifierConfig.from_dict(checkpoint.configs['classifier'])
    except (KeyError, TypeError) as exc:
        raise CheckpointCorruptError(f'Checkpoint {path} has no classifier config') from exc
    classifier = ToyClassifier(config, np.random.default_rng(0))
    restore_model(checkpoint, 'classifier', classifier)
    return classifier
