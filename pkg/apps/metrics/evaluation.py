"""Inception Score for real corpora and generated samples."""
import logging

import numpy as np

from apps.datasets.batching import BatchLoader

from .classifier import probability_source
from .inception import inception_score

logger = logging.getLogger(__name__)


def generated_batches(generator, count, sizes, rng, batch_size=16):
    """Yield ``count`` generated images, cycling through ``sizes`` one batch per size."""
    produced = 0
    index = 0
    while produced < count:
        size = sizes[index % len(sizes)]
        batch = min(batch_size, count - produced)
        z = rng.standard_normal((batch, generator.config.z_dim))
        yield generator.generate(z, size)
        produced += batch
        index += 1


def score_generator(generator, classifier, count, sizes, seed=0, splits=10, batch_size=16):
    rng = np.random.default_rng(seed)
    probs = probability_source(generated_batches(generator, count, sizes, rng, batch_size), classifier)
    result = inception_score(probs, splits)
    logger.info('IS over %d generated image(s): %s', result.samples, result)
    return result


def score_corpus(groups, classifier, splits=10, batch_size=16):
    loader = BatchLoader(groups, batch_size)
    probs = probability_source((images for images, _ in loader), classifier)
    result = inception_score(probs, splits)
    logger.info('IS over %d real image(s): %s', result.samples, result)
    return result
