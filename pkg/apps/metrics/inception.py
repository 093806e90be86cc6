"""Inception Score over a matrix of per-sample class probabilities."""
from dataclasses import dataclass

import numpy as np
from scipy.stats import entropy

from apps.core.exceptions import NonFiniteError, ScoreError, ShapeError

ROW_SUM_TOLERANCE = 1e-5


@dataclass(frozen=True)
class ScoreResult:
    mean: float
    sd: float
    splits: int
    samples: int

    def __str__(self):
        return f'{self.mean:.4f} ± {self.sd:.4f}'


def check_distributions(probs):
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 1:
        raise ShapeError(f'Expected an N x C probability matrix, got shape {probs.shape}')
    if not np.all(np.isfinite(probs)):
        raise NonFiniteError('Probability matrix contains NaN or infinite values')
    if np.any(probs < 0):
        raise ScoreError('Probabilities must be non-negative')
    worst = float(np.max(np.abs(probs.sum(axis=1) - 1)))
    if worst > ROW_SUM_TOLERANCE:
        raise ScoreError(f'Every row must sum to 1 (worst deviation {worst:.2e})')
    return probs


def inception_score(probs, splits=10):
    """exp(mean KL(p(y|x) || p(y))) per split, reported as mean and population SD over splits."""
    probs = check_distributions(probs)
    if splits < 1 or probs.shape[0] < splits:
        raise ScoreError(f'Need at least {splits} samples for {splits} splits, got {probs.shape[0]}')
    scores = []
    for part in np.array_split(probs, splits):
        marginal = part.mean(axis=0)
        kl = entropy(part.T, np.broadcast_to(marginal[:, None], part.T.shape))
        scores.append(float(np.exp(np.mean(kl))))
    return ScoreResult(float(np.mean(scores)), float(np.std(scores)), splits, probs.shape[0])
