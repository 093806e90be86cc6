"""Adam optimizer with bias correction."""
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings


@dataclass
class AdamState:
    """First/second moments for one parameter."""
    m: np.ndarray
    v: np.ndarray


@dataclass
class Adam:
    parameters: list
    lr: float = field(default_factory=lambda: settings.ANYSIZE_LEARNING_RATE)
    beta1: float = field(default_factory=lambda: settings.ANYSIZE_BETA1)
    beta2: float = field(default_factory=lambda: settings.ANYSIZE_BETA2)
    eps: float = field(default_factory=lambda: settings.ANYSIZE_ADAM_EPS)
    t: int = 0
    states: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.states is None:
            self.states = [
                AdamState(np.zeros_like(p.value), np.zeros_like(p.value)) for p in self.parameters
            ]

    def zero_grad(self):
        for parameter in self.parameters:
            parameter.zero_grad()

    def step(self):
        self.t += 1
        correction1 = 1 - self.beta1 ** self.t
        correction2 = 1 - self.beta2 ** self.t
        for parameter, state in zip(self.parameters, self.states):
            grad = parameter.grad
            state.m *= self.beta1
            state.m += (1 - self.beta1) * grad
            state.v *= self.beta2
            state.v += (1 - self.beta2) * grad * grad
            m_hat = state.m / correction1
            v_hat = state.v / correction2
            parameter.value -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(parameter.value.dtype)

    def hyperparameters(self):
        return {'lr': self.lr, 'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps, 't': self.t}


def adam_step(optimizer):
    """Apply one Adam update to every parameter the optimizer owns."""
    optimizer.step()
    return optimizer.parameters
