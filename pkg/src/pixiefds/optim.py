"""Adaptive-moment gradient ascent with a step learning-rate schedule.

Shared by lexicon training and variational inference. The update is the
standard bias-corrected first/second moment rule; we ascend, so
gradients are added.
"""

import numpy as np


class StepSchedule:
    """lr multiplied by ``decay`` every ``step_epochs`` epochs."""

    def __init__(self, lr, decay, step_epochs):
        if lr <= 0 or not (0 < decay <= 1) or step_epochs <= 0:
            raise ValueError("invalid schedule parameters")
        self.lr = lr
        self.decay = decay
        self.step_epochs = step_epochs

    def at(self, epoch):
        return self.lr * self.decay ** (epoch // self.step_epochs)


class AdamAscent:
    """Maximizes an objective over one or more parameter arrays."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads, lr):
        """Apply one ascent step in place; ``grads`` aligns with params."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m += (1 - b1) * (g - m)
            v += (1 - b2) * (g * g - v)
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p += lr * mhat / (np.sqrt(vhat) + self.eps)
