"""ADAM optimizer over (name, param, grad) triples."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard ADAM with bias correction, updating params in place.

    ``triples`` is a list of (name, param, grad) where param and grad are
    shared arrays: callers accumulate into grad, this class reads it.
    """

    def __init__(self, triples, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.triples = list(triples)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p, _ in self.triples}
        self.v = {name: np.zeros_like(p) for name, p, _ in self.triples}

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p, g in self.triples:
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def zero_grads(self):
        for _, _, g in self.triples:
            g[...] = 0.0
