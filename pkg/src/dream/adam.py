"""Adam with bias correction and a constant learning rate.

Per step: m <- xi1*m + (1-xi1)*g;  v <- xi2*v + (1-xi2)*g^2;
bias-corrected mhat = m/(1-xi1^s), vhat = v/(1-xi2^s);
update beta <- beta - psi * mhat / (sqrt(vhat) + eps).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValidationError("decay rates must lie in [0, 1)")
        if self.lr <= 0:
            raise ValidationError("learning rate must be positive")


def adam_init(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState(
        lr=lr, beta1=beta1, beta2=beta2, eps=eps,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(state: AdamState, params, grads):
    """One in-place update of every parameter array; returns (params, state)."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValidationError("parameter/gradient count mismatch")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValidationError(f"gradient shape {g.shape} != parameter {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
