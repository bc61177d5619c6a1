"""Parametric library of ground-truth covariate effects.

All effects are total finite functions; covariates entering them live on
[0, 1] (nodal attributes are uniform draws, endogenous statistics are
min-max rescaled).  Evaluation routes through the same code the sampling
kernels use, so simulated weights and scored pairs agree bitwise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .kernels import (
    EFF_BUMP,
    EFF_CONSTANT,
    EFF_EXPDECAY,
    EFF_LINEAR,
    EFF_QUADRATIC,
    EFF_SINE,
    effect_values,
)

_KINDS = {
    "constant": (EFF_CONSTANT, 0),
    "linear": (EFF_LINEAR, 1),      # slope
    "sine": (EFF_SINE, 3),          # amplitude, frequency, phase
    "quadratic": (EFF_QUADRATIC, 2),  # center, scale
    "expdecay": (EFF_EXPDECAY, 1),  # rate
    "bump": (EFF_BUMP, 3),          # center, width, height
}


@dataclass(frozen=True)
class EffectSpec:
    """One smooth effect f_k applied to a single covariate."""

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown effect kind {self.kind!r}")
        _, arity = _KINDS[self.kind]
        params = tuple(float(p) for p in self.params)
        if len(params) != arity:
            raise ValidationError(
                f"effect {self.kind!r} takes {arity} parameters, got {len(params)}"
            )
        if self.kind == "bump" and params[1] == 0.0:
            raise ValidationError("bump width must be non-zero")
        object.__setattr__(self, "params", params)

    @property
    def code(self) -> int:
        return _KINDS[self.kind][0]

    def padded_params(self):
        out = np.zeros(3)
        out[: len(self.params)] = self.params
        return out

    def __call__(self, x):
        return effect_values(self.code, self.padded_params(), x)

    def label(self) -> str:
        inner = ",".join(repr(p) for p in self.params)
        return f"{self.kind}({inner})"


def constant() -> EffectSpec:
    return EffectSpec("constant")


def parse_effect(text: str) -> EffectSpec:
    """Parse 'kind(p1,p2,...)' or bare 'kind'."""
    text = text.strip()
    if "(" in text:
        if not text.endswith(")"):
            raise ValidationError(f"malformed effect {text!r}")
        kind, inner = text[:-1].split("(", 1)
        params = tuple(float(p) for p in inner.split(",")) if inner.strip() else ()
    else:
        kind, params = text, ()
    return EffectSpec(kind.strip(), params)


def encode_effects(effects):
    """Kernel encoding: (codes (E,), params (E,3))."""
    codes = np.array([e.code for e in effects], dtype=np.int64)
    params = np.zeros((len(effects), 3))
    for i, e in enumerate(effects):
        params[i] = e.padded_params()
    return codes, params
