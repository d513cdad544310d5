"""Scalar neuron nonlinearities: rectified hyperbolic tangent and ReLU.

Both functions gate on the sign of the raw input and return exact 0.0 for
non-positive inputs, so downstream code can rely on exact zero tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class ActivationVariant(enum.Enum):
    RECTIFIED_TANH = "rectified_tanh"
    RELU = "relu"


@dataclass(frozen=True)
class ActivationKind:
    """Which nonlinearity a layer applies.

    ``coefficient`` is the curve-steepness parameter of the rectified tanh
    and is ignored by ReLU.
    """

    variant: ActivationVariant
    coefficient: float = 1.0

    def __post_init__(self):
        if self.variant is ActivationVariant.RECTIFIED_TANH:
            if not math.isfinite(self.coefficient) or self.coefficient <= 0:
                raise ValueError(
                    f"rectified tanh coefficient must be positive and finite, "
                    f"got {self.coefficient}"
                )

    @classmethod
    def rectified_tanh(cls, coefficient: float) -> "ActivationKind":
        return cls(ActivationVariant.RECTIFIED_TANH, coefficient)

    @classmethod
    def relu(cls) -> "ActivationKind":
        return cls(ActivationVariant.RELU)


def tanh_rec(x: float, c: float) -> float:
    """Rectified hyperbolic tangent: tanh(c * x) for x > 0, else 0.

    Evaluated through the library tanh routine, which is numerically stable
    for any magnitude of c * x (the two-exponential form overflows for
    large arguments). The result lies in [0, 1).
    """
    if not math.isfinite(x):
        raise ValueError(f"input must be finite, got {x}")
    if not math.isfinite(c) or c <= 0:
        raise ValueError(f"coefficient must be positive and finite, got {c}")
    if x > 0:
        return math.tanh(c * x)
    return 0.0


def relu(x: float) -> float:
    """Rectified linear unit: x for x > 0, else 0."""
    if not math.isfinite(x):
        raise ValueError(f"input must be finite, got {x}")
    if x > 0:
        return x
    return 0.0


def apply_activation(kind: ActivationKind, preactivation: float) -> float:
    """Apply the configured nonlinearity to a raw weighted sum."""
    if kind.variant is ActivationVariant.RECTIFIED_TANH:
        return tanh_rec(preactivation, kind.coefficient)
    return relu(preactivation)
