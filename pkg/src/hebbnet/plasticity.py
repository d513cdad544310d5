"""Weight-update rules and the bounding step that keeps weights in [-1, 1].

Two supervised Hebbian-style rules are provided. The compressed rule
branches on the co-activation product x * y against a threshold; the
extended rule branches on the individual signs of x, y and the current
weight, with separate rates for potentiation, depression, and the
idle-input case. A plain Hebb rule (delta = eta * x * y) is kept as a
baseline.

All rules share one convention: a weight of exactly 0.0 means "no synapse",
and a new synapse is created at ``creation_value`` when co-activation is
strong enough. The rules return a raw delta; :func:`bound_weight` applies
it while enforcing sign stability (an excitatory weight cannot silently
become inhibitory) and handling saturation past +/-1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .activations import tanh_rec


class RuleVariant(enum.Enum):
    COMPRESSED = "compressed"
    EXTENDED = "extended"
    PLAIN_HEBB = "plain"


@dataclass(frozen=True)
class HardReset:
    """On saturation past +/-1, snap the weight back to +/-reset_magnitude."""

    reset_magnitude: float = 0.90

    def __post_init__(self):
        if not 0 < self.reset_magnitude < 1:
            raise ValueError(
                f"reset magnitude must lie in (0, 1), got {self.reset_magnitude}"
            )


@dataclass(frozen=True)
class Squash:
    """On saturation past +/-1, pass the weight through tanh_rec(|w|, c_weights)."""

    c_weights: float = 0.50

    def __post_init__(self):
        if not (math.isfinite(self.c_weights) and self.c_weights > 0):
            raise ValueError(f"c_weights must be positive, got {self.c_weights}")


Bounding = HardReset | Squash


@dataclass(frozen=True)
class PlasticityParams:
    """Learning rates and structural constants for the update rules.

    eta_ltp2 defaults to eta_ltd when not given: both govern sub-threshold
    adjustments and the extended rule's idle-input branches are the only
    consumers.
    """

    eta_ltp: float = 0.001
    eta_ltd: float = 0.0001
    eta_ltp2: float | None = None
    threshold: float = 0.25
    creation_value: float = 0.50
    creation_requires_threshold: bool = True
    variant: RuleVariant = RuleVariant.COMPRESSED
    bounding: Bounding = field(default_factory=HardReset)

    def __post_init__(self):
        if self.eta_ltp2 is None:
            object.__setattr__(self, "eta_ltp2", self.eta_ltd)
        for name in ("eta_ltp", "eta_ltd", "eta_ltp2"):
            rate = getattr(self, name)
            if not (math.isfinite(rate) and rate > 0):
                raise ValueError(f"{name} must be a positive real, got {rate}")
        if not 0 <= self.threshold <= 1:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold}")
        if not 0 < self.creation_value <= 1:
            raise ValueError(
                f"creation value must lie in (0, 1], got {self.creation_value}"
            )
        if not isinstance(self.bounding, (HardReset, Squash)):
            raise ValueError(f"unknown bounding mode: {self.bounding!r}")


def _check_xyw(x: float, y: float, w: float) -> None:
    if not 0 <= x <= 1:
        raise ValueError(f"source activation must lie in [0, 1], got {x}")
    if not 0 <= y <= 1:
        raise ValueError(f"destination activation must lie in [0, 1], got {y}")
    if not -1 <= w <= 1:
        raise ValueError(f"weight must lie in [-1, 1], got {w}")


def delta_w_compressed(x: float, y: float, w: float, p: PlasticityParams) -> float:
    """Compressed rule: threshold the co-activation product.

    Returns creation_value for a missing synapse (subject to the threshold
    when creation_requires_threshold), +eta_ltp * x * y at or above
    threshold, and -eta_ltp * x * y below it.
    """
    _check_xyw(x, y, w)
    product = x * y
    if w == 0.0:
        if product >= p.threshold or not p.creation_requires_threshold:
            return p.creation_value
        return 0.0
    if product >= p.threshold:
        return p.eta_ltp * product
    return -(p.eta_ltp * product)


def delta_w_extended(x: float, y: float, w: float, p: PlasticityParams) -> float:
    """Extended rule: branch on the signs of x, y and w.

    Active-active pairs potentiate (or deepen an inhibitory weight);
    an active input with a silent output depresses toward zero; a silent
    input with an active output nudges by eta_ltp2; synapse creation
    requires co-activation at or above threshold. Anything else leaves
    the weight alone.
    """
    _check_xyw(x, y, w)
    if x > 0.0 and y > 0.0:
        if w > 0.0:
            return p.eta_ltp * (x * y)
        if w < 0.0:
            return -(p.eta_ltp * (x * y))
    elif x > 0.0 and y == 0.0:
        if w > 0.0:
            return -(p.eta_ltd * x)
        if w < 0.0:
            return p.eta_ltd * x
    elif x == 0.0 and y > 0.0:
        if w > 0.0:
            return p.eta_ltp2 * y
        if w < 0.0:
            return -(p.eta_ltp2 * y)
    if w == 0.0 and x * y >= p.threshold:
        return p.creation_value
    return 0.0


def delta_w_plain(x: float, y: float, eta: float) -> float:
    """Plain Hebb baseline: delta = eta * x * y."""
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError(f"learning rate must be positive, got {eta}")
    _check_xyw(x, y, 0.0)
    return eta * (x * y)


def weight_delta(x: float, y: float, w: float, p: PlasticityParams) -> float:
    """Dispatch to the rule selected by ``p.variant``."""
    if p.variant is RuleVariant.COMPRESSED:
        return delta_w_compressed(x, y, w, p)
    if p.variant is RuleVariant.EXTENDED:
        return delta_w_extended(x, y, w, p)
    return delta_w_plain(x, y, p.eta_ltp)


def bound_weight(w_old: float, delta: float, p: PlasticityParams) -> float:
    """Apply a delta while keeping the weight in [-1, 1] and sign-stable.

    A weight that would cross zero is reset to exactly 0.0 instead (a
    neuron does not flip between excitatory and inhibitory). A weight
    pushed past +/-1 is brought back by the configured bounding mode:
    hard reset to +/-reset_magnitude, or a tanh squash with coefficient
    c_weights.
    """
    if not -1 <= w_old <= 1:
        raise ValueError(f"weight must lie in [-1, 1], got {w_old}")
    w_raw = w_old + delta
    if w_old > 0.0 and w_raw < 0.0:
        return 0.0
    if w_old < 0.0 and w_raw > 0.0:
        return 0.0
    if w_raw > 1.0:
        if isinstance(p.bounding, HardReset):
            return p.bounding.reset_magnitude
        return tanh_rec(w_raw, p.bounding.c_weights)
    if w_raw < -1.0:
        if isinstance(p.bounding, HardReset):
            return -p.bounding.reset_magnitude
        return -tanh_rec(-w_raw, p.bounding.c_weights)
    return w_raw
