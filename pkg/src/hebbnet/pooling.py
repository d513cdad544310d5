"""Block-pooling connectivity maps between square-arrangeable layers.

A pooling map connects an n-cell source layer (arranged as a square grid)
to a smaller m-cell destination layer. With connectivity 0 each destination
cell receives exactly one r x r block of source cells, where r is the ratio
of the grid side lengths; a connectivity of v >= 1 widens each receptive
field to the (2v+1) x (2v+1) neighborhood of blocks, producing overlap.
All connected pairs share one constant weight value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


def _square_side(size: int, what: str) -> int:
    side = math.isqrt(size)
    if side * side != size:
        raise ConfigError(f"{what} size {size} is not a perfect square")
    return side


@dataclass(frozen=True)
class PoolingSpec:
    """Geometry and weight value of one pooling map.

    ``connectivity`` is the overlap radius v measured in destination
    blocks; 0 gives the disjoint block partition.
    """

    source_size: int
    dest_size: int
    connectivity: int = 0
    weight_value: float = 0.50

    def __post_init__(self):
        src_side = _square_side(self.source_size, "source layer")
        dest_side = _square_side(self.dest_size, "destination layer")
        if self.dest_size >= self.source_size:
            raise ConfigError(
                f"pooling must reduce size, got {self.source_size} -> {self.dest_size}"
            )
        if src_side % dest_side != 0:
            raise ConfigError(
                f"side ratio {src_side}/{dest_side} is not an integer; "
                f"cannot partition the source grid into equal blocks"
            )
        if not 0 <= self.connectivity <= src_side - 1:
            raise ConfigError(
                f"connectivity must lie in [0, {src_side - 1}], got {self.connectivity}"
            )
        if not -1 <= self.weight_value <= 1:
            raise ConfigError(
                f"pooling weight value must lie in [-1, 1], got {self.weight_value}"
            )

    @property
    def source_side(self) -> int:
        return math.isqrt(self.source_size)

    @property
    def dest_side(self) -> int:
        return math.isqrt(self.dest_size)

    @property
    def block_ratio(self) -> int:
        """Side length r of the source block feeding one destination cell."""
        return self.source_side // self.dest_side


def connectivity_from_factor(factor: float) -> int:
    """Derive the integer overlap radius from a fractional connectivity factor.

    The integer part of the factor is the radius; a fraction below 1 spills
    into no extra block and truncates to 0.
    """
    if factor < 0 or not math.isfinite(factor):
        raise ConfigError(f"connectivity factor must be non-negative, got {factor}")
    return int(math.floor(factor))


def decompose_index(x: int, side: int) -> tuple[int, int]:
    """Row-major (row, column) coordinates of flat index x in a side x side grid."""
    if side <= 0:
        raise ValueError(f"grid side must be positive, got {side}")
    if not 0 <= x < side * side:
        raise ValueError(f"index {x} out of range for a {side}x{side} grid")
    return x // side, x % side


def pooling_weight(x: int, y: int, spec: PoolingSpec) -> float:
    """Weight between source cell x and destination cell y: the constant
    value if y's block neighborhood covers x, else 0."""
    if not 0 <= x < spec.source_size:
        raise ValueError(f"source index {x} out of range (size {spec.source_size})")
    if not 0 <= y < spec.dest_size:
        raise ValueError(f"destination index {y} out of range (size {spec.dest_size})")
    i1, j1 = decompose_index(x, spec.source_side)
    i2, j2 = decompose_index(y, spec.dest_side)
    r = spec.block_ratio
    if abs(i1 // r - i2) <= spec.connectivity and abs(j1 // r - j2) <= spec.connectivity:
        return spec.weight_value
    return 0.0


def build_pooling_matrix(spec: PoolingSpec) -> np.ndarray:
    """Dense (dest_size x source_size) weight matrix for the map.

    Built vectorized from the block-coordinate test; entry [y, x] equals
    pooling_weight(x, y, spec).
    """
    r = spec.block_ratio
    src = np.arange(spec.source_size)
    dst = np.arange(spec.dest_size)
    bi = (src // spec.source_side) // r
    bj = (src % spec.source_side) // r
    i2 = dst // spec.dest_side
    j2 = dst % spec.dest_side
    connected = (np.abs(bi[None, :] - i2[:, None]) <= spec.connectivity) & (
        np.abs(bj[None, :] - j2[:, None]) <= spec.connectivity
    )
    return np.where(connected, spec.weight_value, 0.0)
