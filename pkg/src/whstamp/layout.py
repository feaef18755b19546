"""Key-controlled partition of the flat parameter vector into blocks.

Two independent secrets shape the layout. One seed shuffles the order of
the block sizes, so an attacker cannot tell which stretch of the work
vector forms a transform block of which length. A second seed draws a
global permutation of all parameter positions; the work vector is the
flat vector gathered through that permutation, which decouples block
membership from parameter adjacency in the checkpoint.

Block sizes come from a greedy power-of-two decomposition: as many
max-size blocks as fit, then one block per set bit of the remainder, in
descending size. Every block length is a power of two, which is what the
transform requires.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fwht import is_power_of_two
from .keys import (
    LABEL_BLOCK_SHUFFLE,
    LABEL_PARAM_ASSIGN,
    RandomStream,
    WatermarkKey,
    derive_seed,
)


def plan_blocks(total: int, max_block: int) -> list[int]:
    """Decompose `total` into power-of-two block sizes, each <= max_block."""
    if total < 0:
        raise ValueError("total must be >= 0")
    if not is_power_of_two(max_block):
        raise ValueError(f"max_block must be a power of two, got {max_block}")
    sizes = []
    remaining = total
    while remaining >= max_block:
        sizes.append(max_block)
        remaining -= max_block
    bit = max_block >> 1
    while bit:
        if remaining & bit:
            sizes.append(bit)
        bit >>= 1
    return sizes


@dataclass(frozen=True)
class BlockLayout:
    """Resolved layout: shuffled block sizes plus the parameter permutation."""

    total: int
    max_block: int
    sizes: tuple[int, ...]
    perm: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if sum(self.sizes) != self.total:
            raise ValueError("block sizes must sum to the parameter count")
        if self.perm.shape != (self.total,):
            raise ValueError("permutation length must equal the parameter count")

    @property
    def block_count(self) -> int:
        return len(self.sizes)

    def starts(self) -> np.ndarray:
        """Work-vector offset of each block, in layout order."""
        out = np.zeros(len(self.sizes), dtype=np.int64)
        np.cumsum(np.asarray(self.sizes[:-1], dtype=np.int64), out=out[1:])
        return out

    def block_of(self, position: int) -> int:
        """Index of the block containing a work-vector position."""
        if not 0 <= position < self.total:
            raise IndexError(f"position {position} outside [0, {self.total})")
        return int(np.searchsorted(self.starts(), position, side="right")) - 1

    def size_groups(self) -> dict[int, np.ndarray]:
        """Block start offsets grouped by block size, for batched transforms.

        Keys are block sizes (descending); values are the work-vector start
        offsets of every block of that size, in layout order.
        """
        starts = self.starts()
        sizes = np.asarray(self.sizes, dtype=np.int64)
        groups: dict[int, np.ndarray] = {}
        for size in sorted(set(self.sizes), reverse=True):
            groups[size] = starts[sizes == size]
        return groups

    def gather(self, flat: np.ndarray) -> np.ndarray:
        """Permute the flat parameter vector into work order."""
        if flat.shape != (self.total,):
            raise ValueError("flat vector length mismatch")
        return flat[self.perm]

    def scatter(self, work: np.ndarray) -> np.ndarray:
        """Inverse of gather: put work-order values back in flat order."""
        if work.shape != (self.total,):
            raise ValueError("work vector length mismatch")
        out = np.empty_like(work)
        out[self.perm] = work
        return out


def build_layout(key: WatermarkKey, total: int, max_block: int) -> BlockLayout:
    """Derive the complete key-controlled layout for `total` parameters."""
    if total < 1:
        raise ValueError("need at least one parameter")
    sizes = np.asarray(plan_blocks(total, max_block), dtype=np.int64)
    order_stream = RandomStream(derive_seed(key, LABEL_BLOCK_SHUFFLE))
    order_stream.shuffle(sizes)
    perm_stream = RandomStream(derive_seed(key, LABEL_PARAM_ASSIGN))
    perm = perm_stream.permutation(total)
    return BlockLayout(
        total=total,
        max_block=max_block,
        sizes=tuple(int(s) for s in sizes),
        perm=perm,
    )
