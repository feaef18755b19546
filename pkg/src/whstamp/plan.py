"""Key-controlled assignment of message bits to hiding positions.

Each message bit gets a unique position in the space of (coefficient,
bit-slot) pairs: n_p coefficients times l low bits each. Positions are
drawn without replacement from a seeded stream, so the map is injective
(no bit ever overwrites another) and reproducible from the key alone.

A flat position p in [0, n_p*l) decodes as coefficient p // l, bit slot
p % l; the slot addresses the low bits of the scaled integer coefficient's
magnitude. The decode convention is a protocol constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityExceededError
from .keys import DistinctSampler, RandomStream, SeedValue

# Framing adds a 32-bit length field and a 256-bit digest around the payload.
FRAME_OVERHEAD_BITS = 288


@dataclass(frozen=True)
class BitPosition:
    """Where one message bit lives: which coefficient, which low bit."""

    coeff_index: int
    bit_index: int


@dataclass(frozen=True)
class HidingPlan:
    """Ordered hiding positions for every message bit.

    coeff_index[i] / bit_index[i] locate message bit i. Positions are
    pairwise distinct by construction.
    """

    coeff_index: np.ndarray
    bit_index: np.ndarray
    n_p: int
    l: int

    def __len__(self) -> int:
        return self.coeff_index.shape[0]

    @property
    def bits(self) -> int:
        return len(self)

    def positions(self) -> Iterator[BitPosition]:
        for c, b in zip(self.coeff_index.tolist(), self.bit_index.tolist()):
            yield BitPosition(c, b)


def capacity(n_p: int, l: int) -> int:
    """Maximum hideable bits: l low bits in each of n_p coefficients."""
    if n_p < 0:
        raise ValueError("n_p must be >= 0")
    if l < 1:
        raise ValueError("l must be >= 1")
    return n_p * l


def recommend_payload_bits(n_p: int, density: float, l: int = 4) -> int:
    """Payload bits that keep total hidden bits near `density` per coefficient.

    Budget floor(n_p * density) bits, minus the fixed framing overhead,
    floored at zero.
    """
    if not 0.0 < density <= l:
        raise ValueError(f"density must be in (0, {l}], got {density}")
    budget = int(np.floor(n_p * density))
    return max(budget - FRAME_OVERHEAD_BITS, 0)


class PlanBuilder:
    """Incremental plan construction over one seeded stream.

    take(k) appends k more positions; the running plan after takes of
    k1, ..., km equals build_plan(k1 + ... + km, ...). Extraction uses
    this to read the length field before it knows the full message size.
    """

    def __init__(self, n_p: int, l: int, seed: SeedValue):
        if n_p < 1:
            raise ValueError("n_p must be >= 1")
        if l < 1:
            raise ValueError("l must be >= 1")
        self.n_p = n_p
        self.l = l
        self._sampler = DistinctSampler(RandomStream(seed), n_p * l)
        self._parts: list[np.ndarray] = []
        self._count = 0

    @property
    def bits(self) -> int:
        return self._count

    def take(self, count: int) -> None:
        if count < 0:
            raise ValueError("count must be >= 0")
        if self._count + count > self.n_p * self.l:
            raise CapacityExceededError(
                f"{self._count + count} bits exceed capacity {self.n_p * self.l}"
            )
        if count:
            self._parts.append(self._sampler.take(count))
            self._count += count

    def plan(self) -> HidingPlan:
        flat = (
            np.concatenate(self._parts)
            if self._parts
            else np.empty(0, dtype=np.int64)
        )
        return HidingPlan(
            coeff_index=flat // self.l,
            bit_index=flat % self.l,
            n_p=self.n_p,
            l=self.l,
        )


def build_plan(M: int, n_p: int, l: int, seed: SeedValue) -> HidingPlan:
    """Plan for an M-bit message; raises CapacityExceededError if M > n_p*l."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if M > capacity(n_p, l):
        raise CapacityExceededError(f"{M} bits exceed capacity {n_p * l}")
    builder = PlanBuilder(n_p, l, seed)
    builder.take(M)
    return builder.plan()
