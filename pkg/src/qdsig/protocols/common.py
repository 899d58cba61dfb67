"""Shared record types for the protocol harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..bits import BitString, random_bits


class Outcome(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    ABORT = "Abort"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    level: int | None = None
    detail: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.outcome is Outcome.ACCEPT and self.level is not None and self.level < 0:
            raise ValueError("acceptance levels start at 0")

    @classmethod
    def accept(cls, level: int | None = None, **detail) -> Verdict:
        return cls(Outcome.ACCEPT, level, detail)

    @classmethod
    def reject(cls, **detail) -> Verdict:
        return cls(Outcome.REJECT, None, detail)

    @property
    def accepted(self) -> bool:
        return self.outcome is Outcome.ACCEPT

    def label(self) -> str:
        if self.outcome is Outcome.ACCEPT and self.level is not None:
            return f"Accept({self.level})"
        return self.outcome.value


ABORT = Verdict(Outcome.ABORT)


@dataclass(frozen=True)
class DocSigPair:
    doc: BitString
    sig: BitString


def synth_document(b_M: int, seed: int) -> BitString:
    """Pseudo-random document of b_M bits derived from a seed."""
    return random_bits(np.random.Generator(np.random.Philox(seed)), b_M)


def ceil_log2(n: int) -> int:
    """Bits needed to write one of n positions (at least 1 for n >= 2)."""
    if n < 1:
        raise ValueError("n must be positive")
    return (n - 1).bit_length()


def encode_positions(positions, width: int) -> BitString:
    out = 0
    for i, p in enumerate(positions):
        if not 0 <= p < 1 << width:
            raise ValueError("position does not fit the encoding width")
        out |= int(p) << (i * width)
    return BitString(out, width * len(positions))


def decode_positions(bits: BitString, width: int) -> list[int]:
    count = bits.length // width
    mask = (1 << width) - 1
    return [(bits.value >> (i * width)) & mask for i in range(count)]
