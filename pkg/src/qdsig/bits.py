"""Bit strings and the seeded randomness used everywhere else.

A :class:`BitString` is an immutable sequence of bits backed by a Python
integer: bit ``i`` of the string is bit ``i`` of ``value``.  Index 0 is the
first bit of the string and, when the string is read as a polynomial over
GF(2), the coefficient of ``x^0``.  Concatenation ``a + b`` places ``a`` in
the low indices.

Serialization packs the bits into bytes in string order, the first bit of
each byte being its most significant bit, and renders the bytes as
lowercase hex with an explicit bit length: ``len=<bits>:<hex>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_REVERSE_BYTE = bytes(int(f"{b:08b}"[::-1], 2) for b in range(256))
_SERIAL_RE = re.compile(r"^len=(\d+):([0-9a-f]*)$")


@dataclass(frozen=True, slots=True)
class BitString:
    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative length")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"value does not fit in {self.length} bits")

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, length: int) -> BitString:
        return cls(0, length)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitString:
        value = 0
        n = 0
        for n, b in enumerate(bits, start=1):
            if b not in (0, 1):
                raise ValueError(f"not a bit: {b!r}")
            value |= b << (n - 1)
        return cls(value, n)

    @classmethod
    def from_bytes(cls, data: bytes, length: int | None = None) -> BitString:
        """Bits of ``data`` in reading order (MSB of each byte first)."""
        nbits = 8 * len(data)
        if length is None:
            length = nbits
        if length > nbits:
            raise ValueError("length exceeds available bits")
        value = int.from_bytes(data.translate(_REVERSE_BYTE), "little")
        return cls(value & ((1 << length) - 1), length)

    @classmethod
    def from_hex(cls, hexstr: str, length: int) -> BitString:
        data = bytes.fromhex(hexstr)
        if len(data) != (length + 7) // 8:
            raise ValueError("hex payload does not match declared length")
        value = int.from_bytes(data.translate(_REVERSE_BYTE), "little")
        if value >> length:
            raise ValueError("nonzero padding bits after declared length")
        return cls(value, length)

    @classmethod
    def deserialize(cls, text: str) -> BitString:
        m = _SERIAL_RE.match(text.strip())
        if not m:
            raise ValueError(f"malformed bit string {text!r}")
        return cls.from_hex(m.group(2), int(m.group(1)))

    # conversion ---------------------------------------------------------
    def to_bytes(self) -> bytes:
        nbytes = (self.length + 7) // 8
        return self.value.to_bytes(nbytes, "little").translate(_REVERSE_BYTE)

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    def serialize(self) -> str:
        return f"len={self.length}:{self.to_hex()}"

    def to_bits(self) -> list[int]:
        return [(self.value >> i) & 1 for i in range(self.length)]

    def to_array(self) -> np.ndarray:
        """Bits as a uint8 numpy array (index order)."""
        raw = np.frombuffer(self.value.to_bytes((self.length + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.length]

    # sequence protocol --------------------------------------------------
    def __len__(self) -> int:
        return self.length

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            start, stop, step = idx.indices(self.length)
            if step != 1:
                return BitString.from_bits(self.to_bits()[idx])
            n = max(0, stop - start)
            return BitString((self.value >> start) & ((1 << n) - 1), n)
        if idx < 0:
            idx += self.length
        if not 0 <= idx < self.length:
            raise IndexError("bit index out of range")
        return (self.value >> idx) & 1

    def __iter__(self):
        v = self.value
        for _ in range(self.length):
            yield v & 1
            v >>= 1

    def __add__(self, other: BitString) -> BitString:
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString(self.value | (other.value << self.length), self.length + other.length)

    def __xor__(self, other: BitString) -> BitString:
        if not isinstance(other, BitString):
            return NotImplemented
        if other.length != self.length:
            raise ValueError(f"xor of unequal lengths {self.length} and {other.length}")
        return BitString(self.value ^ other.value, self.length)

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        if self.length <= 64:
            return f"BitString('{''.join(map(str, self.to_bits()))}')"
        return f"BitString({self.serialize()[:40]}...)"

    # helpers ------------------------------------------------------------
    def weight(self) -> int:
        return self.value.bit_count()

    def flip(self, i: int) -> BitString:
        return BitString(self.value ^ (1 << i), self.length)

    def split(self, *sizes: int) -> list[BitString]:
        if sum(sizes) != self.length:
            raise ValueError(f"sizes {sizes} do not partition {self.length} bits")
        out = []
        pos = 0
        for s in sizes:
            out.append(self[pos : pos + s])
            pos += s
        return out

    def pad_one(self) -> BitString:
        """Append a single 1 bit, so the string ends with 1."""
        return BitString(self.value | (1 << self.length), self.length + 1)


def concat(parts: Sequence[BitString]) -> BitString:
    out = BitString(0, 0)
    for p in parts:
        out = out + p
    return out


# randomness ---------------------------------------------------------------


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Counter-based (Philox) generator; identical streams on every platform."""
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed: int, names: Sequence[str]) -> dict[str, np.random.Generator]:
    """Independent named streams derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: make_rng(ss) for name, ss in zip(names, children)}


def random_bits(rng: np.random.Generator, n: int) -> BitString:
    if n == 0:
        return BitString(0, 0)
    data = rng.bytes((n + 7) // 8)
    return BitString(int.from_bytes(data, "little") & ((1 << n) - 1), n)


def random_nonzero_bits(rng: np.random.Generator, n: int) -> BitString:
    while True:
        b = random_bits(rng, n)
        if b.value:
            return b
