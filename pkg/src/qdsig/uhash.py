"""Universal hash families: the LFSR-Toeplitz AXU family and a polynomial ASU family.

AXU hashing.  A key is an irreducible connection polynomial ``p`` of degree
``b_H`` and a nonzero initial register ``s0``.  Column ``i`` of the Toeplitz
matrix is the register after ``i`` steps, so hash bit ``r`` (the register
cell holding ``s_{i+r}``) is ``XOR_i m_i s_{i+r}``.  Written top-down as a
column vector the hash reads ``(bit b_H-1, ..., bit 0)``, the same layout as
the register.

ASU hashing.  A key is ``(alpha, beta, gamma)`` with ``alpha, beta`` in
GF(2^w), ``w = b_H + sigma``, and ``gamma`` a ``b_H``-bit mask.  The message is
padded with ``10...0`` to a multiple of ``w`` bits and cut into chunks
``c_1 .. c_L``; stage one evaluates ``sum_i c_i alpha^(i-1)``, stage two
returns ``low_b_H(beta * h) XOR gamma``.  Field multiplication uses a fixed
public modulus per width.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bits import BitString, random_bits, random_nonzero_bits
from .gf2 import (
    Gf2Poly,
    Gf2wElement,
    LfsrState,
    apply_tables,
    clmod,
    clmul,
    default_modulus,
    is_irreducible,
    lfsr_sequence,
    lfsr_step,
    mul_table,
    sample_irreducible,
)

NAIVE_MAX_BITS = 4096


class MessageTooLong(ValueError):
    pass


# AXU: LFSR-Toeplitz ------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LfsrToeplitzKey:
    p: Gf2Poly
    s0: BitString

    def __post_init__(self):
        if self.p.degree < 1:
            raise ValueError("connection polynomial must have degree >= 1")
        if self.s0.length != self.p.degree:
            raise ValueError("initial state length must equal deg p")
        if not self.s0.value:
            raise ValueError("initial state must be nonzero")
        if not is_irreducible(self.p):
            raise ValueError(f"connection polynomial {self.p} is reducible")

    @property
    def b_H(self) -> int:
        return self.p.degree

    @property
    def key_bits(self) -> int:
        return 2 * self.b_H

    def to_json(self) -> dict:
        return {
            "family": "axu",
            "b_H": self.b_H,
            "p": self.p.low_coefficients().serialize(),
            "s0": self.s0.serialize(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> LfsrToeplitzKey:
        if obj.get("family") != "axu":
            raise ValueError("not an AXU key")
        low = BitString.deserialize(obj["p"])
        key = cls(Gf2Poly.monic(low), BitString.deserialize(obj["s0"]))
        if key.b_H != obj["b_H"]:
            raise ValueError("b_H field disagrees with key material")
        return key


def sample_axu_key(b_H: int, rng: np.random.Generator) -> LfsrToeplitzKey:
    return LfsrToeplitzKey(sample_irreducible(b_H, rng), random_nonzero_bits(rng, b_H))


def toeplitz_hash(p: Gf2Poly, s0: BitString, m: BitString) -> BitString:
    """Hash without key validation.

    Protocol verifiers rebuild keys from decrypted material, which may hold a
    zero register; the linear map is still well defined in that case.
    """
    b_H = p.degree
    if m.length == 0:
        raise ValueError("cannot hash an empty message")
    seq = lfsr_sequence(LfsrState(p, s0), m.length + b_H - 1).value
    mv = m.value
    out = 0
    for r in range(b_H):
        out |= ((mv & (seq >> r)).bit_count() & 1) << r
    return BitString(out, b_H)


def axu_hash(key: LfsrToeplitzKey, m: BitString) -> BitString:
    """f_{p,s}(m) computed from the streamed LFSR sequence."""
    return toeplitz_hash(key.p, key.s0, m)


def axu_hash_naive(key: LfsrToeplitzKey, m: BitString) -> BitString:
    """Reference implementation that builds every Toeplitz column explicitly."""
    if m.length > NAIVE_MAX_BITS:
        raise MessageTooLong(f"oracle limited to {NAIVE_MAX_BITS} bits")
    n = key.b_H
    low = key.p.bits ^ (1 << n)
    columns = []
    st = key.s0.value
    for _ in range(m.length):
        columns.append(st)
        st = lfsr_step(low, n, st)
    out = 0
    for i, col in enumerate(columns):
        if m[i]:
            out ^= col
    return BitString(out, n)


# ASU: polynomial evaluation + affine truncation --------------------------


@dataclass(frozen=True, slots=True)
class AsuKey:
    alpha: Gf2wElement
    beta: Gf2wElement
    gamma: BitString
    sigma: int

    def __post_init__(self):
        w = self.gamma.length + self.sigma
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.alpha.width != w or self.beta.width != w:
            raise ValueError("field width must be b_H + sigma")
        if self.alpha.modulus != self.beta.modulus:
            raise ValueError("alpha and beta live in different fields")

    @property
    def b_H(self) -> int:
        return self.gamma.length

    @property
    def width(self) -> int:
        return self.b_H + self.sigma

    @property
    def key_bits(self) -> int:
        return 3 * self.b_H + 2 * self.sigma

    @property
    def capacity(self) -> int:
        return asu_capacity(self.b_H, self.sigma)

    def to_json(self) -> dict:
        w = self.width
        return {
            "family": "asu",
            "b_H": self.b_H,
            "sigma": self.sigma,
            "alpha": BitString(self.alpha.value, w).serialize(),
            "beta": BitString(self.beta.value, w).serialize(),
            "gamma": self.gamma.serialize(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> AsuKey:
        if obj.get("family") != "asu":
            raise ValueError("not an ASU key")
        bits = (
            BitString.deserialize(obj["alpha"])
            + BitString.deserialize(obj["beta"])
            + BitString.deserialize(obj["gamma"])
        )
        return asu_key_from_bits(bits, obj["b_H"], obj["sigma"])


def asu_capacity(b_H: int, sigma: int) -> int:
    """Longest message the family accepts.

    After ``10...0`` padding the chunk count must stay within ``1 + 2^sigma``,
    which keeps the stage-one collision probability at ``2^-b_H``.
    """
    return (b_H + sigma) * (1 + 2**sigma) - 1


def asu_key_from_bits(bits: BitString, b_H: int, sigma: int) -> AsuKey:
    """Interpret ``3 b_H + 2 sigma`` key bits as ``alpha || beta || gamma``."""
    w = b_H + sigma
    if bits.length != 2 * w + b_H:
        raise ValueError(f"ASU key needs {2 * w + b_H} bits, got {bits.length}")
    a, b, g = bits.split(w, w, b_H)
    mod = default_modulus(w)
    return AsuKey(Gf2wElement(a.value, mod), Gf2wElement(b.value, mod), g, sigma)


def sample_asu_key(b_H: int, sigma: int, rng: np.random.Generator) -> AsuKey:
    return asu_key_from_bits(random_bits(rng, 3 * b_H + 2 * sigma), b_H, sigma)


def asu_chunks(m: BitString, width: int) -> list[int]:
    """Pad with 10...0 to a multiple of ``width`` and cut into integer chunks."""
    total = m.length + 1
    L = -(-total // width)
    padded = m.value | (1 << m.length)
    if width <= 62 and L > 8:
        nbytes = (L * width + 7) // 8
        raw = np.frombuffer(padded.to_bytes(nbytes, "little"), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")[: L * width].reshape(L, width)
        weights = np.left_shift(np.uint64(1), np.arange(width, dtype=np.uint64))
        vals = (bits.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        return [int(v) for v in vals]
    mask = (1 << width) - 1
    return [(padded >> (i * width)) & mask for i in range(L)]


def asu_hash_chunks(key: AsuKey, chunks: list[int]) -> BitString:
    """Hash pre-chunked input; lets one document be shared by many keys."""
    mod = key.alpha.modulus.bits
    alpha = key.alpha.value
    h = 0
    if len(chunks) > 48:
        table = mul_table(alpha, mod)
        if len(table) == 1:
            (t0,) = table
            for c in reversed(chunks):
                h = t0[h] ^ c
        elif len(table) == 2:
            t0, t1 = table
            for c in reversed(chunks):
                h = t0[h & 0xFF] ^ t1[h >> 8] ^ c
        else:
            for c in reversed(chunks):
                h = apply_tables(table, h) ^ c
    else:
        for c in reversed(chunks):
            h = clmod(clmul(alpha, h), mod) ^ c
    t = clmod(clmul(key.beta.value, h), mod)
    return BitString(t & ((1 << key.b_H) - 1), key.b_H) ^ key.gamma


def asu_hash(key: AsuKey, m: BitString) -> BitString:
    if m.length > key.capacity:
        raise MessageTooLong(f"{m.length} bits exceeds family capacity {key.capacity}")
    return asu_hash_chunks(key, asu_chunks(m, key.width))


def asu_sigma(b_M: int, b_H: int) -> int:
    """Smallest sigma >= 1 with b_M <= (b_H + sigma)(1 + 2^sigma)."""
    if not b_M > b_H >= 1:
        raise ValueError("need b_M > b_H >= 1")
    sigma = 1
    while b_M > (b_H + sigma) * (1 + 2**sigma):
        sigma += 1
    return sigma


def asu_key_bits_exact(b_M: int, b_H: int) -> int:
    """y = 3 b_H + 2 sigma with sigma from :func:`asu_sigma`."""
    return 3 * b_H + 2 * asu_sigma(b_M, b_H)


def _ceil_log2_fraction(r: Fraction) -> int:
    """Exact ceil(log2 r) for a positive rational: smallest t with r <= 2^t."""
    a, b = r.numerator, r.denominator

    def fits(t: int) -> bool:
        return a <= b << t if t >= 0 else a << -t <= b

    t = a.bit_length() - b.bit_length()
    while not fits(t):
        t += 1
    return t


def asu_key_bits(b_M: int, b_H: int) -> int:
    """Upper bound ceil(3 b_H + 2 log2(b_M / b_H - 1)) on the ASU key length."""
    if not b_M > b_H:
        raise ValueError("need b_M > b_H")
    r = Fraction(b_M, b_H) - 1
    return 3 * b_H + _ceil_log2_fraction(r * r)


# Table of family costs ---------------------------------------------------


@dataclass(frozen=True, slots=True)
class FamilyCost:
    preshared_bits: int
    epsilon: float


def axu_cost(b_M: int, b_H: int) -> FamilyCost:
    return FamilyCost(2 * b_H, b_M * 2.0 ** (1 - b_H))


def asu_cost(b_M: int, b_H: int) -> FamilyCost:
    return FamilyCost(asu_key_bits(b_M, b_H), 2.0 ** (1 - b_H))
