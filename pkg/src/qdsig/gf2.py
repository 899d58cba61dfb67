"""Arithmetic over GF(2)[x] and GF(2^w), irreducibility, and LFSR sequences.

Polynomials are stored as nonnegative integers: bit ``i`` is the coefficient
of ``x^i``.  The zero polynomial has degree -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bits import BitString, random_bits


class IrreducibleSearchError(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class Gf2Poly:
    bits: int

    def __post_init__(self):
        if self.bits < 0:
            raise ValueError("polynomial coefficients must be a nonnegative int")

    @classmethod
    def from_coefficients(cls, coeffs: BitString) -> Gf2Poly:
        return cls(coeffs.value)

    @classmethod
    def monic(cls, low: BitString) -> Gf2Poly:
        """x^d + low(x) with d = len(low)."""
        return cls(low.value | (1 << low.length))

    @classmethod
    def from_exponents(cls, *exps: int) -> Gf2Poly:
        v = 0
        for e in exps:
            v ^= 1 << e
        return cls(v)

    @property
    def degree(self) -> int:
        return self.bits.bit_length() - 1

    @property
    def coefficients(self) -> BitString:
        return BitString(self.bits, max(self.degree + 1, 0))

    def low_coefficients(self) -> BitString:
        """The d coefficients below the leading term (the 'random string' of a monic poly)."""
        d = self.degree
        return BitString(self.bits & ((1 << d) - 1), d)

    def __mul__(self, other: Gf2Poly) -> Gf2Poly:
        return poly_mul(self, other)

    def __mod__(self, other: Gf2Poly) -> Gf2Poly:
        return poly_mod(self, other)

    def __add__(self, other: Gf2Poly) -> Gf2Poly:
        return Gf2Poly(self.bits ^ other.bits)

    __sub__ = __add__

    def __bool__(self) -> bool:
        return self.bits != 0

    def __str__(self) -> str:
        if not self.bits:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            if (self.bits >> i) & 1:
                terms.append("1" if i == 0 else "x" if i == 1 else f"x^{i}")
        return "+".join(terms)


# raw integer kernels ------------------------------------------------------


def clmul(a: int, b: int) -> int:
    """Carry-less product of two bit-packed polynomials."""
    if a.bit_length() < b.bit_length():
        a, b = b, a
    out = 0
    i = 0
    while b:
        if b & 1:
            out ^= a << i
        b >>= 1
        i += 1
    return out


def clmod(a: int, m: int) -> int:
    if m == 0:
        raise ZeroDivisionError("reduction modulo the zero polynomial")
    dm = m.bit_length() - 1
    da = a.bit_length() - 1
    while da >= dm:
        a ^= m << (da - dm)
        da = a.bit_length() - 1
    return a


def cldivmod(a: int, m: int) -> tuple[int, int]:
    if m == 0:
        raise ZeroDivisionError("division by the zero polynomial")
    dm = m.bit_length() - 1
    q = 0
    da = a.bit_length() - 1
    while da >= dm:
        q ^= 1 << (da - dm)
        a ^= m << (da - dm)
        da = a.bit_length() - 1
    return q, a


def clgcd(a: int, b: int) -> int:
    while b:
        a, b = b, clmod(a, b)
    return a


_SPREAD = [int("".join(c + "0" for c in f"{b:08b}")[:-1] or "0", 2) for b in range(256)]


def clsquare(a: int) -> int:
    """Square in GF(2)[x]: interleave zeros between the coefficient bits."""
    out = 0
    shift = 0
    while a:
        out |= _SPREAD[a & 0xFF] << shift
        a >>= 8
        shift += 16
    return out


def _powmod_x_2k(k: int, m: int) -> int:
    """x^(2^k) mod m by k repeated squarings."""
    r = clmod(2, m)
    for _ in range(k):
        r = clmod(clsquare(r), m)
    return r


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


# public operations --------------------------------------------------------


def poly_mul(a: Gf2Poly, b: Gf2Poly) -> Gf2Poly:
    return Gf2Poly(clmul(a.bits, b.bits))


def poly_mod(a: Gf2Poly, m: Gf2Poly) -> Gf2Poly:
    return Gf2Poly(clmod(a.bits, m.bits))


def is_irreducible(p: Gf2Poly | int) -> bool:
    """Rabin's test: x^(2^d) = x mod p and gcd(x^(2^(d/q)) - x, p) = 1 for primes q | d."""
    bits = p.bits if isinstance(p, Gf2Poly) else p
    d = bits.bit_length() - 1
    if d < 1:
        raise ValueError("irreducibility is defined for degree >= 1")
    if d == 1:
        return True
    if not bits & 1:
        return False
    if _powmod_x_2k(d, bits) != 2:
        return False
    for q in _prime_factors(d):
        h = _powmod_x_2k(d // q, bits) ^ 2
        if clgcd(bits, h) != 1:
            return False
    return True


def sample_irreducible(degree: int, rng: np.random.Generator) -> Gf2Poly:
    """Uniform monic irreducible polynomial by rejection; `degree` random bits per try."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    for _ in range(64 * degree):
        low = random_bits(rng, degree)
        cand = low.value | (1 << degree)
        if is_irreducible(cand):
            return Gf2Poly(cand)
    raise IrreducibleSearchError(f"no irreducible polynomial of degree {degree} in {64 * degree} draws")


@lru_cache(maxsize=None)
def irreducibles(degree: int) -> tuple[Gf2Poly, ...]:
    """All monic irreducible polynomials of a (small) degree, in increasing order."""
    if degree > 20:
        raise ValueError("enumeration limited to degree <= 20")
    return tuple(Gf2Poly(v) for v in range(1 << degree, 1 << (degree + 1)) if is_irreducible(v))


@lru_cache(maxsize=None)
def default_modulus(width: int) -> Gf2Poly:
    """The lexicographically smallest irreducible polynomial of the given degree."""
    for v in range((1 << width) | 1, 1 << (width + 1), 2):
        if is_irreducible(v):
            return Gf2Poly(v)
    raise IrreducibleSearchError(width)  # pragma: no cover - one always exists


# GF(2^w) ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Gf2wElement:
    value: int
    modulus: Gf2Poly

    def __post_init__(self):
        if self.value < 0 or self.value.bit_length() > self.modulus.degree:
            raise ValueError("field element wider than the modulus degree")

    @property
    def width(self) -> int:
        return self.modulus.degree

    def __mul__(self, other: Gf2wElement) -> Gf2wElement:
        return gf2w_mul(self, other)

    def __add__(self, other: Gf2wElement) -> Gf2wElement:
        if other.modulus != self.modulus:
            raise ValueError("modulus mismatch")
        return Gf2wElement(self.value ^ other.value, self.modulus)


def gf2w_mul(a: Gf2wElement, b: Gf2wElement) -> Gf2wElement:
    if a.modulus != b.modulus:
        raise ValueError("modulus mismatch")
    return Gf2wElement(clmod(clmul(a.value, b.value), a.modulus.bits), a.modulus)


def mul_table(multiplier: int, modulus: int) -> list[list[int]]:
    """Byte tables for the linear map v -> multiplier * v (mod modulus).

    ``table[j][b]`` is the image of byte ``b`` placed at byte position ``j``.
    """
    width = modulus.bit_length() - 1
    basis = []
    cur = clmod(multiplier, modulus)
    for _ in range(width):
        basis.append(cur)
        cur <<= 1
        if cur >> width & 1:
            cur ^= modulus
    return _byte_tables(basis)


def _byte_tables(basis: list[int]) -> list[list[int]]:
    tables = []
    for j in range(0, len(basis), 8):
        chunk = basis[j : j + 8]
        t = [0] * 256
        for v in range(1, 256):
            low = (v & -v).bit_length() - 1
            t[v] = t[v & (v - 1)] ^ (chunk[low] if low < len(chunk) else 0)
        tables.append(t)
    return tables


def apply_tables(tables: list[list[int]], v: int) -> int:
    out = 0
    for t in tables:
        out ^= t[v & 0xFF]
        v >>= 8
    return out


# LFSR ---------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LfsrState:
    """Connection polynomial and register contents.

    ``state`` bit ``r`` holds ``s_r``, so the register written left to right
    is ``(s_{n-1}, ..., s_1, s_0)``.
    """

    taps: Gf2Poly
    state: BitString

    def __post_init__(self):
        if self.state.length != self.taps.degree:
            raise ValueError("state length must equal the connection polynomial degree")


def lfsr_step(taps_low: int, n: int, state: int) -> int:
    new = (state & taps_low).bit_count() & 1
    return (state >> 1) | (new << (n - 1))


def lfsr_sequence_naive(key: LfsrState, count: int) -> BitString:
    n = key.taps.degree
    low = key.taps.bits ^ (1 << n)
    st = key.state.value
    out = 0
    for i in range(count):
        out |= (st & 1) << i
        st = lfsr_step(low, n, st)
    return BitString(out, count)


_BLOCK = 256


@lru_cache(maxsize=512)
def _block_tables(taps: int) -> tuple[list[list[int]], list[list[int]]]:
    """Byte tables giving the next _BLOCK output bits and the state _BLOCK steps ahead."""
    n = taps.bit_length() - 1
    low = taps ^ (1 << n)
    outs, nexts = [], []
    for r in range(n):
        st = 1 << r
        o = 0
        for i in range(_BLOCK):
            o |= (st & 1) << i
            st = lfsr_step(low, n, st)
        outs.append(o)
        nexts.append(st)
    return _byte_tables(outs), _byte_tables(nexts)


def lfsr_sequence(key: LfsrState, count: int) -> BitString:
    """s_0 ... s_{count-1}; s_l = <s^{l-n}, p> for l >= n."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count <= 4 * _BLOCK:
        return lfsr_sequence_naive(key, count)
    out_t, next_t = _block_tables(key.taps.bits)
    st = key.state.value
    nblocks = -(-count // _BLOCK)
    chunks = bytearray()
    for _ in range(nblocks):
        chunks += apply_tables(out_t, st).to_bytes(_BLOCK // 8, "little")
        st = apply_tables(next_t, st)
    value = int.from_bytes(chunks, "little") & ((1 << count) - 1)
    return BitString(value, count)
