import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdsig.bits import BitString, make_rng, random_bits
from qdsig.gf2 import Gf2Poly, Gf2wElement, default_modulus, gf2w_mul, irreducibles
from qdsig.uhash import (
    AsuKey,
    LfsrToeplitzKey,
    MessageTooLong,
    asu_capacity,
    asu_chunks,
    asu_cost,
    asu_hash,
    asu_key_bits,
    asu_key_bits_exact,
    asu_key_from_bits,
    asu_sigma,
    axu_cost,
    axu_hash,
    axu_hash_naive,
    sample_asu_key,
    sample_axu_key,
    toeplitz_hash,
)

X = Gf2Poly.from_exponents


# AXU -------------------------------------------------------------------------


def test_axu_hand_example():
    # p = x^2+x+1, register (s1, s0) = (0, 1), m = (1, 0, 1): columns s^0 and s^2
    key = LfsrToeplitzKey(X(2, 1, 0), BitString.from_bits([1, 0]))
    m = BitString.from_bits([1, 0, 1])
    h = axu_hash(key, m)
    # written high bit first as (h1, h0) the result is (1, 0)
    assert (h[1], h[0]) == (1, 0)
    assert axu_hash_naive(key, m) == h


def test_axu_single_bit_selects_first_column():
    key = sample_axu_key(16, make_rng(0))
    m = BitString.from_bits([1] + [0] * 40)
    assert axu_hash(key, m) == key.s0


def test_axu_linear():
    rng = make_rng(1)
    key = sample_axu_key(20, rng)
    a, b = random_bits(rng, 500), random_bits(rng, 500)
    assert axu_hash(key, a ^ b) == axu_hash(key, a) ^ axu_hash(key, b)


def test_axu_zero_message_zero_hash():
    key = sample_axu_key(8, make_rng(2))
    assert axu_hash_naive(key, BitString.zeros(30)).value == 0


def test_axu_empty_message_rejected():
    key = sample_axu_key(8, make_rng(2))
    with pytest.raises(ValueError):
        axu_hash(key, BitString.zeros(0))


def test_axu_naive_length_limit():
    key = sample_axu_key(8, make_rng(2))
    with pytest.raises(MessageTooLong):
        axu_hash_naive(key, BitString.zeros(4097))


def test_axu_matches_naive_on_1000_random_cases():
    rng = make_rng(3)
    for _ in range(1000):
        b_H = int(rng.integers(1, 17))
        key = sample_axu_key(b_H, rng)
        m = random_bits(rng, int(rng.integers(1, 4097)))
        assert axu_hash(key, m) == axu_hash_naive(key, m)


def test_axu_key_validation():
    with pytest.raises(ValueError):
        LfsrToeplitzKey(X(2, 0), BitString(1, 2))  # reducible
    with pytest.raises(ValueError):
        LfsrToeplitzKey(X(2, 1, 0), BitString(0, 2))  # zero register
    with pytest.raises(ValueError):
        LfsrToeplitzKey(X(2, 1, 0), BitString(1, 3))


def test_unchecked_hash_accepts_zero_register():
    assert toeplitz_hash(X(2, 1, 0), BitString(0, 2), BitString(7, 3)).value == 0


def test_axu_key_json_round_trip():
    key = sample_axu_key(13, make_rng(4))
    assert LfsrToeplitzKey.from_json(key.to_json()) == key
    assert key.key_bits == 26


def test_axu_exhaustive_xor_universality():
    """b_H = 8, b_M = 16: every key, 210 message pairs, max Pr[f(m1)^f(m2)=b] <= 16 * 2^-7."""
    keys = [LfsrToeplitzKey(p, BitString(s, 8)) for p in irreducibles(8) for s in range(1, 256)]
    assert len(keys) == 30 * 255
    rng = make_rng(5)
    msgs = list({int(v) for v in rng.integers(0, 1 << 16, size=21)})
    table = np.array([[axu_hash(k, BitString(m, 16)).value for m in msgs] for k in keys])
    worst = 0.0
    for i in range(len(msgs)):
        for j in range(i + 1, len(msgs)):
            counts = np.bincount(table[:, i] ^ table[:, j], minlength=256)
            worst = max(worst, counts.max() / len(keys))
    assert worst <= 0.125
    assert worst > 0  # the sweep actually counted something


# ASU -------------------------------------------------------------------------


def horner_oracle(key: AsuKey, m: BitString) -> BitString:
    """Independent evaluation with field elements, chunking by hand."""
    w, mod = key.width, key.alpha.modulus
    bits = m.to_bits() + [1]
    bits += [0] * (-len(bits) % w)
    chunks = [Gf2wElement(sum(b << i for i, b in enumerate(bits[j : j + w])), mod) for j in range(0, len(bits), w)]
    acc = Gf2wElement(0, mod)
    for c in reversed(chunks):
        acc = gf2w_mul(acc, key.alpha) + c
    t = gf2w_mul(acc, key.beta).value & ((1 << key.b_H) - 1)
    return BitString(t, key.b_H) ^ key.gamma


def test_asu_single_chunk():
    key = sample_asu_key(6, 3, make_rng(6))
    m = BitString(0b10110, 5)  # padded chunk is m || 1 || 000
    padded = m.value | (1 << 5)
    expect = gf2w_mul(key.beta, Gf2wElement(padded, key.alpha.modulus)).value & 0x3F
    assert asu_hash(key, m) == BitString(expect, 6) ^ key.gamma


@settings(max_examples=200)
@given(st.integers(0, 2**32), st.integers(0, 300))
def test_asu_matches_horner_oracle(seed, length):
    key = sample_asu_key(5, 6, make_rng(seed))
    m = random_bits(make_rng(seed + 1), length)
    assert asu_hash(key, m) == horner_oracle(key, m)


def test_asu_long_message_table_path():
    rng = make_rng(7)
    key = sample_asu_key(2, 18, rng)
    m = random_bits(rng, 3000)  # > 48 chunks of 20 bits
    assert asu_hash(key, m) == horner_oracle(key, m)


def test_asu_chunks_numpy_path_matches_plain():
    rng = make_rng(8)
    m = random_bits(rng, 1001)
    w = 23
    padded = m.value | (1 << m.length)
    plain = [(padded >> (i * w)) & ((1 << w) - 1) for i in range(-(-(m.length + 1) // w))]
    assert asu_chunks(m, w) == plain


def test_asu_deterministic():
    key = sample_asu_key(4, 3, make_rng(9))
    m = BitString(0x1234, 16)
    assert asu_hash(key, m) == asu_hash(key, m)


def test_asu_capacity_enforced():
    key = sample_asu_key(3, 2, make_rng(10))
    assert key.capacity == 24
    asu_hash(key, BitString.zeros(24))
    with pytest.raises(MessageTooLong):
        asu_hash(key, BitString.zeros(25))


def test_asu_key_layout_and_json():
    bits = random_bits(make_rng(11), 3 * 4 + 2 * 3)
    key = asu_key_from_bits(bits, 4, 3)
    assert key.key_bits == 18 and key.width == 7
    assert key.alpha.modulus == default_modulus(7)
    assert BitString(key.alpha.value, 7) + BitString(key.beta.value, 7) + key.gamma == bits
    assert AsuKey.from_json(key.to_json()) == key
    with pytest.raises(ValueError):
        asu_key_from_bits(bits, 4, 2)


def test_asu_exhaustive_strong_universality():
    """b_H = 3, sigma = 2: all 2^13 keys; joint tag probability <= 2^(1-b_H) / 2^b_H."""
    b_H, sigma = 3, 2
    keys = [asu_key_from_bits(BitString(v, 13), b_H, sigma) for v in range(1 << 13)]
    rng = make_rng(12)
    msgs = [BitString(v, n) for n in range(0, 5) for v in range(1 << n)]
    for n in (7, 12, 19, 24, 24, 23):
        msgs.append(random_bits(rng, n))
    msgs.append(msgs[-1] + BitString.zeros(1))  # trailing zero must not collide for free
    table = np.array([[asu_hash(k, m).value for m in msgs] for k in keys])
    # single-message marginals are exactly uniform
    for i in range(len(msgs)):
        assert np.all(np.bincount(table[:, i], minlength=8) == len(keys) // 8)
    bound = 2.0 ** (1 - b_H) / 2**b_H
    worst = 0.0
    for i in range(len(msgs)):
        for j in range(i + 1, len(msgs)):
            if msgs[i] == msgs[j]:
                continue
            joint = np.bincount(table[:, i] * 8 + table[:, j], minlength=64)
            worst = max(worst, joint.max() / len(keys))
    assert worst <= bound


# sizing ----------------------------------------------------------------------


def test_asu_sigma_examples():
    assert asu_sigma(16, 2) == 2
    assert asu_sigma(3, 2) == 1
    prev = 1
    for b_M in range(3, 5000):
        s = asu_sigma(b_M, 2)
        assert s >= prev
        prev = s
    with pytest.raises(ValueError):
        asu_sigma(2, 2)


def test_asu_sigma_is_smallest():
    for b_M in (17, 100, 10**5, 10**6):
        s = asu_sigma(b_M, 3)
        assert b_M <= (3 + s) * (1 + 2**s)
        assert s == 1 or b_M > (3 + s - 1) * (1 + 2 ** (s - 1))


def test_asu_key_bits_examples():
    assert asu_key_bits(10**6, 2) == 44
    assert math.ceil(6 + 2 * math.log2(499999)) == 44
    assert asu_key_bits(16, 8) == 24
    for b_M in (100, 10**4, 10**7):
        assert asu_key_bits(2 * b_M, 2) - asu_key_bits(b_M, 2) <= 2


@given(st.integers(3, 10**12), st.integers(1, 8))
def test_asu_key_bits_matches_float_formula_off_boundaries(b_M, b_H):
    if b_M <= b_H:
        return
    exact = asu_key_bits(b_M, b_H)
    r = Fraction(b_M, b_H) - 1
    approx = 3 * b_H + 2 * math.log2(float(r))
    if abs(approx - round(approx)) > 1e-9:
        assert exact == math.ceil(approx)


def test_exact_y_below_bound_for_long_documents():
    # the closed-form bound can undershoot by a bit or two only when b_M < 8 b_H
    for b_H in range(1, 9):
        for b_M in list(range(8 * b_H, 5000)) + [10**e for e in range(4, 11)]:
            assert asu_key_bits_exact(b_M, b_H) <= asu_key_bits(b_M, b_H)
    assert asu_key_bits_exact(46, 7) == asu_key_bits(46, 7) + 1


def test_family_costs():
    assert axu_cost(1000, 10) == axu_cost(1000, 10)
    c = axu_cost(1 << 20, 30)
    assert c.preshared_bits == 60 and c.epsilon == 2.0**-9
    a = asu_cost(10**6, 2)
    assert a.preshared_bits == 44 and a.epsilon == 0.5
