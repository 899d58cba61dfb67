import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdsig.bits import BitString, make_rng
from qdsig.channels import Purpose, TamperRule
from qdsig.gf2 import Gf2Poly, is_irreducible
from qdsig.protocols import (
    DocSigPair,
    Outcome,
    P3State,
    p1_distribute,
    p1_run,
    p1_sign,
    p1_verify,
    p2_run,
    p3_majority_vote,
    p3_run,
    p3_thresholds,
    p3_verify,
    p3_verify_level,
    synth_document,
)
from qdsig.protocols.common import ceil_log2, decode_positions, encode_positions
from qdsig.protocols.p3 import check_p3_params, level_from_counts, split_tags
from qdsig.uhash import LfsrToeplitzKey, asu_key_bits_exact, axu_hash_naive


def labels(tr):
    return {p: v.label() for p, v in tr.verdicts.items()}


# common ----------------------------------------------------------------------


def test_ceil_log2():
    assert [ceil_log2(n) for n in (1, 2, 3, 4, 5, 8, 9, 1520)] == [0, 1, 2, 2, 3, 3, 4, 11]


@given(st.lists(st.integers(0, 63), max_size=20))
def test_position_encoding_round_trip(pos):
    assert decode_positions(encode_positions(pos, 6), 6) == pos


def test_synth_document_deterministic():
    assert synth_document(1000, 4) == synth_document(1000, 4)
    assert synth_document(1000, 4).length == 1000


# Protocol 1 -------------------------------------------------------------------


def test_p1_keys_xor_split():
    k = p1_distribute(16, make_rng(0))
    assert k.X_A == k.X_B ^ k.X_C and k.X_A.length == 48


def test_p1_sign_decrypts_to_digest():
    doc = synth_document(500, 1)
    keys = p1_distribute(12, make_rng(1))
    sig, p_a = p1_sign(doc, keys.X_A, make_rng(2))
    assert sig.length == 24
    reg, otp = keys.X_A.split(12, 24)
    h, p_low = (sig ^ otp).split(12, 12)
    assert Gf2Poly.monic(p_low) == p_a and is_irreducible(p_a)
    assert h == axu_hash_naive(LfsrToeplitzKey(p_a, reg), doc.pad_one())


def test_p1_sign_golden_vector():
    doc = synth_document(200, 3)
    keys = p1_distribute(8, make_rng(21))
    sig, p_a = p1_sign(doc, keys.X_A, make_rng(22))
    reg, otp = keys.X_A.split(8, 16)
    oracle = (axu_hash_naive(LfsrToeplitzKey(p_a, reg), doc.pad_one()) + p_a.low_coefficients()) ^ otp
    assert sig == oracle
    assert sig.serialize() == "len=16:b358"


def test_p1_verify_rejects_reducible_polynomial():
    doc = synth_document(100, 5)
    K = BitString(0, 24)
    # p_low = 0 gives x^8, which is reducible
    assert p1_verify(DocSigPair(doc, BitString(0, 16)), K).outcome is Outcome.REJECT


@pytest.mark.parametrize("seed", range(10))
def test_p1_honest_run(seed):
    tr = p1_run(synth_document(2048, seed), 24, 32, seed)
    assert labels(tr) == {"B": "Accept", "C": "Accept"}
    for r in ("B", "C"):
        assert tr.ledger.per_party(r) == 3 * 24 + 5 * 32
    assert tr.info["ell_S"] == 48


def test_p1_ledger_breakdown():
    tr = p1_run(synth_document(512, 0), 16, 20, 0)
    assert tr.ledger.breakdown("C") == {"hash-agreement": 48, "wc-setup": 40, "wc-tag-otp": 60}


def test_p1_tampered_x_c_aborts():
    bad = TamperRule(2, "substitute", message=BitString(0, 3 * 16), tag=BitString(0b1011, 4))
    aborted = sum(p1_run(synth_document(256, s), 16, 4, s, tamper=[bad]).aborted for s in range(200))
    # acceptance of a substituted message with a fixed tag is a 2^-4 event per key draw
    assert aborted >= 200 * (1 - 2 * 2.0**-4)


def test_p1_abort_has_no_verdicts_other_than_abort():
    bad = TamperRule(1, "xor", mask=BitString(1, 256 + 3 * 16 + 32))
    tr = p1_run(synth_document(256, 1), 16, 40, 1, tamper=[bad])
    assert tr.aborted
    assert set(labels(tr).values()) == {"Abort"}
    assert not any(ev.channel_kind == "local" for ev in tr.events)


def test_p1_charlie_verifies_even_when_bob_rejects():
    def spoil(pair):
        return DocSigPair(pair.doc.flip(0), pair.sig)

    tr = p1_run(synth_document(256, 2), 16, 40, 2, bob_forges=spoil)
    assert labels(tr) == {"B": "Reject", "C": "Reject"}
    assert tr.verdicts["C"].detail["bob_reported"] == "Reject"


def test_p1_run_deterministic():
    a = p1_run(synth_document(300, 9), 10, 20, 9)
    b = p1_run(synth_document(300, 9), 10, 20, 9)
    assert a.to_jsonl() == b.to_jsonl()


def test_p1_requires_long_document():
    with pytest.raises(ValueError):
        p1_run(synth_document(8, 0), 8, 20, 0)


# Protocol 2 -------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 4, 8, 12])
def test_p2_honest_run(n):
    tr = p2_run(synth_document(1024, n), n, 12, 30, 1, n)
    assert labels(tr) == {"B": "Accept", "C": "Accept"}
    assert tr.verdicts["C"].detail["mismatches"] == 0
    expect = 6 * n * 12 + n * ceil_log2(n) + 7 * 30
    assert tr.ledger.per_party("B") == tr.ledger.per_party("C") == expect
    assert tr.info["ell_S"] == 4 * n * 12


def test_p2_verifiable_sets():
    n = 10
    tr = p2_run(synth_document(512, 1), n, 8, 30, 1, 1)
    bob = set(tr.info["bob_set"])
    gamma = tr.artifacts["gamma"]
    charlie = set(range(n, 2 * n)) | set(gamma["B"][: n // 2])
    assert len(bob) == len(charlie) == 3 * n // 2
    assert bob | charlie == set(range(2 * n))
    assert len(bob & charlie) == n


def test_p2_bob_zero_tolerance():
    tr = p2_run(synth_document(512, 2), 8, 10, 30, 3, 2, corrupt=[0])
    assert tr.verdicts["B"].outcome is Outcome.REJECT
    assert tr.verdicts["C"].detail["reason"] == "received bottom"


def test_p2_charlie_tolerance():
    n, seed = 8, 4
    probe = p2_run(synth_document(512, seed), n, 10, 30, 1, seed)
    bob = set(probe.info["bob_set"])
    hidden = [i for i in range(n, 2 * n) if i not in bob]
    assert len(hidden) == n // 2
    one = p2_run(synth_document(512, seed), n, 10, 30, 1, seed, corrupt=hidden[:1])
    assert labels(one) == {"B": "Accept", "C": "Accept"}
    assert one.verdicts["C"].detail["mismatches"] == 1
    two = p2_run(synth_document(512, seed), n, 10, 30, 1, seed, corrupt=hidden[:2])
    assert labels(two) == {"B": "Accept", "C": "Reject"}


def test_p2_odd_n_rejected():
    with pytest.raises(ValueError):
        p2_run(synth_document(512, 0), 7, 10, 30, 1, 0)


def test_p2_tamper_aborts():
    tr = p2_run(synth_document(512, 0), 4, 10, 30, 1, 0, tamper=[TamperRule(2, "xor", mask=BitString(1, 4))])
    assert tr.aborted and set(labels(tr).values()) == {"Abort"}


# Protocol 3 -------------------------------------------------------------------


def test_thresholds_order():
    for l_max in range(0, 6):
        th = p3_thresholds(l_max)
        vals = [th[l] for l in range(-1, l_max + 1)]
        assert Fraction(1, 2) > vals[0]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] > 0
    th = p3_thresholds(1)
    assert (th[-1], th[0], th[1]) == (Fraction(3, 8), Fraction(1, 4), Fraction(1, 8))


def test_p3_param_checks():
    assert check_p3_params(5, 2, 1) == Fraction(1, 5)
    for bad in ((3, 2, 1), (2, 0, 1), (1, 1, 0), (9, 4, 1)):
        with pytest.raises(ValueError):
            check_p3_params(*bad)


@pytest.mark.parametrize("seed", range(3))
def test_p3_honest_run_two_receivers(seed):
    k, b_H, b_Hp = 16, 2, 40
    tr = p3_run(synth_document(4096, seed), 2, k, b_H, b_Hp, 1, 1, seed)
    assert labels(tr) == {"P1": "Accept(1)", "P2": "Accept(1)"}
    y = tr.info["y"]
    expect = 3 * k * y + k * ceil_log2(2 * k) + 7 * b_Hp
    assert tr.ledger.per_party("P1") == tr.ledger.per_party("P2") == expect
    assert tr.info["ell_S"] == 4 * k * b_H


def test_p3_honest_run_five_receivers():
    tr = p3_run(synth_document(1000, 0), 5, 8, 3, 30, 2, 1, 0)
    assert all(v == "Accept(1)" for v in labels(tr).values()) and len(tr.verdicts) == 5
    assert tr.info["ell_S"] == 25 * 8 * 3


def test_p3_partitions():
    tr = p3_run(synth_document(500, 1), 3, 6, 2, 30, 1, 1, 1)
    st_ = tr.artifacts["state"]
    for i in range(1, 4):
        assert set(st_.held[i]) == {1, 2, 3}
        assert all(len(v) == 6 for v in st_.held[i].values())
    for j in range(1, 4):
        given = sorted(r for i in range(1, 4) for r in st_.held[i][j])
        assert given == list(range((j - 1) * 18, j * 18))


def test_p3_chain_stops_on_reject():
    k = 16
    # spoil every tag P1 checks from its own block
    probe = p3_run(synth_document(600, 3), 2, k, 2, 30, 1, 1, 3)
    own = probe.artifacts["state"].held[1][1]
    tr = p3_run(synth_document(600, 3), 2, k, 2, 30, 1, 1, 3, corrupt=own)
    assert labels(tr) == {"P1": "Reject"}
    assert tr.info["bottom_received_by"] == ["P2"]


def test_p3_tamper_aborts():
    y = asu_key_bits_exact(601, 2)
    tamper = {("P1", "P2"): [TamperRule(1, "xor", mask=BitString(1, 16 * y))]}
    tr = p3_run(synth_document(600, 0), 2, 16, 2, 30, 1, 1, 0, tamper=tamper)
    assert tr.aborted and set(labels(tr).values()) == {"Abort"}


def _state(N=2, k=16, omega=1, l_max=1):
    d_R = Fraction(omega - 1, N)
    return P3State(N, k, omega, l_max, 2, 4, d_R, [], {i: {} for i in range(1, N + 1)})


def test_level_all_correct_passes_everywhere():
    st_ = _state()
    for l in range(-1, 2):
        assert level_from_counts(st_, {1: 0, 2: 0}, l).ver


def test_level_boundary_is_strict():
    st_ = _state(k=16)
    for l, s in p3_thresholds(1).items():
        at = -(-s * 16 // 1)  # ceil(s k)
        res = level_from_counts(st_, {1: int(at), 2: 0}, l)
        assert res.tests[1] == 0 and not res.ver
        assert level_from_counts(st_, {1: int(at) - 1, 2: 0}, l).ver


def test_two_receivers_need_both_tests():
    st_ = _state()
    assert not level_from_counts(st_, {1: 0, 2: 16}, 0).ver
    assert level_from_counts(st_, {1: 3, 2: 3}, 0).ver


@settings(max_examples=300)
@given(
    st.integers(2, 7),
    st.integers(0, 3),
    st.data(),
)
def test_verification_cascade(N, l_max, data):
    omega_max = N // 2  # 2 omega < N + 1
    omega = data.draw(st.integers(1, omega_max))
    d_R = Fraction(omega - 1, N)
    if not (l_max + 1) * d_R < Fraction(1, 2):
        return
    k = data.draw(st.integers(1, 40))
    st_ = _state(N, k, omega, l_max)
    counts = {j: data.draw(st.integers(0, k)) for j in range(1, N + 1)}
    vers = [level_from_counts(st_, counts, l).ver for l in range(-1, l_max + 1)]
    for hi in range(len(vers)):
        if vers[hi]:
            assert all(vers[:hi])


def test_majority_vote_and_verify_level_on_real_state():
    doc = synth_document(800, 6)
    tr = p3_run(doc, 3, 8, 2, 30, 1, 1, 6)
    st_ = tr.artifacts["state"]
    pair = tr.artifacts["pair"]
    assert p3_majority_vote(st_, pair) == "Valid"
    assert p3_verify_level(st_, 2, pair, -1).ver
    tags = split_tags(pair.sig, 2)
    wrong = BitString(0, 0)
    for t in tags:
        wrong = wrong + BitString(t.value ^ 0b11, 2)
    assert p3_majority_vote(st_, DocSigPair(doc, wrong)) == "Invalid"
    with pytest.raises(ValueError):
        p3_verify_level(st_, 1, pair, 2)


def test_majority_vote_two_receivers_needs_both():
    doc = synth_document(700, 8)
    tr = p3_run(doc, 2, 16, 2, 30, 1, 1, 8)
    st_, pair = tr.artifacts["state"], tr.artifacts["pair"]
    tags = split_tags(pair.sig, 2)
    # spoil everything P1 checks, leave P2's own block intact
    for r in st_.held[1][1] + st_.held[1][2]:
        tags[r] = tags[r].flip(0)
    spoiled = DocSigPair(doc, sum(tags[1:], tags[0]))
    assert not p3_verify_level(st_, 1, spoiled, -1).ver
    assert p3_majority_vote(st_, spoiled) == "Invalid"
    assert p3_verify(st_, 1, spoiled).outcome is Outcome.REJECT


# completeness over many seeds -------------------------------------------------


def test_all_protocols_accept_on_100_seeds():
    for seed in range(100):
        doc = synth_document(512, seed)
        t1 = p1_run(doc, 16, 24, seed)
        t2 = p2_run(doc, 4, 8, 24, 1, seed)
        t3 = p3_run(doc, 2, 8, 2, 24, 1, 1, seed)
        assert labels(t1) == {"B": "Accept", "C": "Accept"}
        assert labels(t2) == {"B": "Accept", "C": "Accept"}
        assert all(v.accepted for v in t3.verdicts.values())
