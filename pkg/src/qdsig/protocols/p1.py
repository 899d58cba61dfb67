"""Three-party signature with XOR-split keys and a one-time LFSR-Toeplitz hash.

Alice holds ``X_A = X_B XOR X_C``.  She hashes the document with a fresh
irreducible polynomial ``p_a`` and the register ``X_A[:b_H]``, then encrypts
``h_a || p_a`` with ``X_A[b_H:]``.  Bob and Charlie swap their key shares over
one authenticated channel, rebuild ``X_A`` and check the hash; Charlie always
checks, whatever Bob reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from ..bits import BitString, random_bits, spawn_rngs
from ..channels import Purpose, TamperRule, Transcript, WcAbort, WcChannel
from ..gf2 import Gf2Poly, is_irreducible, sample_irreducible
from ..uhash import toeplitz_hash
from .common import ABORT, DocSigPair, Verdict

ALICE, BOB, CHARLIE = "A", "B", "C"


@dataclass(frozen=True)
class P1Keys:
    X_A: BitString
    X_B: BitString
    X_C: BitString

    @property
    def b_H(self) -> int:
        return self.X_A.length // 3


def p1_distribute(b_H: int, rng: np.random.Generator) -> P1Keys:
    X_B = random_bits(rng, 3 * b_H)
    X_C = random_bits(rng, 3 * b_H)
    return P1Keys(X_B ^ X_C, X_B, X_C)


def p1_sign(
    doc: BitString, X_A: BitString, rng: np.random.Generator, p_a: Gf2Poly | None = None
) -> tuple[BitString, Gf2Poly]:
    """Return ``(Sig, p_a)``.  Passing ``p_a`` models a signer who reuses a polynomial."""
    b_H = X_A.length // 3
    if X_A.length != 3 * b_H:
        raise ValueError("X_A must have 3 b_H bits")
    reg, otp = X_A.split(b_H, 2 * b_H)
    if p_a is None:
        p_a = sample_irreducible(b_H, rng)
    elif p_a.degree != b_H:
        raise ValueError("reused polynomial has the wrong degree")
    h_a = toeplitz_hash(p_a, reg, doc.pad_one())
    digest = h_a + p_a.low_coefficients()
    return digest ^ otp, p_a


def p1_verify(pair: DocSigPair, K: BitString) -> Verdict:
    """Recover ``(h, p)`` from the signature with the rebuilt key and recheck the hash.

    A recovered polynomial that is not irreducible cannot come from an honest
    signer, so it is rejected outright.
    """
    b_H = K.length // 3
    if pair.sig.length != 2 * b_H:
        return Verdict.reject(reason="signature length")
    reg, otp = K.split(b_H, 2 * b_H)
    h, p_low = (pair.sig ^ otp).split(b_H, b_H)
    p = Gf2Poly.monic(p_low)
    if not is_irreducible(p):
        return Verdict.reject(reason="reducible polynomial")
    if toeplitz_hash(p, reg, pair.doc.pad_one()) != h:
        return Verdict.reject(reason="hash mismatch")
    return Verdict.accept()


def p1_run(
    doc: BitString,
    b_H: int,
    b_Hp: int,
    seed: int,
    tamper: Iterable[TamperRule] | None = None,
    p_a: Gf2Poly | None = None,
    bob_forges: Callable[[DocSigPair], DocSigPair] | None = None,
    run_id: str | None = None,
) -> Transcript:
    """Execute distribution, signing and both verifications.

    ``bob_forges`` lets a dishonest Bob replace the pair he forwards to
    Charlie; with ``p_a`` fixed this reproduces the polynomial-reuse attack.
    """
    if not doc.length > b_H >= 1:
        raise ValueError("need b_M > b_H >= 1")
    rngs = spawn_rngs(seed, ["keys", "alice", "wc"])
    tr = Transcript(run_id or f"p1-{seed}")
    tr.info.update(protocol="p1", b_M=doc.length, b_H=b_H, b_Hp=b_Hp, seed=seed)

    keys = p1_distribute(b_H, rngs["keys"])
    for r, X in ((BOB, keys.X_B), (CHARLIE, keys.X_C)):
        tr.ledger.charge(ALICE, r, Purpose.HASH_AGREEMENT, X.length)
        tr.log(ALICE, r, "preshared", X.length, "ok")

    sig, p_a = p1_sign(doc, keys.X_A, rngs["alice"], p_a)
    pair = DocSigPair(doc, sig)
    tr.artifacts.update(keys=keys, p_a=p_a, pair=pair)
    tr.info["ell_S"] = sig.length
    tr.log(ALICE, BOB, "public", 0, "delivered")

    try:
        wc = WcChannel(BOB, CHARLIE, b_Hp, rngs["wc"], tr, tamper)
        forwarded = bob_forges(pair) if bob_forges else pair
        msg1 = wc.transmit(BOB, CHARLIE, forwarded.doc + forwarded.sig + keys.X_B)
        c_doc, c_sig, c_XB = msg1.split(doc.length, 2 * b_H, 3 * b_H)
        c_XC = wc.transmit(CHARLIE, BOB, keys.X_C)

        bob = p1_verify(forwarded, keys.X_B ^ c_XC)
        v_b = BitString(0 if bob.accepted else 1, 1)
        c_vb = wc.transmit(BOB, CHARLIE, v_b)

        charlie = p1_verify(DocSigPair(c_doc, c_sig), keys.X_C ^ c_XB)
        charlie.detail["bob_reported"] = "Accept" if c_vb.value == 0 else "Reject"
    except WcAbort as exc:
        tr.aborted = True
        tr.abort_reason = str(exc)
        tr.verdicts = {BOB: ABORT, CHARLIE: ABORT}
        return tr

    tr.verdicts = {BOB: bob, CHARLIE: charlie}
    for party, v in tr.verdicts.items():
        tr.log(party, party, "local", 0, v.label())
    return tr
