"""Three-party signature with 2n independent LFSR-Toeplitz hashes and shuffled key blocks.

Each receiver shares ``n`` blocks ``s^j || r^j`` (``b_H`` and ``2 b_H`` bits)
with Alice.  Before signing, Bob and Charlie each hand half of their blocks,
chosen through a secret permutation, to the other over an OTP-encrypted
authenticated channel.  Alice signs with all ``2n`` blocks; Bob checks the
``3n/2`` signatures he can decrypt with zero tolerance, Charlie checks his
``3n/2`` allowing up to ``e_max`` mismatches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..bits import BitString, concat, random_bits, spawn_rngs
from ..channels import (
    OtpFrame,
    PadSource,
    Purpose,
    TamperRule,
    Transcript,
    WcAbort,
    WcChannel,
    otp_receive,
    otp_send,
)
from ..gf2 import Gf2Poly, is_irreducible, sample_irreducible
from ..uhash import toeplitz_hash
from .common import ABORT, DocSigPair, Verdict, ceil_log2, decode_positions, encode_positions

ALICE, BOB, CHARLIE = "A", "B", "C"
BOTTOM = BitString(1, 1)


@dataclass(frozen=True)
class P2Keys:
    X_B: BitString
    X_C: BitString
    n: int
    b_H: int

    def block(self, who: str, j: int) -> tuple[BitString, BitString]:
        X = self.X_B if who == BOB else self.X_C
        blk = X[3 * self.b_H * j : 3 * self.b_H * (j + 1)]
        s, r = blk.split(self.b_H, 2 * self.b_H)
        return s, r


def check_p2_params(b_M: int, n: int, b_H: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if b_H < 1:
        raise ValueError("b_H must be >= 1")
    if not b_M + 4 * n * b_H > (n / 2) * math.log2(n):
        raise ValueError("need b_M + 4 n b_H > (n/2) log2 n")


def p2_sign_block(doc: BitString, s: BitString, r: BitString, p: Gf2Poly) -> BitString:
    h = toeplitz_hash(p, s, doc.pad_one())
    return (h + p.low_coefficients()) ^ r


def p2_check_block(doc: BitString, sig_j: BitString, s: BitString, r: BitString) -> bool:
    b_H = s.length
    h, p_low = (sig_j ^ r).split(b_H, b_H)
    p = Gf2Poly.monic(p_low)
    return is_irreducible(p) and toeplitz_hash(p, s, doc.pad_one()) == h


def p2_sign(doc: BitString, keys: P2Keys, rng: np.random.Generator) -> BitString:
    """Signatures 0..n-1 use Bob's blocks, n..2n-1 use Charlie's."""
    parts = []
    for who in (BOB, CHARLIE):
        for j in range(keys.n):
            s, r = keys.block(who, j)
            parts.append(p2_sign_block(doc, s, r, sample_irreducible(keys.b_H, rng)))
    return concat(parts)


def sig_piece(sig: BitString, idx: int, b_H: int) -> BitString:
    return sig[2 * b_H * idx : 2 * b_H * (idx + 1)]


def verifiable_set(own_offset: int, n: int, received: Iterable[int], other_offset: int) -> list[int]:
    return [own_offset + j for j in range(n)] + [other_offset + j for j in received]


def p2_run(
    doc: BitString,
    n: int,
    b_H: int,
    b_Hp: int,
    e_max: int,
    seed: int,
    corrupt: Iterable[int] = (),
    tamper: Iterable[TamperRule] | None = None,
    run_id: str | None = None,
) -> Transcript:
    """Full run; ``corrupt`` lists signature indices a dishonest Alice spoils."""
    check_p2_params(doc.length, n, b_H)
    if e_max < 0:
        raise ValueError("e_max must be >= 0")
    rngs = spawn_rngs(seed, ["keys", "bob", "charlie", "pads", "alice", "wc"])
    tr = Transcript(run_id or f"p2-{seed}")
    tr.info.update(protocol="p2", b_M=doc.length, n=n, b_H=b_H, b_Hp=b_Hp, e_max=e_max, seed=seed)

    keys = P2Keys(random_bits(rngs["keys"], 3 * n * b_H), random_bits(rngs["keys"], 3 * n * b_H), n, b_H)
    for r in (BOB, CHARLIE):
        tr.ledger.charge(ALICE, r, Purpose.HASH_AGREEMENT, 3 * n * b_H)
        tr.log(ALICE, r, "preshared", 3 * n * b_H, "ok")

    gamma = {BOB: rngs["bob"].permutation(n).tolist(), CHARLIE: rngs["charlie"].permutation(n).tolist()}
    width = ceil_log2(n)
    pads = PadSource(rngs["pads"])
    received: dict[str, list[int]] = {}
    got_blocks: dict[str, dict[int, tuple[BitString, BitString]]] = {BOB: {}, CHARLIE: {}}

    try:
        wc = WcChannel(BOB, CHARLIE, b_Hp, rngs["wc"], tr, tamper)
        for src, dst in ((BOB, CHARLIE), (CHARLIE, BOB)):
            chosen = gamma[src][: n // 2]
            blocks = concat([concat(keys.block(src, j)) for j in chosen])
            positions = encode_positions(chosen, width)
            f_blocks = otp_send(tr.ledger, (src, dst), blocks, pads)
            ct_blocks = wc.transmit(src, dst, f_blocks.ciphertext)
            f_pos = otp_send(tr.ledger, (src, dst), positions, pads)
            ct_pos = wc.transmit(src, dst, f_pos.ciphertext)
            plain_blocks = otp_receive(OtpFrame(ct_blocks, f_blocks.offset), pads)
            plain_pos = decode_positions(otp_receive(OtpFrame(ct_pos, f_pos.offset), pads), width)
            received[dst] = plain_pos
            for i, j in enumerate(plain_pos):
                blk = plain_blocks[3 * b_H * i : 3 * b_H * (i + 1)]
                got_blocks[dst][j] = tuple(blk.split(b_H, 2 * b_H))

        sig = p2_sign(doc, keys, rngs["alice"])
        for idx in sorted(set(corrupt)):
            if not 0 <= idx < 2 * n:
                raise ValueError(f"signature index {idx} out of range")
            lo = 2 * b_H * idx
            sig = sig.flip(lo)
        pair = DocSigPair(doc, sig)
        tr.artifacts.update(keys=keys, gamma=gamma, pair=pair)
        tr.info["ell_S"] = sig.length
        tr.log(ALICE, BOB, "public", 0, "delivered")

        bob_set = verifiable_set(0, n, received[BOB], n)
        bob_bad = []
        for idx in bob_set:
            s, r = keys.block(BOB, idx) if idx < n else got_blocks[BOB][idx - n]
            if not p2_check_block(doc, sig_piece(sig, idx, b_H), s, r):
                bob_bad.append(idx)
        if bob_bad:
            bob = Verdict.reject(mismatches=len(bob_bad))
            wc.transmit(BOB, CHARLIE, BOTTOM)
            charlie = Verdict.reject(reason="received bottom")
        else:
            bob = Verdict.accept(mismatches=0)
            fwd = wc.transmit(BOB, CHARLIE, doc + sig)
            c_doc, c_sig = fwd.split(doc.length, sig.length)
            charlie_set = verifiable_set(n, n, received[CHARLIE], 0)
            bad = 0
            for idx in charlie_set:
                s, r = keys.block(CHARLIE, idx - n) if idx >= n else got_blocks[CHARLIE][idx]
                if not p2_check_block(c_doc, sig_piece(c_sig, idx, b_H), s, r):
                    bad += 1
            charlie = Verdict.accept(mismatches=bad) if bad <= e_max else Verdict.reject(mismatches=bad)
    except WcAbort as exc:
        tr.aborted = True
        tr.abort_reason = str(exc)
        tr.verdicts = {BOB: ABORT, CHARLIE: ABORT}
        return tr

    tr.info["bob_set"] = bob_set
    tr.verdicts = {BOB: bob, CHARLIE: charlie}
    for party, v in tr.verdicts.items():
        tr.log(party, party, "local", 0, v.label())
    return tr
