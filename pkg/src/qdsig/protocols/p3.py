"""Multi-receiver signature with ASU tags, key shuffling and verification levels.

The sender draws ``N^2 k`` ASU functions.  Receiver ``P_i`` gets ``N k`` of
them over a secret channel, splits their indices into ``N`` random sets of
``k`` and hands set ``R_{i->j}`` (with the functions) to ``P_j`` over an
OTP-encrypted authenticated channel.  A signature is the list of all
``N^2 k`` tags.  ``P_i`` runs one test per origin ``j``: fewer than
``s_l k`` mismatching tags among ``R_{j->i}``.  The signature is verified at
level ``l`` when more than ``N delta_l`` tests pass; receivers try levels from
``l_max`` down to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from ..bits import BitString, concat, random_bits, spawn_rngs
from ..channels import (
    OtpFrame,
    PadSource,
    TamperRule,
    Transcript,
    WcAbort,
    WcChannel,
    otp_receive,
    otp_send,
    pair_of,
)
from ..uhash import AsuKey, asu_chunks, asu_hash_chunks, asu_key_from_bits, asu_sigma
from .common import ABORT, DocSigPair, Verdict, ceil_log2, decode_positions, encode_positions

SENDER = "P0"
BOTTOM = BitString(1, 1)


def party(i: int) -> str:
    return f"P{i}"


def p3_thresholds(l_max: int) -> dict[int, Fraction]:
    """Strictly decreasing thresholds s_{-1} > s_0 > ... > s_{l_max}, all inside (0, 1/2)."""
    return {l: Fraction(1, 2) - Fraction(l + 2, 2 * (l_max + 3)) for l in range(-1, l_max + 1)}


def check_p3_params(N: int, omega: int, l_max: int) -> Fraction:
    """Validate the coalition and level constraints; returns d_R."""
    if N < 2:
        raise ValueError("need at least two receivers")
    if not 2 * omega < N + 1:
        raise ValueError("omega must be < (N+1)/2")
    if omega < 1:
        raise ValueError("omega must be >= 1")
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    d_R = Fraction(omega - 1, N)
    if not (l_max + 1) * d_R < Fraction(1, 2):
        raise ValueError("need (l_max+1) d_R < 1/2")
    return d_R


@dataclass
class P3State:
    N: int
    k: int
    omega: int
    l_max: int
    b_H: int
    sigma: int
    d_R: Fraction
    keys: list[AsuKey]
    held: dict[int, dict[int, list[int]]]
    thresholds: dict[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if not self.thresholds:
            self.thresholds = p3_thresholds(self.l_max)

    @property
    def y(self) -> int:
        return 3 * self.b_H + 2 * self.sigma

    def delta(self, l: int) -> Fraction:
        return Fraction(1, 2) + (l + 1) * self.d_R


@dataclass(frozen=True)
class LevelResult:
    ver: bool
    level: int
    tests: dict[int, int]
    mismatches: dict[int, int]


def sign_tags(keys: list[AsuKey], doc: BitString) -> list[BitString]:
    chunk_cache: dict[int, list[int]] = {}
    out = []
    for key in keys:
        chunks = chunk_cache.get(key.width)
        if chunks is None:
            chunks = chunk_cache[key.width] = asu_chunks(doc, key.width)
        out.append(asu_hash_chunks(key, chunks))
    return out


def split_tags(sig: BitString, b_H: int) -> list[BitString]:
    return [sig[b_H * r : b_H * (r + 1)] for r in range(sig.length // b_H)]


def mismatch_counts(state: P3State, receiver: int, pair: DocSigPair) -> dict[int, int]:
    """Mismatching tags in each R_{j->i} held by the receiver."""
    tags = split_tags(pair.sig, state.b_H)
    if len(tags) != len(state.keys):
        raise ValueError("signature has the wrong number of tags")
    chunks = asu_chunks(pair.doc, state.b_H + state.sigma)
    out = {}
    for j, idx in state.held[receiver].items():
        out[j] = sum(asu_hash_chunks(state.keys[r], chunks) != tags[r] for r in idx)
    return out


def level_from_counts(state: P3State, counts: Mapping[int, int], l: int) -> LevelResult:
    s_l = state.thresholds[l]
    tests = {j: int(c < s_l * state.k) for j, c in counts.items()}
    ver = sum(tests.values()) > state.N * state.delta(l)
    return LevelResult(ver, l, tests, dict(counts))


def p3_verify_level(state: P3State, receiver: int, pair: DocSigPair, l: int) -> LevelResult:
    if not -1 <= l <= state.l_max:
        raise ValueError("level out of range")
    return level_from_counts(state, mismatch_counts(state, receiver, pair), l)


def p3_verify(state: P3State, receiver: int, pair: DocSigPair) -> Verdict:
    """Descend from l_max to 0; accept at the first level that verifies."""
    counts = mismatch_counts(state, receiver, pair)
    for l in range(state.l_max, -1, -1):
        res = level_from_counts(state, counts, l)
        if res.ver:
            return Verdict.accept(l, tests=res.tests, mismatches=res.mismatches)
    return Verdict.reject(mismatches=counts)


def p3_majority_vote(state: P3State, pair: DocSigPair) -> str:
    votes = sum(p3_verify_level(state, i, pair, -1).ver for i in range(1, state.N + 1))
    return "Valid" if votes >= state.N // 2 + 1 else "Invalid"


def p3_run(
    doc: BitString,
    N: int,
    k: int,
    b_H: int,
    b_Hp: int,
    omega: int,
    l_max: int,
    seed: int,
    corrupt: Iterable[int] = (),
    tamper: Mapping[tuple[str, str], Iterable[TamperRule]] | None = None,
    run_id: str | None = None,
) -> Transcript:
    """Distribution, signing, and chain verification P1 -> P2 -> ... -> PN.

    ``corrupt`` lists tag indices the sender spoils.  The sender-to-receiver
    key material is charged to that pair; receiver-to-receiver OTP payloads
    are charged to the sending receiver, WC costs to both ends.
    """
    d_R = check_p3_params(N, omega, l_max)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not doc.length + 1 > b_H >= 1:
        raise ValueError("need b_M >= b_H >= 1")
    sigma = asu_sigma(doc.length + 1, b_H)
    y = 3 * b_H + 2 * sigma
    Nk = N * k
    rngs = spawn_rngs(seed, ["sender", "partition", "pads", "wc"])
    tr = Transcript(run_id or f"p3-{seed}")
    tr.info.update(
        protocol="p3", b_M=doc.length, N=N, k=k, b_H=b_H, b_Hp=b_Hp, omega=omega,
        l_max=l_max, seed=seed, sigma=sigma, y=y,
    )

    keys = [asu_key_from_bits(random_bits(rngs["sender"], y), b_H, sigma) for _ in range(N * Nk)]
    pads = PadSource(rngs["pads"])
    wc_rng = rngs["wc"]
    tamper = tamper or {}
    held: dict[int, dict[int, list[int]]] = {i: {} for i in range(1, N + 1)}
    channels: dict[tuple[str, str], WcChannel] = {}

    for i in range(1, N + 1):
        mine = keys[(i - 1) * Nk : i * Nk]
        otp_send(tr.ledger, (SENDER, party(i)), concat([_key_bits(kk) for kk in mine]), pads)
        tr.log(SENDER, party(i), "secret", Nk * y, "ok")

    parts: dict[int, list[list[int]]] = {}
    for i in range(1, N + 1):
        perm = rngs["partition"].permutation(Nk)
        parts[i] = [sorted(perm[(j - 1) * k : j * k].tolist()) for j in range(1, N + 1)]
        held[i][i] = [(i - 1) * Nk + r for r in parts[i][i - 1]]

    width = ceil_log2(Nk)
    try:
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                pr = pair_of(party(i), party(j))
                ch = WcChannel(party(i), party(j), b_Hp, wc_rng, tr, tamper.get(pr))
                channels[pr] = ch
                for src, dst in ((i, j), (j, i)):
                    local = parts[src][dst - 1]
                    funcs = concat([_key_bits(keys[(src - 1) * Nk + r]) for r in local])
                    f1 = otp_send(tr.ledger, (party(src), party(dst)), funcs, pads, [party(src)])
                    c1 = ch.transmit(party(src), party(dst), f1.ciphertext)
                    f2 = otp_send(
                        tr.ledger, (party(src), party(dst)), encode_positions(local, width), pads, [party(src)]
                    )
                    c2 = ch.transmit(party(src), party(dst), f2.ciphertext)
                    otp_receive(OtpFrame(c1, f1.offset), pads)
                    got = decode_positions(otp_receive(OtpFrame(c2, f2.offset), pads), width)
                    held[dst][src] = [(src - 1) * Nk + r for r in got]

        state = P3State(N, k, omega, l_max, b_H, sigma, d_R, keys, held)
        tags = sign_tags(keys, doc)
        for r in sorted(set(corrupt)):
            tags[r] = tags[r].flip(0)
        pair = DocSigPair(doc, concat(tags))
        tr.artifacts.update(state=state, pair=pair)
        tr.info["ell_S"] = pair.sig.length
        tr.log(SENDER, party(1), "public", 0, "delivered")

        verdicts: dict[str, Verdict] = {}
        current = pair
        for i in range(1, N + 1):
            v = p3_verify(state, i, current)
            verdicts[party(i)] = v
            tr.log(party(i), party(i), "local", 0, v.label())
            if i == N:
                break
            nxt = party(i + 1)
            if v.accepted:
                fwd = channels[pair_of(party(i), nxt)].transmit(party(i), nxt, current.doc + current.sig)
                current = DocSigPair(*fwd.split(doc.length, pair.sig.length))
            else:
                for j in range(i + 1, N + 1):
                    channels[pair_of(party(i), party(j))].transmit(party(i), party(j), BOTTOM)
                tr.info["bottom_received_by"] = [party(j) for j in range(i + 1, N + 1)]
                break
    except WcAbort as exc:
        tr.aborted = True
        tr.abort_reason = str(exc)
        tr.verdicts = {party(i): ABORT for i in range(1, N + 1)}
        return tr

    tr.verdicts = verdicts
    return tr


def _key_bits(key: AsuKey) -> BitString:
    w = key.width
    return BitString(key.alpha.value, w) + BitString(key.beta.value, w) + key.gamma
