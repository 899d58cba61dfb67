"""Key ledger, one-time-pad secret channels, and Wegman-Carter authenticated channels.

Every consumed preshared bit is written to a :class:`KeyLedger` entry tagged
with the party pair that shares it, its purpose, and the parties it is
attributed to when computing per-receiver consumption.

A :class:`WcChannel` authenticates a sequence of messages between two
parties with one AXU function (tag length ``b'_H``) and a fresh OTP string
per tag.  Setting up costs ``2 b'_H`` bits and each message costs ``b'_H``
more.  A failed check raises :class:`WcAbort`, which ends the enclosing run
without verdicts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .bits import BitString, random_bits
from .uhash import LfsrToeplitzKey, axu_hash, sample_axu_key


class Purpose(str, Enum):
    HASH_AGREEMENT = "hash-agreement"
    OTP_PAYLOAD = "otp-payload"
    WC_SETUP = "wc-setup"
    WC_TAG_OTP = "wc-tag-otp"


def pair_of(a: str, b: str) -> tuple[str, str]:
    """Canonical unordered party pair."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class LedgerEntry:
    pair: tuple[str, str]
    purpose: Purpose
    bits: int
    attributed_to: frozenset[str]
    note: str = ""


@dataclass
class KeyLedger:
    entries: list[LedgerEntry] = field(default_factory=list)

    def charge(
        self,
        a: str,
        b: str,
        purpose: Purpose,
        bits: int,
        attributed_to: Iterable[str] | None = None,
        note: str = "",
    ) -> LedgerEntry:
        """Append an entry; by default both parties of the pair carry the full cost."""
        if bits < 0:
            raise ValueError("negative charge")
        pair = pair_of(a, b)
        who = frozenset(pair if attributed_to is None else attributed_to)
        if not who <= set(pair):
            raise ValueError("cost attributed outside the pair")
        entry = LedgerEntry(pair, Purpose(purpose), bits, who, note)
        self.entries.append(entry)
        return entry

    def total(self, a: str | None = None, b: str | None = None, purpose: Purpose | None = None) -> int:
        pair = pair_of(a, b) if a is not None and b is not None else None
        return sum(
            e.bits
            for e in self.entries
            if (pair is None or e.pair == pair) and (purpose is None or e.purpose == purpose)
        )

    def per_party(self, party: str) -> int:
        """Bits a party consumes under the attribution recorded on each entry."""
        return sum(e.bits for e in self.entries if party in e.attributed_to)

    def breakdown(self, party: str) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            if party in e.attributed_to:
                out[e.purpose.value] = out.get(e.purpose.value, 0) + e.bits
        return out


# transcript ---------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    run_id: str
    step: int
    sender: str
    receiver: str
    channel_kind: str
    bits_charged: int
    tampered: bool
    outcome: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "run_id": self.run_id,
                "step": self.step,
                "sender": self.sender,
                "receiver": self.receiver,
                "channel_kind": self.channel_kind,
                "bits_charged": self.bits_charged,
                "tampered": self.tampered,
                "outcome": self.outcome,
            },
            sort_keys=False,
        )


@dataclass
class Transcript:
    run_id: str
    ledger: KeyLedger = field(default_factory=KeyLedger)
    events: list[Event] = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    aborted: bool = False
    abort_reason: str = ""
    info: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)

    def log(self, sender: str, receiver: str, kind: str, bits: int, outcome: str, tampered: bool = False) -> Event:
        ev = Event(self.run_id, len(self.events), sender, receiver, kind, bits, tampered, outcome)
        self.events.append(ev)
        return ev

    def to_jsonl(self) -> str:
        return "".join(ev.to_json() + "\n" for ev in self.events)


# one-time pad ---------------------------------------------------------------


class PadSource:
    """Metered supply of preshared pad bits for one party pair.

    Every call to :meth:`take` returns bits at a fresh offset; the issued
    ranges never overlap.
    """

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self.offset = 0
        self.issued: list[tuple[int, int]] = []
        self._store: dict[int, BitString] = {}

    def take(self, n: int) -> tuple[int, BitString]:
        start = self.offset
        pad = random_bits(self._rng, n)
        self.offset += n
        self.issued.append((start, n))
        self._store[start] = pad
        return start, pad

    def lookup(self, offset: int) -> BitString:
        return self._store[offset]


@dataclass(frozen=True)
class OtpFrame:
    ciphertext: BitString
    offset: int


def otp_send(
    ledger: KeyLedger,
    pair: tuple[str, str],
    payload: BitString,
    pads: PadSource,
    attributed_to: Iterable[str] | None = None,
) -> OtpFrame:
    """Encrypt with fresh pad bits and charge their number to the pair."""
    offset, pad = pads.take(payload.length)
    ledger.charge(pair[0], pair[1], Purpose.OTP_PAYLOAD, payload.length, attributed_to)
    return OtpFrame(payload ^ pad, offset)


def otp_receive(frame: OtpFrame, pads: PadSource) -> BitString:
    return frame.ciphertext ^ pads.lookup(frame.offset)


# tampering ------------------------------------------------------------------


@dataclass(frozen=True)
class WcMessage:
    m: BitString
    t: BitString
    index: int


@dataclass(frozen=True)
class TamperRule:
    """Adversarial edit applied to the WC message with a given index.

    ``kind`` is ``identity``, ``substitute`` (replace with ``(message, tag)``)
    or ``xor`` (message XOR ``mask``; the tag travels unchanged).
    """

    target: int
    kind: str = "identity"
    message: BitString | None = None
    tag: BitString | None = None
    mask: BitString | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "substitute", "xor"):
            raise ValueError(f"unknown tamper kind {self.kind!r}")
        if self.kind == "substitute" and (self.message is None or self.tag is None):
            raise ValueError("substitute rule needs message and tag")
        if self.kind == "xor" and self.mask is None:
            raise ValueError("xor rule needs a mask")


def apply_tamper(rule: TamperRule, msg: WcMessage) -> WcMessage:
    if rule.target != msg.index:
        raise ValueError("rule does not target this message")
    if rule.kind == "identity":
        return msg
    if rule.kind == "substitute":
        return WcMessage(rule.message, rule.tag, msg.index)
    return WcMessage(msg.m ^ rule.mask, msg.t, msg.index)


def tamper_map(rules: Iterable[TamperRule] | None) -> dict[int, TamperRule]:
    out: dict[int, TamperRule] = {}
    for r in rules or ():
        if r.target in out:
            raise ValueError(f"more than one tamper rule for message {r.target}")
        out[r.target] = r
    return out


# Wegman-Carter channel ------------------------------------------------------


class WcAbort(RuntimeError):
    """Authentication failed; the enclosing protocol run stops here."""


class WcChannel:
    """Authenticated channel between two parties with key recycling.

    One AXU function ``k0`` (tag length ``b_Hp``) authenticates every message;
    message ``i`` uses a fresh ``b_Hp``-bit pad ``k_i``.  Indices start at 1.
    """

    def __init__(
        self,
        a: str,
        b: str,
        b_Hp: int,
        rng: np.random.Generator,
        transcript: Transcript,
        tamper: Iterable[TamperRule] | None = None,
    ):
        self.parties = pair_of(a, b)
        self.b_Hp = b_Hp
        self._rng = rng
        self.transcript = transcript
        self.family_key: LfsrToeplitzKey = sample_axu_key(b_Hp, rng)
        self._pads: dict[int, BitString] = {}
        self._consumed: set[int] = set()
        self.messages_sent = 0
        self.tamper = tamper_map(tamper)
        transcript.ledger.charge(a, b, Purpose.WC_SETUP, 2 * b_Hp, note="wc setup")
        transcript.log(a, b, "wc-setup", 2 * b_Hp, "ok")

    def tag(self, m: BitString, index: int) -> BitString:
        return axu_hash(self.family_key, m.pad_one()) ^ self._pads[index]

    def send(self, m: BitString) -> WcMessage:
        self.messages_sent += 1
        i = self.messages_sent
        self._pads[i] = random_bits(self._rng, self.b_Hp)
        a, b = self.parties
        self.transcript.ledger.charge(a, b, Purpose.WC_TAG_OTP, self.b_Hp)
        return WcMessage(m, self.tag(m, i), i)

    def receive(self, msg: WcMessage) -> bool:
        """True (accept) iff the index is fresh and the tag checks out."""
        if msg.index in self._consumed or msg.index not in self._pads:
            return False
        self._consumed.add(msg.index)
        if msg.t.length != self.b_Hp or msg.m.length == 0:
            return False
        return self.tag(msg.m, msg.index) == msg.t

    def transmit(self, sender: str, receiver: str, m: BitString) -> BitString:
        """Send, let the adversary act, verify; returns what the receiver accepted."""
        if {sender, receiver} != set(self.parties):
            raise ValueError("endpoint not on this channel")
        msg = self.send(m)
        rule = self.tamper.get(msg.index)
        delivered = apply_tamper(rule, msg) if rule is not None else msg
        tampered = delivered != msg
        ok = self.receive(delivered)
        self.transcript.log(sender, receiver, "wc", self.b_Hp, "accept" if ok else "abort", tampered)
        if not ok:
            raise WcAbort(f"authentication failed on message {msg.index} from {sender} to {receiver}")
        return delivered.m
