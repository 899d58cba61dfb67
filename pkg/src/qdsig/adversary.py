"""Constructive attacks and Monte-Carlo attack-rate estimators.

Every estimator returns an :class:`AttackOutcome` carrying the observed rate,
its two-sided 99% Clopper-Pearson interval and the closed-form bound it is
meant to respect.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np
from scipy.stats import beta

from .bits import BitString, make_rng, random_bits
from .gf2 import Gf2Poly, irreducibles, poly_mul
from .protocols.common import DocSigPair, synth_document
from .protocols.p1 import CHARLIE, p1_run
from .protocols.p3 import p3_thresholds
from .secbounds import eps_p3, repudiation_p2
from .uhash import LfsrToeplitzKey, axu_hash, toeplitz_hash


def clopper_pearson(successes: int, trials: int, alpha: float = 0.01) -> tuple[float, float]:
    """Exact two-sided (1 - alpha) binomial confidence interval."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    lo = 0.0 if successes == 0 else float(beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass
class AttackOutcome:
    attack: str
    trials: int
    successes: int
    bound: float
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    @property
    def cp99(self) -> tuple[float, float]:
        return clopper_pearson(self.successes, self.trials)

    def to_json(self) -> dict:
        lo, hi = self.cp99
        out = {
            "attack": self.attack,
            "params": self.params,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "cp99_low": lo,
            "cp99_high": hi,
            "bound": self.bound,
        }
        if self.extras:
            out["extras"] = self.extras
        return out


# Polynomial reuse in Protocol 1 --------------------------------------------


def attack_lemma3(pair: DocSigPair, p_a: Gf2Poly, b_M: int | None = None) -> DocSigPair:
    """Forge against a signer who reuses ``p_a``.

    Adding a multiple of ``p_a`` to the document leaves every hash built on
    ``p_a`` unchanged, so the signature can be kept as is (tag offset 0).  The
    multiple used is ``p_a`` itself; it occupies positions 0..b_H, inside the
    document and before the padding bit.
    """
    b_M = pair.doc.length if b_M is None else b_M
    if b_M != pair.doc.length:
        raise ValueError("b_M disagrees with the document length")
    b_H = p_a.degree
    if b_M < b_H + 1:
        raise ValueError("document too short to embed a multiple of p_a")
    m = BitString(p_a.bits, b_M)  # g(x) = 1
    return DocSigPair(pair.doc ^ m, pair.sig)


def run_lemma3(seeds, b_M: int = 256, b_H: int = 16, b_Hp: int = 32) -> AttackOutcome:
    """End-to-end: learn ``p_a`` from one run, forge in a second run that reuses it."""
    seeds = list(seeds)
    wins = 0
    for s in seeds:
        first = p1_run(synth_document(b_M, 2 * s), b_H, b_Hp, s)
        p_a = first.artifacts["p_a"]
        doc = synth_document(b_M, 2 * s + 1)
        forged: list[DocSigPair] = []

        def forge(pair: DocSigPair) -> DocSigPair:
            f = attack_lemma3(pair, p_a, b_M)
            forged.append(f)
            return f

        second = p1_run(doc, b_H, b_Hp, s + 10**6, p_a=p_a, bob_forges=forge)
        ok = second.verdicts[CHARLIE].accepted and forged[0].doc != doc
        wins += int(ok)
    return AttackOutcome("lemma3", len(seeds), wins, 1.0, {"b_M": b_M, "b_H": b_H, "b_Hp": b_Hp})


# Forgery against Protocol 1 -------------------------------------------------


def divisor_message(b_H: int, b_M: int) -> Gf2Poly:
    """Product of as many distinct degree-b_H irreducibles as fit below x^b_M (1 if none)."""
    count = (b_M - 1) // b_H
    polys = irreducibles(b_H)[:count]
    return reduce(poly_mul, polys, Gf2Poly(1))


def _hash_tables(b_H: int, m: BitString) -> np.ndarray:
    """table[p, s] = hash of m under the p-th irreducible and register s (all s)."""
    polys = irreducibles(b_H)
    size = 1 << b_H
    out = np.zeros((len(polys), size), dtype=np.int64)
    for pi, p in enumerate(polys):
        row = out[pi]
        for r in range(b_H):
            col = toeplitz_hash(p, BitString(1 << r, b_H), m).value
            row[1 << r : 2 << r] = row[: 1 << r] ^ col
    return out


def mc_forgery_p1(b_H: int, b_M: int, trials: int, seed: int, strategy: str = "divisor") -> AttackOutcome:
    """Bob picks ``(m, t)`` blind and wins when ``T_{p_a, s}(m) = t``.

    The signer's ``p_a`` is a uniform irreducible and the register ``s`` is
    uniform; ``divisor`` takes ``t = 0`` and ``m`` divisible by many
    candidate polynomials, ``random`` draws ``(m, t)`` once at random.
    """
    if b_M < 1:
        raise ValueError("b_M must be >= 1")
    if not 1 <= b_H <= 12:
        raise ValueError("b_H must be in [1, 12]")
    rng = make_rng(seed)
    if strategy == "divisor":
        m = BitString(divisor_message(b_H, b_M).bits, b_M)
        t = 0
    elif strategy == "random":
        m = random_bits(rng, b_M)
        if not m:
            m = m.flip(0)
        t = random_bits(rng, b_H).value
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    table = _hash_tables(b_H, m)
    pi = rng.integers(0, table.shape[0], size=trials)
    s = rng.integers(0, 1 << b_H, size=trials)
    wins = int(np.count_nonzero(table[pi, s] == t))
    bound = min(1.0, b_M * 2.0 ** (1 - b_H))
    return AttackOutcome("forge-p1", trials, wins, bound, {"b_H": b_H, "b_M": b_M, "strategy": strategy})


# Repudiation against Protocol 2 ---------------------------------------------


def mc_repudiation_p2(n: int, e_max: int, trials: int, seed: int) -> AttackOutcome:
    """Alice spoils e_max+1 of Charlie's own signatures and hopes Bob saw none of them.

    Bob receives n/2 of Charlie's blocks chosen by a uniform permutation.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even")
    if not (0 <= e_max and e_max + 1 <= n):
        raise ValueError("need 0 <= e_max and e_max + 1 <= n")
    rng = make_rng(seed)
    keys = rng.random((trials, n))
    # position of element j inside the random order; Bob gets positions < n/2
    rank = np.argsort(np.argsort(keys, axis=1), axis=1)
    hidden = rank[:, : e_max + 1] >= n // 2
    wins = int(np.count_nonzero(hidden.all(axis=1)))
    bound = float(repudiation_p2(n, e_max))
    return AttackOutcome("repudiate-p2", trials, wins, bound, {"n": n, "e_max": e_max})


# Protocol 3 -----------------------------------------------------------------


def _check_coalition(N: int, omega: int) -> None:
    if omega < 1:
        raise ValueError("a coalition needs at least one member")
    if not 2 * omega < N + 1:
        raise ValueError("omega must be < (N+1)/2")


def _honest_test_passes(rng, shape, k: int, b_H: int, s: Fraction) -> np.ndarray:
    """Guess k unknown tags (each right w.p. 2^(1-b_H)); pass iff mismatches < s k."""
    q = min(1.0, 2.0 ** (1 - b_H))
    correct = rng.binomial(k, q, size=shape)
    return (k - correct) < float(s * k)


def _forge_rate(N, k, b_H, omega, trials, seed, level, l_max):
    """Per-trial count of honest receivers verifying a forged pair at ``level``."""
    rng = make_rng(seed)
    d_R = Fraction(omega - 1, N)
    s = p3_thresholds(l_max)[level]
    delta = Fraction(1, 2) + (level + 1) * d_R
    honest = N - omega
    # honest receivers x honest origins; coalition origins always pass
    passes = _honest_test_passes(rng, (trials, honest, honest), k, b_H, s)
    total = passes.sum(axis=2) + omega
    ver = total > float(N * delta)
    return ver.sum(axis=1)


def mc_forgery_p3(
    N: int, k: int, b_H: int, omega: int, trials: int, seed: int, l_max: int = 1
) -> AttackOutcome:
    """A coalition of receivers (sender excluded) forges tags for a new document.

    Tags from functions the coalition handed out are set correctly; all other
    tags are guesses.  Success: some honest receiver verifies at level 0.
    """
    _check_coalition(N, omega)
    if k > 64 or b_H > 8:
        raise ValueError("keep k <= 64 and b_H <= 8")
    ver = _forge_rate(N, k, b_H, omega, trials, seed, 0, l_max)
    wins = int(np.count_nonzero(ver > 0))
    s0 = p3_thresholds(l_max)[0]
    budget = eps_p3(10**6, N, k, b_H, 64, omega, l_max, s0=s0)
    params = {"N": N, "k": k, "b_H": b_H, "omega": omega, "l_max": l_max}
    return AttackOutcome("forge-p3", trials, wins, budget.eps_for, params, {"p_t": budget.extras["p_t"]})


def attack_dispute_p3(
    N: int, k: int, b_H: int, omega: int, trials: int, seed: int, l_max: int = 1
) -> AttackOutcome:
    """Forge, then call a majority vote evaluated at level -1.

    The vote is Valid when at least floor(N/2)+1 receivers verify at level -1;
    coalition members always vote for the forgery.  The reference bound is
    the closed-form p_attack; the same formula re-evaluated with the level -1
    threshold is reported in ``extras``.
    """
    _check_coalition(N, omega)
    if k > 64 or b_H > 8:
        raise ValueError("keep k <= 64 and b_H <= 8")
    ver = _forge_rate(N, k, b_H, omega, trials, seed, -1, l_max)
    wins = int(np.count_nonzero(ver + omega >= N // 2 + 1))
    th = p3_thresholds(l_max)
    budget = eps_p3(10**6, N, k, b_H, 64, omega, l_max, s0=th[0], s_minus1=th[-1])
    params = {"N": N, "k": k, "b_H": b_H, "omega": omega, "l_max": l_max}
    extras = {"p_attack_at_s_minus1": budget.extras["p_attack_at_s_minus1"], "eps_for": budget.eps_for}
    return AttackOutcome("dispute-p3", trials, wins, budget.extras["p_attack"], params, extras)


def attack_transferability_p3(
    N: int,
    k: int,
    omega: int,
    p_e: float | None,
    trials: int,
    seed: int,
    level: int = 1,
    l_max: int = 1,
) -> AttackOutcome:
    """Dishonest sender spoils each function independently with probability ``p_e``.

    Success for the fixed ordered pair of honest receivers (first, second):
    the first verifies at ``level`` while the second fails at ``level - 1``.
    Dishonest receivers hand correct functions to the first and spoiled ones
    to the second.  ``p_e=None`` picks the midpoint of the two thresholds.
    """
    if not (1 <= omega and 2 * omega < N + 1):
        raise ValueError("omega must be in [1, (N+1)/2)")
    if not 1 <= level <= l_max:
        raise ValueError("level must lie in [1, l_max]")
    th = p3_thresholds(l_max)
    if p_e is None:
        p_e = float(th[level] + th[level - 1]) / 2
    if not 0.0 <= p_e <= 1.0:
        raise ValueError("p_e must lie in [0, 1]")
    rng = make_rng(seed)
    d_R = Fraction(omega - 1, N)
    honest = N - (omega - 1)
    # spoiled flags for each honest origin's N k functions, shuffled by the origin
    flags = rng.random((trials, honest, N * k)) < p_e
    flags = rng.permuted(flags, axis=2)
    # group g of origin o goes to receiver g; receivers 0 and 1 are the tested pair
    counts = flags[:, :, : 2 * k].reshape(trials, honest, 2, k).sum(axis=3)

    def verifies(recv: int, l: int) -> np.ndarray:
        passed = (counts[:, :, recv] < float(th[l] * k)).sum(axis=1)
        bonus = (omega - 1) if recv == 0 else 0
        return passed + bonus > float(N * (Fraction(1, 2) + (l + 1) * d_R))

    wins = int(np.count_nonzero(verifies(0, level) & ~verifies(1, level - 1)))
    budget = eps_p3(10**6, N, k, 2, 64, omega, l_max)
    params = {"N": N, "k": k, "omega": omega, "p_e": p_e, "level": level, "l_max": l_max}
    return AttackOutcome("transfer-p3", trials, wins, budget.extras["eps_ij"], params)


# Wegman-Carter key recycling, exhaustive ------------------------------------


def wc_keys(b_Hp: int) -> list[LfsrToeplitzKey]:
    return [
        LfsrToeplitzKey(p, BitString(s, b_Hp)) for p in irreducibles(b_Hp) for s in range(1, 1 << b_Hp)
    ]


def wc_exhaustive_substitution(b_Hp: int, b_M: int, n_msgs: int = 3, seed: int = 0) -> dict:
    """Best deterministic substitution of message 1 after observing n authenticated messages.

    Enumerates every key ``(k0, k_1..k_n)``.  For each observation Eve picks,
    per forged message, the tag consistent with the most keys; the success
    probability is averaged over all keys and maximised over forged messages.
    """
    keys = wc_keys(b_Hp)
    rng = make_rng(seed)
    msgs = [random_bits(rng, b_M) for _ in range(n_msgs)]
    size = 1 << b_Hp
    F = len(keys)
    # f_{k0}(m) for every key and every message of length b_M (padded as on the channel)
    all_m = [BitString(v, b_M) for v in range(1 << b_M)]
    H = np.array([[axu_hash(k0, m.pad_one()).value for m in all_m] for k0 in keys], dtype=np.int64)
    h_obs = np.stack([H[:, m.value] for m in msgs], axis=1)  # (F, n)

    pads = np.array(list(itertools.product(range(size), repeat=n_msgs)), dtype=np.int64)  # (P, n)
    # observed tags for every full key: (F, P, n)
    tags = h_obs[:, None, :] ^ pads[None, :, :]
    obs_index = np.zeros(tags.shape[:2], dtype=np.int64)
    for i in range(n_msgs):
        obs_index = obs_index * size + tags[:, :, i]
    n_obs = size**n_msgs
    total_keys = F * len(pads)

    best = 0.0
    best_m = None
    for mE in range(1 << b_M):
        if mE == msgs[0].value:
            continue
        true_tag = H[:, mE][:, None] ^ pads[None, :, 0]  # (F, P) correct forged tag
        # |S(t)| per observation: count keys with that observation and forged tag t
        counts = np.zeros((n_obs, size), dtype=np.int64)
        np.add.at(counts, (obs_index.ravel(), true_tag.ravel()), 1)
        guess = counts.argmax(axis=1)
        success = np.count_nonzero(guess[obs_index] == true_tag) / total_keys
        if success > best:
            best, best_m = success, mE
    eps = b_M * 2.0 ** (1 - b_Hp)
    return {
        "b_Hp": b_Hp,
        "b_M": b_M,
        "n_msgs": n_msgs,
        "family_size": F,
        "keys_enumerated": total_keys,
        "best_success": best,
        "best_forged_message": best_m,
        "epsilon": eps,
    }
