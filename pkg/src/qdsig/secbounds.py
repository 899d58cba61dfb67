"""Closed-form security bounds and key-consumption formulas for the three protocols.

All position encodings are charged at ``ceil(log2(.))`` bits, both in the
costs and in the authentication terms of the bounds, because that is what a
run actually sends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp

from .protocols.common import ceil_log2
from .uhash import asu_key_bits

EXACT_XI_MAX_N = 64


def xi(kk: int, n: int, p: float) -> float:
    """Pr[at least kk successes in n Bernoulli(p) trials].

    Exact rational arithmetic for n <= 64; log-space summation otherwise.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if kk <= 0:
        return 1.0
    if kk > n:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if n <= EXACT_XI_MAX_N:
        return float(xi_exact(kk, n, Fraction(p)))
    j = np.arange(kk, n + 1, dtype=np.float64)
    log_terms = (
        gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0) + j * math.log(p) + (n - j) * math.log1p(-p)
    )
    return float(min(1.0, math.exp(logsumexp(log_terms))))


def xi_exact(kk: int, n: int, p: Fraction) -> Fraction:
    """Big-integer evaluation: sum_j C(n,j) a^j (b-a)^(n-j) / b^n with p = a/b."""
    if kk <= 0:
        return Fraction(1)
    if kk > n:
        return Fraction(0)
    a, b = p.numerator, p.denominator
    total = sum(math.comb(n, j) * a**j * (b - a) ** (n - j) for j in range(kk, n + 1))
    return Fraction(total, b**n)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class SecurityBudget:
    eps_for: float
    eps_rep: float
    eps_transf: float | None = None
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def total(self) -> float:
        return self.eps_for + self.eps_rep

    def to_json(self) -> dict:
        out = {"eps_for": self.eps_for, "eps_rep": self.eps_rep, "eps_sum": self.total}
        if self.eps_transf is not None:
            out["eps_transf"] = self.eps_transf
        out.update(self.extras)
        return out


@dataclass(frozen=True)
class CostReport:
    ell_P: int
    ell_S: int

    def to_json(self) -> dict:
        return {"ell_P": self.ell_P, "ell_S": self.ell_S}


# Protocol 1 ---------------------------------------------------------------


def eps_p1(b_M: int, b_H: int, b_Hp: int) -> SecurityBudget:
    if not b_M > b_H >= 1:
        raise ValueError("need b_M > b_H >= 1")
    eps_for = b_M * 2.0 ** (1 - b_H)
    eps_rep = max(2 * b_H + b_M, 3 * b_H) * 2.0 ** (1 - b_Hp)
    return SecurityBudget(_clamp(eps_for), _clamp(eps_rep))


def cost_p1(b_H: int, b_Hp: int) -> CostReport:
    return CostReport(3 * b_H + 5 * b_Hp, 2 * b_H)


# Protocol 2 ---------------------------------------------------------------


def repudiation_p2(n: int, e_max: int) -> Fraction:
    """Probability that all e_max+1 planted errors avoid the half Bob received."""
    out = Fraction(1)
    for i in range(e_max + 1):
        out *= Fraction(max(n // 2 - i, 0), n - i)
    return out


def eps_p2(b_M: int, n: int, b_H: int, b_Hp: int, e_max: int) -> SecurityBudget:
    if n < 2 or n % 2:
        raise ValueError("n must be even")
    if not b_M + 4 * n * b_H > (n / 2) * math.log2(n):
        raise ValueError("need b_M + 4 n b_H > (n/2) log2 n")
    if not 0 <= e_max <= n // 2:
        raise ValueError("e_max must lie in [0, n/2]")
    q = _clamp(b_M * 2.0 ** (1 - b_H))
    eps_for = xi(n // 2 - e_max, n // 2, q)
    comb = float(repudiation_p2(n, e_max))
    auth = (b_M + 4 * n * b_H) * 2.0 ** (1 - b_Hp)
    return SecurityBudget(eps_for, _clamp(max(comb, auth)), extras={"eps_rep_comb": comb, "eps_rep_auth": auth})


def cost_p2(n: int, b_H: int, b_Hp: int) -> CostReport:
    return CostReport(6 * n * b_H + n * ceil_log2(n) + 7 * b_Hp, 4 * n * b_H)


# Protocol 3 ---------------------------------------------------------------


def bound_s0(l_max: int) -> Fraction:
    """s_0 under the maximal equal spacing Delta s = 1 / (2 (l_max + 1))."""
    return Fraction(1, 2) - Fraction(1, 2 * (l_max + 1))


def tag_pass_probability(k: int, b_H: int, s: Fraction) -> float:
    """Pr[fewer than s k wrong tags] when each tag is guessed right w.p. 2^(1-b_H)."""
    need = math.floor(k * (1 - Fraction(s))) + 1
    return xi(need, k, _clamp(2.0 ** (1 - b_H)))


def eps_p3(
    b_M: int,
    N: int,
    k: int,
    b_H: int,
    b_Hp: int,
    omega: int,
    l_max: int,
    s0: Fraction | None = None,
    s_minus1: Fraction | None = None,
    y: int | None = None,
) -> SecurityBudget:
    """Forgery, transferability and repudiation bounds for N receivers.

    ``s0`` defaults to the equal-spacing value (1/4 at l_max = 1).  Passing
    ``s_minus1`` also reports the dispute-attack probability evaluated with
    the level -1 threshold instead of s_0.
    """
    if not 2 * omega < N + 1 or omega < 1:
        raise ValueError("need 1 <= omega < (N+1)/2")
    d_R = Fraction(omega - 1, N)
    if not (l_max + 1) * d_R < Fraction(1, 2):
        raise ValueError("need (l_max+1) d_R < 1/2")
    s0 = bound_s0(l_max) if s0 is None else Fraction(s0)
    y = asu_key_bits(b_M, b_H) if y is None else y
    honest = N - omega
    p_t = tag_pass_probability(k, b_H, s0)
    eps_for = _clamp(honest * xi(N // 2, honest, p_t))

    n_hon = N - (omega - 1)  # N (1 - d_R)
    decay = math.exp(-k / (8 * (l_max + 1) ** 2))
    auth_base = _clamp((k * y + k * ceil_log2(N * k)) * 2.0 ** (1 - b_Hp))
    eps_ij = n_hon * decay
    eps_auth = auth_base ** float(N * (Fraction(1, 2) - (l_max + 1) * d_R))
    eps_hyb = auth_base * xi(N // 2 + 1, n_hon, _clamp(decay))
    eps_rep = _clamp(math.comb(n_hon, 2) * max(eps_ij, eps_auth, eps_hyb))

    need = N // 2 + 1 - omega
    p_m1 = xi(need, honest, p_t)
    p_attack = xi(need, honest, p_m1)
    extras = {
        "p_t": p_t,
        "p_minus1": p_m1,
        "p_attack": p_attack,
        "eps_ij": eps_ij,
        "eps_auth": eps_auth,
        "eps_hyb": eps_hyb,
        "y": y,
    }
    if s_minus1 is not None:
        pt_m1 = tag_pass_probability(k, b_H, Fraction(s_minus1))
        extras["p_attack_at_s_minus1"] = xi(need, honest, xi(need, honest, pt_m1))
    return SecurityBudget(eps_for, eps_rep, eps_rep, extras)


def cost_p3(N: int, k: int, b_H: int, b_Hp: int, b_M: int, y: int | None = None) -> CostReport:
    y = asu_key_bits(b_M, b_H) if y is None else y
    ell_P = N * k * y + (N - 1) * (k * y + k * ceil_log2(N * k)) + (N - 1) * 6 * b_Hp + b_Hp
    return CostReport(ell_P, N * N * k * b_H)


def cost_p3_N2(k: int, b_H: int, b_Hp: int, b_M: int, y: int | None = None) -> CostReport:
    """3 k y + k ceil(log2 2k) + 7 b'_H and 4 k b_H."""
    return cost_p3(2, k, b_H, b_Hp, b_M, y)
