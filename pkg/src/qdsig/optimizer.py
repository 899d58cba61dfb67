"""Integer parameter search minimizing preshared key use under eps_for + eps_rep <= target.

The objective is lexicographic: fewest preshared bits per receiver first,
then shortest signature.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .protocols.common import ceil_log2
from .secbounds import cost_p1, cost_p2, cost_p3_N2, eps_p1, eps_p2, eps_p3, repudiation_p2, xi
from .uhash import asu_key_bits

DEFAULT_TARGET = 1e-10
CSV_COLUMNS = ["protocol", "b_M", "ell_P", "ell_S", "b_H", "b_Hp", "n", "e_max", "k", "eps_for", "eps_rep"]
SWEEP_GRID = [10**e for e in range(2, 11)]


class Infeasible(RuntimeError):
    pass


def _check_target(eps_target: float) -> None:
    if not 0.0 < eps_target < 1.0:
        raise ValueError("eps_target must lie in (0, 1)")


@dataclass
class OptimizationResult:
    protocol: str
    b_M: int
    ell_P: int
    ell_S: int
    b_H: int
    b_Hp: int
    eps_for: float
    eps_rep: float
    n: int | None = None
    e_max: int | None = None
    k: int | None = None
    frontier: list = field(default_factory=list, repr=False)

    @property
    def key(self) -> tuple:
        return (self.ell_P, self.ell_S, self.b_H, self.b_Hp)

    def to_row(self) -> dict:
        d = asdict(self)
        return {c: ("" if d.get(c) is None else d[c]) for c in CSV_COLUMNS}

    def to_json(self) -> dict:
        d = asdict(self)
        if not d["frontier"]:
            d.pop("frontier")
        return d


# Protocol 1 -----------------------------------------------------------------


def p1_estimates(b_M: int, eps_target: float) -> tuple[float, float]:
    """Closed-form starting point: 3/8 of the budget to forgery, 5/8 to repudiation."""
    b_H = math.log2(b_M / (0.375 * eps_target)) + 1
    b_Hp = math.log2((b_M + 2 * b_H) / (0.625 * eps_target)) + 1
    return b_H, b_Hp


def _p1_scan(b_M: int, eps_target: float, bh_range: Iterable[int], bhp_range: Sequence[int]):
    best = None
    for b_H in bh_range:
        if not b_M > b_H >= 1:
            continue
        for b_Hp in bhp_range:
            if b_Hp < 1:
                continue
            eps = eps_p1(b_M, b_H, b_Hp)
            if eps.total > eps_target:
                continue
            cost = cost_p1(b_H, b_Hp)
            cand = OptimizationResult("p1", b_M, cost.ell_P, cost.ell_S, b_H, b_Hp, eps.eps_for, eps.eps_rep)
            if best is None or cand.key < best.key:
                best = cand
    return best


def optimize_p1(b_M: int, eps_target: float = DEFAULT_TARGET, window: int = 4) -> OptimizationResult:
    _check_target(eps_target)
    if b_M <= 64:
        raise ValueError("optimizer expects b_M > 64")
    bh0, bhp0 = (round(v) for v in p1_estimates(b_M, eps_target))
    for w in (window, 2 * window):
        best = _p1_scan(b_M, eps_target, range(bh0 - w, bh0 + w + 1), range(bhp0 - w, bhp0 + w + 1))
        if best is not None:
            return best
    raise Infeasible(f"no feasible (b_H, b'_H) near ({bh0}, {bhp0})")


def brute_force_p1(b_M: int, eps_target: float = DEFAULT_TARGET, lo: int = 8, hi: int = 128) -> OptimizationResult | None:
    return _p1_scan(b_M, eps_target, range(lo, hi + 1), range(lo, hi + 1))


# Protocol 2 -----------------------------------------------------------------


def _p2_eps_for(b_M: int, n: int, b_H: int, e_max: int) -> float:
    q = min(1.0, b_M * 2.0 ** (1 - b_H))
    return xi(n // 2 - e_max, n // 2, q)


def _min_b_H(pred, lo: int = 1, hi: int = 256) -> int | None:
    """Smallest b_H in [lo, hi] with pred(b_H) true; pred must be monotone."""
    if not pred(hi):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _min_b_Hp(payload: int, budget: float) -> int | None:
    """Smallest b'_H with payload * 2^(1-b'_H) <= budget."""
    if budget <= 0:
        return None
    b = max(1, math.ceil(1 + math.log2(payload / budget)))
    while payload * 2.0 ** (1 - b) > budget:
        b += 1
    while b > 1 and payload * 2.0 ** (2 - b) <= budget:
        b -= 1
    return b


def _p2_point(b_M: int, n: int, e_max: int, b_H: int, eps_target: float) -> OptimizationResult | None:
    comb = float(repudiation_p2(n, e_max))
    ef = _p2_eps_for(b_M, n, b_H, e_max)
    budget = eps_target - ef
    if budget < comb:
        return None
    b_Hp = _min_b_Hp(b_M + 4 * n * b_H, budget)
    if b_Hp is None:
        return None
    # float rounding at the boundary: confirm with the reference formula
    while eps_p2(b_M, n, b_H, b_Hp, e_max).total > eps_target:
        b_Hp += 1
    eps = eps_p2(b_M, n, b_H, b_Hp, e_max)
    cost = cost_p2(n, b_H, b_Hp)
    return OptimizationResult("p2", b_M, cost.ell_P, cost.ell_S, b_H, b_Hp, eps.eps_for, eps.eps_rep, n=n, e_max=e_max)


def optimize_p2(
    b_M: int, eps_target: float = DEFAULT_TARGET, n_range: Iterable[int] = range(4, 513, 2), verbose: bool = False
) -> OptimizationResult:
    _check_target(eps_target)
    if b_M <= 64:
        raise ValueError("optimizer expects b_M > 64")
    bhp_floor = _min_b_Hp(b_M, eps_target)
    best: OptimizationResult | None = None
    frontier = []
    for n in n_range:
        if n < 4 or n % 2 or not b_M + 4 * n > (n / 2) * math.log2(n):
            continue
        # smallest admissible e_max: the combinatorial term alone must fit
        e_min = next((e for e in range(n // 2) if float(repudiation_p2(n, e)) < eps_target), None)
        if e_min is None:
            continue
        fixed = n * ceil_log2(n) + 7 * bhp_floor
        bh_first = _min_b_H(lambda b: _p2_eps_for(b_M, n, b, e_min) < eps_target - float(repudiation_p2(n, e_min)))
        if bh_first is None:
            continue
        if best is not None and 6 * n * bh_first + fixed > best.ell_P:
            continue
        best_n = None
        for e in range(e_min, n // 2):
            comb = float(repudiation_p2(n, e))
            bh_min = _min_b_H(lambda b: _p2_eps_for(b_M, n, b, e) < eps_target - comb)
            if bh_min is None:
                break
            ref = best_n.ell_P if best_n is not None else math.inf
            if 6 * n * bh_min + fixed > ref:
                break  # b_H only grows with e_max
            b_H = bh_min
            while b_H <= 256 and 6 * n * b_H + fixed <= ref:
                cand = _p2_point(b_M, n, e, b_H, eps_target)
                if cand is not None and (best_n is None or cand.key < best_n.key):
                    best_n = cand
                    ref = cand.ell_P
                b_H += 1
        if best_n is not None:
            frontier.append(best_n)
            if best is None or best_n.key < best.key:
                best = best_n
    if best is None:
        raise Infeasible("no feasible Protocol 2 parameters in range")
    if verbose:
        best.frontier = [r.to_row() for r in frontier]
    return best


# Protocol 3 -----------------------------------------------------------------


def p3_balanced_b_Hp(k: int, b_H: int, b_M: int) -> float:
    """b'_H that equalizes the authentication term with 2 e^(-k/32)."""
    y = asu_key_bits(b_M, b_H)
    return math.log2(k) + k / (32 * math.log(2)) + math.log2(y + ceil_log2(2 * k))


def _p3_point(b_M: int, k: int, b_H: int, eps_target: float) -> OptimizationResult | None:
    base = eps_p3(b_M, 2, k, b_H, 10**4, 1, 1)
    if base.total > eps_target:
        return None
    b_Hp = max(1, math.floor(p3_balanced_b_Hp(k, b_H, b_M)) - 2)
    while eps_p3(b_M, 2, k, b_H, b_Hp, 1, 1).total > eps_target:
        b_Hp += 1
    while b_Hp > 1 and eps_p3(b_M, 2, k, b_H, b_Hp - 1, 1, 1).total <= eps_target:
        b_Hp -= 1
    eps = eps_p3(b_M, 2, k, b_H, b_Hp, 1, 1)
    cost = cost_p3_N2(k, b_H, b_Hp, b_M)
    return OptimizationResult("p3", b_M, cost.ell_P, cost.ell_S, b_H, b_Hp, eps.eps_for, eps.eps_rep, k=k)


def optimize_p3(
    b_M: int, eps_target: float = DEFAULT_TARGET, k_range: Iterable[int] = range(64, 2049), b_H_range: Iterable[int] = range(2, 9)
) -> OptimizationResult:
    """Two receivers, one tolerated dishonest party, l_max = 1."""
    _check_target(eps_target)
    best: OptimizationResult | None = None
    ks = list(k_range)
    for b_H in b_H_range:
        if not b_M > b_H:
            continue
        y = asu_key_bits(b_M, b_H)
        for k in ks:
            floor_cost = 3 * k * y + k * ceil_log2(2 * k) + 7
            if best is not None and floor_cost > best.ell_P:
                break
            cand = _p3_point(b_M, k, b_H, eps_target)
            if cand is not None and (best is None or cand.key < best.key):
                best = cand
    if best is None:
        raise Infeasible("no feasible Protocol 3 parameters in range")
    return best


# sweep ----------------------------------------------------------------------

OPTIMIZERS = {"p1": optimize_p1, "p2": optimize_p2, "p3": optimize_p3}


def sweep(
    protocols: Sequence[str] = ("p1", "p2", "p3"),
    b_M_grid: Sequence[int] = SWEEP_GRID,
    eps_target: float = DEFAULT_TARGET,
) -> tuple[list[dict], list[str]]:
    """Optimize every (protocol, b_M); failures are logged and the sweep goes on."""
    if not b_M_grid:
        raise ValueError("empty b_M grid")
    rows, errors = [], []
    for proto in protocols:
        for b_M in b_M_grid:
            try:
                rows.append(OPTIMIZERS[proto](b_M, eps_target).to_row())
            except (Infeasible, ValueError) as exc:
                errors.append(f"{proto} b_M={b_M}: {exc}")
                rows.append({c: "" for c in CSV_COLUMNS} | {"protocol": proto, "b_M": b_M})
    return rows, errors


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
