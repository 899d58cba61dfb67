import csv
import io
import math

import numpy as np
import pytest

from qdsig.optimizer import (
    CSV_COLUMNS,
    SWEEP_GRID,
    Infeasible,
    brute_force_p1,
    optimize_p1,
    optimize_p2,
    optimize_p3,
    p1_estimates,
    rows_to_csv,
    sweep,
)
from qdsig.secbounds import cost_p1, cost_p2, cost_p3_N2, eps_p1, eps_p2, eps_p3

TARGET = 1e-10


@pytest.fixture(scope="module")
def sweep_rows():
    rows, errors = sweep()
    assert errors == []
    return rows


def _neighbours(b_H, b_Hp):
    for dh in (-1, 0, 1):
        for dp in (-1, 0, 1):
            if dh or dp:
                yield b_H + dh, b_Hp + dp


# Protocol 1 ----------------------------------------------------------------------


@pytest.mark.parametrize("b_M", [10**3, 10**6])
def test_p1_matches_brute_force(b_M):
    fast = optimize_p1(b_M)
    slow = brute_force_p1(b_M)
    assert fast.key == slow.key


def test_p1_reference_point():
    r = optimize_p1(10**6)
    assert 441 <= r.ell_P <= 445
    b_H_est, _ = p1_estimates(10**6, TARGET)
    assert abs(r.b_H - b_H_est) <= 2
    assert r.eps_for + r.eps_rep <= TARGET


def test_p1_locally_minimal():
    r = optimize_p1(10**6)
    for b_H, b_Hp in _neighbours(r.b_H, r.b_Hp):
        if eps_p1(10**6, b_H, b_Hp).total <= TARGET:
            assert cost_p1(b_H, b_Hp).ell_P >= r.ell_P


def test_p1_doubling_adds_one_bit_of_hash():
    steps = [optimize_p1(2**e).b_H for e in range(12, 24)]
    diffs = np.diff(steps)
    assert set(diffs) <= {0, 1, 2}
    assert np.mean(diffs == 1) >= 0.75


def test_p1_small_documents_rejected():
    with pytest.raises(ValueError):
        optimize_p1(64)


@pytest.mark.parametrize("opt", [optimize_p1, optimize_p2, optimize_p3])
def test_target_must_be_a_probability(opt):
    with pytest.raises(ValueError):
        opt(10**6, eps_target=0.0)


def test_p3_infeasible_range():
    with pytest.raises(Infeasible):
        optimize_p3(10**6, k_range=range(64, 100))


# Protocol 2 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def p2_result():
    return optimize_p2(10**6, verbose=True)


def test_p2_reference_point(p2_result):
    r = p2_result
    assert 0.5e4 <= r.ell_P <= 2e4
    assert 30 <= r.n <= 80
    assert r.eps_for + r.eps_rep <= TARGET


def test_p2_combinatorial_branch_within_budget(p2_result):
    from qdsig.secbounds import repudiation_p2

    assert float(repudiation_p2(p2_result.n, p2_result.e_max)) <= TARGET


def test_p2_locally_minimal(p2_result):
    r = p2_result
    for b_H, b_Hp in _neighbours(r.b_H, r.b_Hp):
        if eps_p2(10**6, r.n, b_H, b_Hp, r.e_max).total <= TARGET:
            assert cost_p2(r.n, b_H, b_Hp).ell_P >= r.ell_P


def test_p2_frontier_is_consistent(p2_result):
    front = p2_result.frontier
    assert front, "verbose mode emits the per-n frontier"
    assert min(int(row["ell_P"]) for row in front) == p2_result.ell_P
    for row in front:
        assert float(row["eps_for"]) + float(row["eps_rep"]) <= TARGET


def test_p2_no_better_point_on_coarse_scan(p2_result):
    # independent scan: every even n in [4, 120], every e_max, smallest feasible b_H, b'_H
    best = math.inf
    for n in range(4, 121, 2):
        for e in range(0, n // 2):
            for b_H in range(20, 60):
                ep = eps_p2(10**6, n, b_H, 200, e)
                if ep.total > TARGET:
                    continue
                b_Hp = next(b for b in range(20, 120) if eps_p2(10**6, n, b_H, b, e).total <= TARGET)
                best = min(best, cost_p2(n, b_H, b_Hp).ell_P)
                break
    assert p2_result.ell_P <= best


# Protocol 3 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def p3_result():
    return optimize_p3(10**6)


def test_p3_reference_point(p3_result):
    r = p3_result
    assert r.b_H == 2
    assert 754 <= r.k <= 764
    assert 6032 <= r.ell_S <= 6112
    assert r.ell_P == pytest.approx(1.1e5, rel=0.06)
    assert r.eps_for + r.eps_rep <= TARGET


def test_p3_locally_minimal(p3_result):
    r = p3_result
    for b_H, b_Hp in _neighbours(r.b_H, r.b_Hp):
        if b_H < 2:
            continue
        if eps_p3(10**6, 2, r.k, b_H, b_Hp, 1, 1).total <= TARGET:
            assert cost_p3_N2(r.k, b_H, b_Hp, 10**6).ell_P >= r.ell_P
    for k in (r.k - 1, r.k + 1):
        for b_Hp in range(r.b_Hp - 2, r.b_Hp + 3):
            if eps_p3(10**6, 2, k, 2, b_Hp, 1, 1).total <= TARGET:
                assert cost_p3_N2(k, 2, b_Hp, 10**6).ell_P >= r.ell_P


# sweep -----------------------------------------------------------------------------


def test_sweep_shape_and_schema(sweep_rows):
    text = rows_to_csv(sweep_rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert list(parsed[0]) == CSV_COLUMNS
    assert len(parsed) == 3 * 9
    for row in parsed:
        proto = row["protocol"]
        assert (row["n"] != "") == (proto == "p2")
        assert (row["k"] != "") == (proto == "p3")


def _column(rows, proto, col):
    return [int(r[col]) for r in rows if r["protocol"] == proto]


def test_sweep_p3_signature_constant(sweep_rows):
    ks = [int(r["k"]) for r in sweep_rows if r["protocol"] == "p3"]
    assert len(set(_column(sweep_rows, "p3", "ell_S"))) == 1
    assert all(abs(k - 759) <= 5 for k in ks)


@pytest.mark.parametrize("proto", ["p1", "p2"])
def test_sweep_signature_log_linear(sweep_rows, proto):
    x = np.log2(SWEEP_GRID)
    y = np.array(_column(sweep_rows, proto, "ell_S"), dtype=float)
    slope, icept = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - (slope * x + icept)) ** 2) / np.sum((y - y.mean()) ** 2)
    assert r2 > 0.99
    if proto == "p1":
        assert slope == pytest.approx(2.0, abs=0.15)


def test_sweep_ordering_and_monotonicity(sweep_rows):
    p1, p2, p3 = (_column(sweep_rows, p, "ell_P") for p in ("p1", "p2", "p3"))
    assert all(a < b < c for a, b, c in zip(p1, p2, p3))
    for col in (p1, p2, p3):
        assert all(a <= b for a, b in zip(col, col[1:]))


def test_sweep_empty_grid():
    with pytest.raises(ValueError):
        sweep(("p1",), [])


def test_sweep_records_failures():
    rows, errors = sweep(("p1",), [50, 1000])
    assert len(rows) == 2 and len(errors) == 1
    assert rows[0]["ell_P"] == ""
